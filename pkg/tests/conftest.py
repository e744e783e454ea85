from __future__ import annotations

import copy
import json
import shutil
import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent / "fixtures"
sys.path.insert(0, str(FIXTURES))

from generate import BASE  # noqa: E402

from designctl.modelcard import card_from_dict  # noqa: E402


@pytest.fixture
def base_dict() -> dict:
    return copy.deepcopy(BASE)


@pytest.fixture
def base_card(base_dict):
    return card_from_dict(base_dict)


@pytest.fixture
def card_manifest() -> dict:
    return json.loads((FIXTURES / "cards" / "manifest.json").read_text())


@pytest.fixture
def repo(tmp_path) -> Path:
    """A private copy of the fixture repository."""
    target = tmp_path / "repo"
    shutil.copytree(FIXTURES / "repo", target)
    return target
