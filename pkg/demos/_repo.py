"""Shared setup: a scratch copy of the fixture repository."""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

FIXTURE_REPO = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "repo"


def scratch_repo() -> Path:
    root = Path(tempfile.mkdtemp(prefix="designctl-demo-")) / "repo"
    shutil.copytree(FIXTURE_REPO, root)
    return root
