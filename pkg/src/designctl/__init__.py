"""Continuous design-control toolkit for ML components of regulated medical software."""

__version__ = "0.1.0"
