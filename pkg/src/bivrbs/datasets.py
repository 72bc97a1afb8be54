"""Bundled example data."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .estimate import BivariateSample

__all__ = ["stiffness_path", "load_stiffness"]


def stiffness_path() -> Path:
    """Path of the bundled lumber stiffness CSV (columns shock, vibration)."""
    return Path(str(resources.files("bivrbs") / "data" / "stiffness.csv"))


def load_stiffness() -> BivariateSample:
    """The 30 paired stiffness measurements as a :class:`BivariateSample`."""
    from .cli import ingest_csv

    return ingest_csv(stiffness_path())
