"""JSON loading with positioned diagnostics and access to the bundled fixtures."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

FIXTURES = ("ex1_partition", "ex1_pwq", "ex2_partition", "ex2_system", "ex2_pwq_rounded")


def load_json(path) -> dict:
    """Parse a JSON file; syntax errors are reported with line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"{path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return Path(str(resources.files("pwqcont") / "fixtures" / f"{name}.json"))


def load_fixture(name: str) -> dict:
    return load_json(fixture_path(name))


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"{type(obj).__name__} is not JSON serialisable")


def dumps(report: dict) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation, trailing newline)."""
    return json.dumps(report, indent=2, sort_keys=True, default=_plain, allow_nan=True) + "\n"
