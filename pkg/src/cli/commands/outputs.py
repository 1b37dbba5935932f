"""Helpers that turn file-system failures into OutputError."""

import json
from pathlib import Path
from typing import Any, Dict

import pandas as pd

from ...exceptions import OutputError


def ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError("Could not create output directory",
                          details={"path": str(path), "error": str(e)}) from e
    return path


def write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputError("Could not write file", details={"path": str(path), "error": str(e)}) from e


def write_json(path: Path, data: Dict[str, Any]) -> None:
    write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_frame(frame: pd.DataFrame, path: Path) -> None:
    """CSV without the index; floats keep their round-trip repr."""
    try:
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise OutputError("Could not write table", details={"path": str(path), "error": str(e)}) from e
