"""Atomic file writers shared by every exporter."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import pandas as pd


def _atomic_write_text(text: str, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv_atomic(frame: pd.DataFrame, path, index: bool = False) -> Path:
    # pandas writes floats with repr(), i.e. shortest round-trip decimal text
    return _atomic_write_text(frame.to_csv(index=index, lineterminator="\n"), path)


def write_json_atomic(payload, path) -> Path:
    return _atomic_write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n", path)


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "isoformat"):
        return obj.isoformat()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
