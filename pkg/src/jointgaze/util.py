"""Small shared helpers: deterministic number formatting and atomic writes."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path


def fmt_num(value) -> str:
    """Shortest exact decimal form; integral floats render without '.0'."""
    v = float(value)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def fmt_bool(value) -> str:
    return "true" if value else "false"


def parse_bool(text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"expected 'true' or 'false', got {text!r}")


def write_atomic(path: str | Path, text: str) -> Path:
    """Write text to path via a temp file + rename so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path
