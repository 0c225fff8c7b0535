"""Deterministic serialization and file I/O.

All floats in reports, checkpoints, and CSV tables are written with 17
significant digits so identical runs produce byte-identical files and every
value round-trips exactly.
"""

from __future__ import annotations

import hashlib
import os
from configparser import ConfigParser

import numpy as np

from .errors import InputFormatError

__all__ = [
    "format_float",
    "dumps_json",
    "write_csv",
    "read_point_cloud",
    "write_point_cloud",
    "read_config",
    "spec_hash",
]


def format_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("non-finite value in serialized output")
    return format(float(x), ".17g")


def _json_fragment(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        import json as _json
        out.append(_json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            _json_fragment(str(k), out)
            out.append(": ")
            _json_fragment(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, v in enumerate(seq):
            if i:
                out.append(", ")
            _json_fragment(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    """JSON text with floats at 17 significant digits, insertion order kept."""
    out: list[str] = []
    _json_fragment(obj, out)
    return "".join(out)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def write_csv(path: str, header: list[str], rows) -> None:
    """Plain comma-separated table with a header row; floats at 17 digits."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_point_cloud(path: str) -> np.ndarray:
    """Point cloud from CSV: one point per row, '#' comment lines allowed,
    every row the same column count."""
    rows: list[list[float]] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    rows.append([float(tok) for tok in line.split(",")])
                except ValueError as exc:
                    raise InputFormatError(f"{path}:{lineno}: {exc}") from exc
                if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                    raise InputFormatError(
                        f"{path}:{lineno}: expected {len(rows[0])} columns, "
                        f"got {len(rows[-1])}")
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InputFormatError(f"{path}: non-finite values")
    return arr


def write_point_cloud(path: str, X: np.ndarray) -> None:
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in X:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def read_config(path: str) -> dict[str, dict[str, str]]:
    """Flat key=value config with sections; values stay strings, callers
    coerce. Keys outside any section land in section ''. """
    parser = ConfigParser()
    parser.optionxform = str  # keep case
    try:
        with open(path, "r", encoding="utf-8") as fh:
            content = fh.read()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    try:
        parser.read_string("[global]\n" + content)
    except Exception as exc:
        raise InputFormatError(f"{path}: {exc}") from exc
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        name = "" if section == "global" else section
        out[name] = dict(parser.items(section))
    return out


def spec_hash(obj) -> str:
    """Stable hash of a JSON-serializable spec (sorted keys)."""
    def canon(o):
        if isinstance(o, dict):
            return {k: canon(o[k]) for k in sorted(o)}
        if isinstance(o, (list, tuple)):
            return [canon(v) for v in o]
        return o
    return hashlib.sha256(dumps_json(canon(obj)).encode()).hexdigest()[:16]


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
