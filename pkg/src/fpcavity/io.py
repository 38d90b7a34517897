"""Delimited-text, graymap and report writers.

All numeric output uses '.' decimals and fixed significant digits so
identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DIGITS = 10


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{DIGITS}g}"
    return str(value)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_table(path, columns: int = 2) -> np.ndarray:
    """Numeric columns of a delimited file, skipping '#' lines and a header row."""
    from .errors import InputFormatError

    rows = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").replace(";", " ").split()
        try:
            vals = [float(p) for p in parts[:columns]]
        except ValueError:
            if not rows:
                continue  # header
            raise InputFormatError(f"{path}:{lineno}: non-numeric value") from None
        if len(vals) < columns:
            raise InputFormatError(f"{path}:{lineno}: expected {columns} columns")
        rows.append(vals)
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    return np.array(rows)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{DIGITS}g}")
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def write_report(path, report: dict) -> Path:
    path = Path(path)
    path.write_text(dumps_report(report))
    return path


def write_pgm(path, image: np.ndarray, metadata: dict | None = None, maxval: int = 65535) -> Path:
    """Plain (P2) graymap scaled to ``maxval``; metadata goes to a JSON sidecar."""
    img = np.asarray(image, dtype=float)
    peak = img.max()
    scaled = np.zeros(img.shape, dtype=int) if peak <= 0 else np.rint(np.clip(img / peak, 0, 1) * maxval).astype(int)
    rows, cols = scaled.shape
    lines = ["P2", f"{cols} {rows}", str(maxval)]
    lines += [" ".join(str(v) for v in row) for row in scaled]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    if metadata is not None:
        write_report(path.with_suffix(".json"), {**metadata, "maxval": maxval})
    return path


def read_pgm(path) -> np.ndarray:
    from .errors import InputFormatError

    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise InputFormatError(f"{path}: not a plain graymap")
    cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array(tokens[4:4 + rows * cols], dtype=float)
    if data.size != rows * cols:
        raise InputFormatError(f"{path}: truncated pixel data")
    return data.reshape(rows, cols) / maxval
