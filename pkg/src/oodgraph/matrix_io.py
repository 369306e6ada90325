"""Dense matrix CSV files with a one-line ``rows,cols,kind`` header.

Values are written with 17 significant digits so a write/read cycle
reproduces every float64 bit for bit.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps_matrix(arr: np.ndarray, kind: str) -> str:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    rows, cols = arr.shape
    buf = io.StringIO()
    buf.write(f"rows={rows},cols={cols},kind={kind}\n")
    for row in arr:
        buf.write(",".join(fmt(v) for v in row))
        buf.write("\n")
    return buf.getvalue()


def loads_matrix(text: str) -> tuple[np.ndarray, str]:
    lines = text.splitlines()
    header = dict(part.split("=", 1) for part in lines[0].split(","))
    rows, cols = int(header["rows"]), int(header["cols"])
    data = [[float(v) for v in rec] for rec in csv.reader(lines[1:]) if rec]
    arr = np.array(data, dtype=float).reshape(rows, cols)
    return arr, header["kind"]


def write_matrix(path: str | Path, arr: np.ndarray, kind: str) -> Path:
    path = Path(path)
    path.write_text(dumps_matrix(arr, kind))
    return path


def read_matrix(path: str | Path) -> tuple[np.ndarray, str]:
    return loads_matrix(Path(path).read_text())
