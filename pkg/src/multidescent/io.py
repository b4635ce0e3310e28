"""Matrix files and generator manifests.

Two matrix formats are supported: plain CSV of entries (one row per line)
and a whitespace format whose first line is ``rows cols``. The format is
picked from the file extension: ``.csv`` is CSV, anything else whitespace.
Manifests are INI files written next to generated matrices.
"""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .exceptions import ParseError
from .spectral import as_dense

REAL_FMT = "%.17g"  # round-trips a double exactly


def _is_csv(path) -> bool:
    return Path(path).suffix.lower() == ".csv"


def write_matrix(path, M) -> None:
    M = as_dense(M)
    path = Path(path)
    if _is_csv(path):
        np.savetxt(path, M, fmt=REAL_FMT, delimiter=",")
        return
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        np.savetxt(fh, M, fmt=REAL_FMT)


def read_matrix(path) -> np.ndarray:
    """Read a matrix in either format; malformed input raises ParseError."""
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if _is_csv(path):
        rows = [ln.split(",") for ln in lines if ln.strip()]
        start = 1
    else:
        body = [(i, ln) for i, ln in enumerate(lines, 1) if ln.strip()]
        if not body:
            raise ParseError("empty matrix file")
        head = body[0][1].split()
        try:
            shape = tuple(int(x) for x in head)
        except ValueError:
            raise ParseError("header must be 'rows cols'", body[0][0]) from None
        if len(shape) != 2 or min(shape) < 0:
            raise ParseError("header must be 'rows cols'", body[0][0])
        rows = [ln.split() for _, ln in body[1:]]
        start = body[0][0] + 1
    try:
        data = [[float(x) for x in r] for r in rows]
    except ValueError as exc:
        bad = next(i for i, r in enumerate(rows) if not _all_float(r))
        raise ParseError(f"non-numeric entry ({exc})", start + bad) from None
    widths = {len(r) for r in data}
    if len(widths) > 1:
        raise ParseError("ragged rows")
    M = np.array(data, dtype=float).reshape(len(data), widths.pop() if widths else 0)
    if not _is_csv(path) and M.shape != shape:
        raise ParseError(f"header says {shape[0]}x{shape[1]}, body is {M.shape[0]}x{M.shape[1]}")
    return as_dense(M)


def _all_float(tokens) -> bool:
    try:
        [float(x) for x in tokens]
    except ValueError:
        return False
    return True


def write_manifest(path, sections: dict[str, dict[str, object]]) -> None:
    cp = configparser.ConfigParser()
    for name, items in sections.items():
        cp[name] = {k: str(v) for k, v in items.items()}
    with open(path, "w") as fh:
        cp.write(fh)


def read_manifest(path) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not cp.read(path):
        raise FileNotFoundError(path)
    return {name: dict(cp[name]) for name in cp.sections()}


def parse_list(text: str, cast=float) -> tuple:
    """``"1, 2,3"`` -> ``(1, 2, 3)``; empty text gives ``()``."""
    return tuple(cast(x) for x in str(text).replace(",", " ").split())
