# core/matrix_io.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# Reads and writes SquareMatrix objects in the three file formats the
# command line accepts:
#
#   .csv   dense rows, one matrix row per line
#   .tsv   edge list "i<TAB>j<TAB>weight", 0-based, first line "n=<count>"
#   .json  {"n": 3, "entries": [[...], ...], "labels": [...]}   (labels optional)
#
# JSON is the lossless one: Python's json module writes floats with repr(),
# so a matrix written and read back is bit-for-bit identical.
#
# Every parsing problem becomes an InvalidInputError with the file name and
# line number, so the CLI can exit with code 2 instead of a traceback.
# ============================================================================

import csv
import json
import math
from pathlib import Path

import numpy as np

from core.errors import InvalidInputError
from core.matrix_core import SquareMatrix


# ============================================================================
# READING
# ============================================================================

def read_matrix(path) -> SquareMatrix:
    """Load a matrix, choosing the parser from the file extension."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"matrix file not found: {path}")
    text = path.read_text(encoding="utf-8")
    suffix = path.suffix.lower()
    if suffix == ".json":
        return parse_json_matrix(json_loads(text, path))
    if suffix in (".tsv", ".edges", ".txt"):
        return parse_edge_list(text, source=str(path))
    if suffix == ".csv":
        return parse_dense_csv(text, source=str(path))
    raise InvalidInputError(f"unrecognized matrix file extension {suffix!r} for {path}")


def json_loads(text: str, source) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{source}: invalid JSON ({exc})") from exc


def parse_json_matrix(document) -> SquareMatrix:
    """Build a matrix from the {"n", "entries", "labels"?} object."""
    if not isinstance(document, dict) or "entries" not in document:
        raise InvalidInputError('matrix JSON must be an object with an "entries" array')
    unknown = set(document) - {"n", "entries", "labels"}
    if unknown:
        raise InvalidInputError(f"unknown keys in matrix JSON: {sorted(unknown)}")
    try:
        entries = np.array(document["entries"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"matrix entries are not numeric: {exc}") from exc
    if entries.ndim != 2:
        raise InvalidInputError("matrix entries must be a list of equal-length rows")
    if "n" in document:
        _check_count(document["n"], entries.shape[0])
    return SquareMatrix(entries, document.get("labels"))


def _check_count(n, rows: int):
    # bool is an int subclass; 2.0 is fine, 2.7 is not
    if isinstance(n, bool) or not isinstance(n, (int, float)) or not math.isfinite(n) or n != int(n):
        raise InvalidInputError(f'"n" must be a whole number, got {n!r}')
    if int(n) != rows:
        raise InvalidInputError(f'"n" is {n} but entries has {rows} rows')


def parse_dense_csv(text: str, source: str = "<csv>") -> SquareMatrix:
    rows = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            rows.append([float(cell) for cell in row])
        except ValueError as exc:
            raise InvalidInputError(f"{source}:{lineno}: non-numeric cell ({exc})") from exc
    if not rows:
        raise InvalidInputError(f"{source}: no matrix rows found")
    if len({len(r) for r in rows}) != 1:
        raise InvalidInputError(f"{source}: rows have different lengths")
    return SquareMatrix(np.array(rows))


def parse_edge_list(text: str, source: str = "<tsv>") -> SquareMatrix:
    lines = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if not lines or not lines[0].strip().startswith("n="):
        raise InvalidInputError(f'{source}: edge list must start with a header line "n=<count>"')
    try:
        n = int(lines[0].strip()[2:])
    except ValueError as exc:
        raise InvalidInputError(f"{source}: bad node count in header {lines[0]!r}") from exc
    if n < 1:
        raise InvalidInputError(f"{source}: node count must be positive")

    entries = np.zeros((n, n))
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 3:
            raise InvalidInputError(f"{source}:{lineno}: expected 'i<TAB>j<TAB>weight'")
        try:
            i, j, weight = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise InvalidInputError(f"{source}:{lineno}: {exc}") from exc
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidInputError(f"{source}:{lineno}: node index out of range 0..{n - 1}")
        entries[i, j] = weight
    return SquareMatrix(entries)


# ============================================================================
# WRITING
# ============================================================================

def matrix_to_json(m: SquareMatrix) -> dict:
    document = {"n": m.n, "entries": m.entries.tolist()}
    if m.labels is not None:
        document["labels"] = list(m.labels)
    return document


def write_matrix(m: SquareMatrix, path) -> Path:
    """Write in the format implied by the extension (.json, .csv or .tsv)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    suffix = path.suffix.lower()
    if suffix == ".json":
        path.write_text(json.dumps(matrix_to_json(m)), encoding="utf-8")
    elif suffix == ".csv":
        lines = [",".join(repr(float(v)) for v in row) for row in m.entries]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif suffix in (".tsv", ".edges", ".txt"):
        lines = [f"n={m.n}"]
        rows, cols = np.nonzero(m.entries)
        lines.extend(f"{i}\t{j}\t{float(m.entries[i, j])!r}" for i, j in zip(rows, cols))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise InvalidInputError(f"unrecognized matrix file extension {suffix!r}")
    return path
