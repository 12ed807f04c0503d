# tools/reports.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# Turns analysis results into report files: JSON envelopes and CSV tables.
#
# Determinism rule: every float is written with 17 significant digits
# (settings.REPORT_PRECISION), keys keep insertion order, and numpy values
# are converted to plain Python first. The same inputs therefore always
# produce the same bytes.
#
# Reports are written as
#   {"kind": ..., "command": ..., "params": {...}, "result": {...}}
# and read_report() parses them back for round-trip checks.
# ============================================================================

import csv
import io
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from config import settings
from core.errors import InvalidInputError


# ============================================================================
# CONVERSION TO PLAIN DATA
# ============================================================================

def _format_float(value: float):
    """Round to REPORT_PRECISION significant digits; non-finite become strings."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(f"{value:.{settings.REPORT_PRECISION}g}")


def to_plain(value):
    """Recursively convert numpy arrays, dataclasses and tuples to JSON-ready data."""
    if is_dataclass(value) and not isinstance(value, type):
        return to_plain(asdict(value))
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _format_float(float(value))
    if isinstance(value, complex):
        return {"re": _format_float(value.real), "im": _format_float(value.imag)}
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, Path):
        return value.as_posix()
    raise InvalidInputError(f"cannot serialize value of type {type(value).__name__}")


# ============================================================================
# JSON REPORTS
# ============================================================================

def build_report(kind: str, command: str, params: dict, result) -> dict:
    return {
        "kind": kind,
        "command": command,
        "params": to_plain(params),
        "result": to_plain(result),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def write_json_report(report: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(report), encoding="utf-8")
    return path


def read_report(path) -> dict:
    """Parse a report written by write_json_report and check its envelope."""
    path = Path(path)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read report {path}: {exc}") from exc
    missing = {"kind", "command", "params", "result"} - set(report)
    if missing:
        raise InvalidInputError(f"report {path} is missing keys {sorted(missing)}")
    return report


# ============================================================================
# CSV TABLES
# ============================================================================

def rows_to_csv(header: list, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(to_plain(list(row)))
    return buffer.getvalue()


def write_csv(header: list, rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(header, rows), encoding="utf-8")
    return path
