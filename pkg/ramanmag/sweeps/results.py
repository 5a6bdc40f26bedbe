"""
Result Files

CSV tables (RFC 4180, CRLF line ends, 12 significant digits), JSON summaries
and run manifests, all written atomically; plus the numeric comparison used
to verify a run against a baseline table.
"""
import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .. import __version__

logger = logging.getLogger(__name__)

CSV_COLUMNS: Dict[str, Tuple[str, ...]] = {
    "laser_curve": ("kappa_r_hz", "rabi_hz", "gamma_g_hz", "detuning_hz", "pump_power_w",
                    "output_power_w", "beta_per_m", "lambda_p_hz"),
    "response": ("kappa_r_hz", "rabi_hz", "gamma_g_hz", "detuning_hz", "pump_power_w", "output_power_w"),
    "threshold_shift": ("kappa_r_hz", "rabi_hz", "gamma_g_hz", "threshold_resonant_w",
                        "threshold_detuned_w", "shift_percent"),
    "sensitivity": ("rabi_hz", "gamma_g_hz", "detuning_hz", "output_power_w", "eta_t_per_sqrt_hz"),
}


def format_value(value: float) -> str:
    """Scientific notation with 12 significant digits"""
    return f"{float(value):.11e}"


def json_number(value: Optional[float]) -> Optional[float]:
    """JSON has no inf/nan: non-finite values become null"""
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Write via a temporary file in the same directory, then rename over the target"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} values, expected {len(columns)}")
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_csv(path: Union[str, Path], columns: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    return atomic_write_text(path, render_csv(columns, rows))


def write_json(path: Union[str, Path], data: Mapping[str, Any]) -> Path:
    return atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n")


def build_manifest(config_hash: str, kind: str, name: str, tasks: List[Dict[str, Any]],
                   wall_time: float, timestamp: str) -> Dict[str, Any]:
    """
    Run manifest: what was run, by which version, and how each task ended.

    Args:
        tasks: dicts with index, parameters, status, error, wall_time
    """
    failed = [t for t in tasks if t["status"] != "completed"]
    return {
        "config_hash": config_hash,
        "version": __version__,
        "timestamp": timestamp,
        "name": name,
        "kind": kind,
        "task_count": len(tasks),
        "failed_count": len(failed),
        "wall_time_seconds": wall_time,
        "tasks": tasks,
    }


def read_csv(path: Union[str, Path]) -> Tuple[List[str], List[List[str]]]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            return [], []
        return header, [row for row in reader]


@dataclass
class Comparison:
    """Outcome of a baseline comparison; on failure, where it first diverged"""

    passed: bool
    message: str
    row: Optional[int] = None
    column: Optional[str] = None
    expected: Optional[float] = None
    actual: Optional[float] = None


def _cells_match(expected: float, actual: float, rtol: float) -> bool:
    if math.isnan(expected) or math.isnan(actual):
        return math.isnan(expected) and math.isnan(actual)
    if math.isinf(expected) or math.isinf(actual):
        return expected == actual
    return math.isclose(expected, actual, rel_tol=rtol, abs_tol=0.0)


def compare_tables(baseline: Union[str, Path], candidate: Union[str, Path],
                   rtol: Union[float, Mapping[str, float]] = 1e-6) -> Comparison:
    """
    Compare two CSV tables cell by cell with a relative tolerance per column.

    Args:
        rtol: one tolerance for every column, or a mapping column -> tolerance
            (columns missing from the mapping use 1e-6)
    """
    expected_header, expected_rows = read_csv(baseline)
    actual_header, actual_rows = read_csv(candidate)

    if expected_header != actual_header:
        return Comparison(False, f"header differs: baseline {expected_header} vs run {actual_header}")
    if len(expected_rows) != len(actual_rows):
        return Comparison(False, f"row count differs: baseline {len(expected_rows)} vs run {len(actual_rows)}")

    def tolerance(column: str) -> float:
        if isinstance(rtol, Mapping):
            return float(rtol.get(column, 1e-6))
        return float(rtol)

    for r, (expected_row, actual_row) in enumerate(zip(expected_rows, actual_rows), start=1):
        for column, e_text, a_text in zip(expected_header, expected_row, actual_row):
            try:
                e_value, a_value = float(e_text), float(a_text)
            except ValueError:
                if e_text == a_text:
                    continue
                return Comparison(False, f"row {r}, column {column}: {e_text!r} != {a_text!r}", r, column)
            if not _cells_match(e_value, a_value, tolerance(column)):
                message = (f"row {r}, column {column}: baseline {e_value:.11e}, run {a_value:.11e} "
                           f"(rtol {tolerance(column):g})")
                return Comparison(False, message, r, column, e_value, a_value)

    return Comparison(True, f"{len(expected_rows)} rows match")
