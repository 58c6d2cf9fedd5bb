"""
File formats: field grids, per-step reports, timing series and summaries.

Floats are written with 17 significant digits so every file round-trips
exactly.
"""

import io
import re
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np
import pandas as pd

from src.engines.harness.fields import FieldGrid
from src.kernel.errors import FieldFormatError
from src.kernel.gp_core import Dataset
from src.schemas.experiment import (
    REPORT_COLUMNS,
    ExperimentReport,
    Method,
    RobustnessReport,
    StepRecord,
    TimingSeries,
)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"
FIELD_HEADER = ["origin_x", "origin_y", "cell_w", "cell_h", "rows", "cols", "noise_sd"]
TIMING_COLUMNS = ["method", "run", "t", "step_ms"]
SUMMARY_COLUMNS = ["method", "seed", "mean_error", "final_error", "mean_step_ms"]
ERROR_CURVE_COLUMNS = ["method", "t", "mean_error"]
SAMPLE_COLUMNS = ["x", "y", "z"]
ROBUSTNESS_COLUMNS = ["field", "mean_error"]
LOCATION_COLUMNS = ["x", "y"]

_PARSER_LINE = re.compile(r"line (\d+)")


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FieldFormatError(f"cannot read {path}: {e}") from e


def _split_row(line: str) -> List[str]:
    return [cell.strip() for cell in line.split(",")]


def load_field_csv(path: PathLike) -> FieldGrid:
    """
    Parse a field grid file.

    Line 1 holds the header names, line 2 their values, and the next
    ``rows`` lines hold ``cols`` values each (row i is y index i).
    """
    lines = _read_text(path).splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise FieldFormatError("file is empty", line=1)
    if _split_row(lines[0]) != FIELD_HEADER:
        raise FieldFormatError(f"header must be {','.join(FIELD_HEADER)}", line=1)
    if len(lines) < 2:
        raise FieldFormatError("missing grid metadata", line=2)

    meta = _split_row(lines[1])
    if len(meta) != len(FIELD_HEADER):
        raise FieldFormatError(f"expected {len(FIELD_HEADER)} metadata values", line=2)
    try:
        ox, oy, cw, ch, noise_sd = (float(meta[i]) for i in (0, 1, 2, 3, 6))
        rows, cols = int(meta[4]), int(meta[5])
    except ValueError as e:
        raise FieldFormatError(f"bad metadata value: {e}", line=2) from e
    if rows < 1 or cols < 1:
        raise FieldFormatError("rows and cols must be positive", line=2)

    grid_lines = lines[2:]
    if not grid_lines:
        raise FieldFormatError("no grid rows", line=3)
    if len(grid_lines) != rows:
        raise FieldFormatError(
            f"expected {rows} grid rows, found {len(grid_lines)}", line=3 + min(rows, len(grid_lines))
        )
    try:
        frame = pd.read_csv(
            io.StringIO("\n".join(grid_lines)), header=None, skip_blank_lines=False,
            float_precision="round_trip",
        )
    except pd.errors.ParserError as e:
        match = _PARSER_LINE.search(str(e))
        line = 2 + int(match.group(1)) if match else None
        raise FieldFormatError(f"expected {cols} values per row", line=line) from e
    if frame.shape[1] != cols:
        raise FieldFormatError(f"expected {cols} values per row, found {frame.shape[1]}", line=3)

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        first = int(np.flatnonzero(bad)[0])
        raise FieldFormatError(f"row must hold {cols} numeric values", line=3 + first)
    try:
        return FieldGrid((ox, oy), (cw, ch), numeric.to_numpy(dtype=float), noise_sd)
    except ValueError as e:
        raise FieldFormatError(str(e), line=2) from e


def save_field_csv(field: FieldGrid, path: PathLike) -> None:
    meta = pd.DataFrame(
        [{
            "origin_x": field.origin[0],
            "origin_y": field.origin[1],
            "cell_w": field.cell_size[0],
            "cell_h": field.cell_size[1],
            "rows": field.rows,
            "cols": field.cols,
            "noise_sd": field.measurement_noise_sd,
        }],
        columns=FIELD_HEADER,
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        meta.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        pd.DataFrame(field.values).to_csv(
            fh, header=False, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
        )


def load_samples_csv(path: PathLike) -> Dataset:
    """Scattered measurements with columns x,y,z."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FieldFormatError(f"cannot parse samples {path}: {e}") from e
    if list(frame.columns) != SAMPLE_COLUMNS:
        raise FieldFormatError(f"header must be {','.join(SAMPLE_COLUMNS)}", line=1)
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        raise FieldFormatError("sample rows must be numeric", line=2 + int(np.flatnonzero(bad)[0]))
    return Dataset(numeric[["x", "y"]].to_numpy(float), numeric["z"].to_numpy(float))


def _write(frame: pd.DataFrame, path: PathLike) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def save_report_csv(records: Iterable[StepRecord], path: PathLike) -> None:
    _write(pd.DataFrame([r.model_dump() for r in records], columns=REPORT_COLUMNS), path)


def load_report_csv(path: PathLike) -> List[StepRecord]:
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FieldFormatError(f"cannot parse report {path}: {e}") from e
    if list(frame.columns) != REPORT_COLUMNS:
        raise FieldFormatError(f"header must be {','.join(REPORT_COLUMNS)}", line=1)
    records = []
    for i, row in enumerate(frame.to_dict(orient="records")):
        try:
            records.append(StepRecord(**row))
        except ValueError as e:
            raise FieldFormatError(str(e), line=2 + i) from e
    return records


def save_timing_csv(series: Iterable[TimingSeries], path: PathLike) -> None:
    rows = [
        {"method": s.method.value, "run": s.run, "t": t, "step_ms": ms}
        for s in series
        for t, ms in zip(s.t, s.step_ms)
    ]
    _write(pd.DataFrame(rows, columns=TIMING_COLUMNS), path)


def save_summary_csv(reports: Dict[Method, ExperimentReport], path: PathLike) -> None:
    rows = [
        {
            "method": method.value,
            "seed": run.seed,
            "mean_error": run.mean_error,
            "final_error": run.final_error,
            "mean_step_ms": run.mean_step_ms,
        }
        for method, report in reports.items()
        for run in report.runs
    ]
    _write(pd.DataFrame(rows, columns=SUMMARY_COLUMNS), path)


def save_error_curve_csv(reports: Dict[Method, ExperimentReport], path: PathLike) -> None:
    """Mean error at each time step, averaged over runs."""
    rows = [
        {"method": method.value, "t": t, "mean_error": err}
        for method, report in reports.items()
        for t, err in enumerate(report.error_by_step, 1)
    ]
    _write(pd.DataFrame(rows, columns=ERROR_CURVE_COLUMNS), path)


def save_robustness_csv(report: RobustnessReport, path: PathLike) -> None:
    rows = [{"field": str(m), "mean_error": e} for m, e in enumerate(report.single_field_errors)]
    rows.append({"field": "all", "mean_error": report.multi_field_error})
    _write(pd.DataFrame(rows, columns=ROBUSTNESS_COLUMNS), path)


def save_locations_csv(locations: np.ndarray, path: PathLike) -> None:
    """Support sets and candidate pools, one x,y row per location."""
    _write(pd.DataFrame(np.asarray(locations, dtype=float).reshape(-1, 2), columns=LOCATION_COLUMNS), path)


def load_locations_csv(path: PathLike) -> np.ndarray:
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FieldFormatError(f"cannot parse locations {path}: {e}") from e
    if list(frame.columns) != LOCATION_COLUMNS:
        raise FieldFormatError(f"header must be {','.join(LOCATION_COLUMNS)}", line=1)
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        raise FieldFormatError("location rows must be numeric", line=2 + int(np.flatnonzero(bad)[0]))
    return numeric.to_numpy(float)
