import csv
import io
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import stats

from app.core.errors import FitError
from app.core.fock import state_fidelity
from app.core.schemas import (
    REPORT_COLUMNS,
    CircuitIR,
    FitResult,
    Postselect,
    ReportRow,
    RunConfig,
    ScatteringModel,
)
from app.modules.circuit_lang import load_circuit
from app.modules.ideal_backend import run_circuit
from app.modules.timebin import (
    NO_SCATTERING,
    BinnedLayout,
    outcome_metrics,
    run_binned_circuit,
    without_postselection,
)
from app.utils.config import get_config
from app.utils.logger import get_logger, run_context

logger = get_logger(__name__)

FIT_MIN_ROWS = 3


@dataclass
class RunResult:
    """Rows of one run plus the context they were produced in."""

    run_id: str
    circuit: CircuitIR
    rows: List[ReportRow]
    total_time_ms: float = 0.0


def _clamp(value: float) -> float:
    return min(max(value, 0.0), 1.0)


def _elapsed_ms(start: float, record_timing: bool) -> float:
    return (time.perf_counter() - start) * 1000.0 if record_timing else 0.0


def _ideal_row(ir: CircuitIR, record_timing: bool) -> ReportRow:
    start = time.perf_counter()
    state = run_circuit(ir)
    metrics = outcome_metrics(state, BinnedLayout(ir.mode_count, 1))
    return ReportRow(
        n=1,
        coincidence=metrics.coincidence,
        bunching=metrics.bunching,
        scattered=0.0,
        fidelity=1.0,
        wall_time_ms=_elapsed_ms(start, record_timing),
    )


def _binned_row(ir: CircuitIR, n: int, model: ScatteringModel, record_timing: bool) -> ReportRow:
    # Heralded circuits: coincidence and bunching describe the heralded state, scattered is
    # the sink mass before post-selection drops it.
    start = time.perf_counter()
    state = run_binned_circuit(ir, n, model, normalize=False)
    ideal = run_binned_circuit(ir, n, NO_SCATTERING, normalize=False)
    metrics = outcome_metrics(state.normalized(), BinnedLayout(ir.mode_count, n))
    scattered = metrics.scattered
    if any(isinstance(e, Postselect) for e in ir.elements):
        scattered = _clamp(run_binned_circuit(without_postselection(ir), n, model).scattered_probability)
        logger.info(f"n={n}: heralding success={state.norm_squared:.6g} (scattering-free {ideal.norm_squared:.6g})")
    return ReportRow(
        n=n,
        coincidence=metrics.coincidence,
        bunching=metrics.bunching,
        scattered=scattered,
        fidelity=_clamp(state_fidelity(ideal, state)),
        wall_time_ms=_elapsed_ms(start, record_timing),
    )


def run_experiment(config: RunConfig) -> RunResult:
    """
    Load the circuit and produce one row per n (a single row for the ideal back-end).

    Raises:
        FileNotFoundError: circuit file missing
        CircuitError: parse or validation diagnostics
        CapacityError: numeric cap exceeded
    """
    with run_context() as run_id:
        start = time.perf_counter()

        ir = load_circuit(config.circuit_path)
        logger.info(f"Run started: backend={config.backend} n={config.n_list} p_scatter={config.p_scatter}")

        rows: List[ReportRow] = []
        if config.backend == "ideal":
            rows.append(_ideal_row(ir, config.record_timing))
        else:
            model = ScatteringModel.from_probability(config.p_scatter)
            for n in config.n_list:
                row = _binned_row(ir, n, model, config.record_timing)
                logger.info(
                    f"n={n}: scattered={row.scattered:.6g} fidelity={row.fidelity:.6g} [{row.wall_time_ms:.1f}ms]"
                )
                rows.append(row)

        total_ms = (time.perf_counter() - start) * 1000.0
        logger.info(f"Run completed: {len(rows)} rows [total: {total_ms:.1f}ms]")
    return RunResult(run_id=run_id, circuit=ir, rows=rows, total_time_ms=total_ms)


def run(config: RunConfig) -> List[ReportRow]:
    return run_experiment(config).rows


# CSV REPORTS
def _format_value(value: Union[int, float], digits: int) -> str:
    if isinstance(value, int):
        return str(value)
    return f"{value:.{digits}g}"


def format_report(rows: Sequence[ReportRow], digits: Optional[int] = None) -> str:
    """CSV text with a header row, '.' decimals and `digits` significant digits."""
    digits = digits or get_config().CSV_SIGNIFICANT_DIGITS
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([_format_value(getattr(row, column), digits) for column in REPORT_COLUMNS])
    return buffer.getvalue()


def write_report(rows: Sequence[ReportRow], path: Union[str, Path], digits: Optional[int] = None) -> None:
    text = format_report(rows, digits)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    logger.info(f"Report written: {path} ({len(rows)} rows)")


def read_report(path: Union[str, Path]) -> List[ReportRow]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Report not found: {path}")
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in REPORT_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {', '.join(missing)}")
        rows = []
        for number, record in enumerate(reader, start=2):
            try:
                rows.append(ReportRow(n=int(record["n"]), **{c: float(record[c]) for c in REPORT_COLUMNS[1:]}))
            except ValueError as e:
                raise ValueError(f"{path}: line {number}: {e}") from e
    return rows


# SCALING FIT
def fit_scaling(rows: Sequence[ReportRow], column: str) -> FitResult:
    """
    Least-squares fit of log(column) against log(n).

    Raises:
        FitError: unknown column, fewer than three rows, or a non-positive value
    """
    if column not in REPORT_COLUMNS or column == "n":
        raise FitError(f"unknown column '{column}'")
    if len(rows) < FIT_MIN_ROWS:
        raise FitError(f"fit needs at least {FIT_MIN_ROWS} rows, got {len(rows)}")
    for index, row in enumerate(rows):
        value = getattr(row, column)
        if not value > 0.0 or not math.isfinite(value):
            raise FitError(f"row {index} (n={row.n}): {column}={value} is not positive")
    if len({row.n for row in rows}) < 2:
        raise FitError("fit needs at least two distinct n values")

    log_n = np.log([row.n for row in rows])
    log_y = np.log([getattr(row, column) for row in rows])
    fit = stats.linregress(log_n, log_y)
    r_squared = float(fit.rvalue) ** 2 if math.isfinite(fit.rvalue) else 1.0
    result = FitResult(
        column=column,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=r_squared,
        points=len(rows),
    )
    logger.info(f"Fit {column}: slope={result.slope:.6g} intercept={result.intercept:.6g} r2={result.r_squared:.6g}")
    return result
