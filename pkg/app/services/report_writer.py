"""
Report emission: human-readable tables (rich), JSON and CSV.
Field names are fixed; see README for the reference.
"""

import io
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import pandas as pd
from rich.console import Console
from rich.table import Table

from app.core.exceptions import InvalidArgumentException, ReportFormatException
from app.core.logging import get_logger
from app.evaluation.harness import MonteCarloReport
from app.models.signal_data import BetaPrior
from app.services.pipeline import EstimationReport
from app.services.regression import WaveletSpectrum

logger = get_logger(__name__)

FORMATS = ("table", "json", "csv")


def _check_format(fmt: str):
    if fmt not in FORMATS:
        raise InvalidArgumentException(f"format must be one of {FORMATS}, got '{fmt}'")


def _number(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_table(title: str, columns: Sequence[str], rows: Sequence[Sequence[Any]], caption: str = "") -> str:
    """Render a rich table to plain text"""
    table = Table(title=title, caption=caption or None)
    for column in columns:
        table.add_column(column, justify="right" if column != columns[0] else "left")
    for row in rows:
        table.add_row(*[_number(value) for value in row])
    console = Console(file=io.StringIO(), width=120, color_system=None, force_terminal=False)
    console.print(table)
    return console.file.getvalue()


def _to_csv(records: List[Dict[str, Any]]) -> str:
    return pd.DataFrame.from_records(records).to_csv(index=False, lineterminator="\n")


def _to_json(data: Any) -> str:
    return json.dumps(data, indent=2) + "\n"


def format_estimation_report(report: EstimationReport, fmt: str = "table") -> str:
    _check_format(fmt)
    if fmt == "json":
        return _to_json(report.to_dict())

    records = []
    for result in report.results:
        records.append({
            "method": result.method.value,
            "h_hat": result.h_hat,
            "sigma2_hat": result.sigma2_hat,
            "log_posterior_at_mode": result.log_posterior_at_mode,
            "j1": result.levels_used[0],
            "j2": result.levels_used[1],
            "alpha": result.prior.alpha if result.prior else None,
            "beta": result.prior.beta if result.prior else None,
            "root_brackets": result.diagnostics.root_brackets,
            "boundary_hit": result.diagnostics.boundary_hit,
        })
    if fmt == "csv":
        return _to_csv(records)

    caption = f"{report.source or 'signal'}: n={report.n}"
    if report.n_original != report.n:
        caption += f" (truncated from {report.n_original})"
    caption += f", {report.wavelet} depth {report.depth}, levels {report.levels[0]}:{report.levels[1]}"
    if report.prior:
        caption += f", prior Beta({report.prior.alpha:.6g}, {report.prior.beta:.6g})"
    columns = ["method", "h_hat", "sigma2_hat", "log_posterior", "root_brackets", "boundary_hit"]
    rows = [
        [r["method"], r["h_hat"], r["sigma2_hat"], r["log_posterior_at_mode"], r["root_brackets"], r["boundary_hit"]]
        for r in records
    ]
    return render_table("Hurst exponent estimates", columns, rows, caption)


def parse_report(text: str) -> EstimationReport:
    """Re-read a JSON estimation report"""
    try:
        return EstimationReport.from_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as e:
        raise ReportFormatException(f"Not a valid estimation report: {e}")


def format_spectrum(spectrum: WaveletSpectrum, fmt: str = "csv") -> str:
    _check_format(fmt)
    if fmt == "json":
        return _to_json(spectrum.to_dict())
    if fmt == "csv":
        header = f"# slope={spectrum.slope!r} intercept={spectrum.intercept!r} hurst={spectrum.hurst!r}\n"
        return header + _to_csv(spectrum.rows())
    caption = f"slope {spectrum.slope:.6g}, intercept {spectrum.intercept:.6g}, implied H {spectrum.hurst:.6g}"
    rows = [[row["level"], row["log2_energy"], row["fitted"]] for row in spectrum.rows()]
    return render_table("Wavelet spectrum", ["level", "log2_energy", "fitted"], rows, caption)


def format_prior(prior: BetaPrior, fmt: str = "table") -> str:
    _check_format(fmt)
    data = prior.to_dict()
    if fmt == "json":
        return _to_json(data)
    if fmt == "csv":
        return _to_csv([data])
    return render_table("Beta prior", ["alpha", "beta", "mean", "ess"], [[data["alpha"], data["beta"], data["mean"], data["ess"]]])


def format_experiment(report: MonteCarloReport, fmt: str = "table") -> str:
    _check_format(fmt)
    if fmt == "json":
        return _to_json(report.to_dict())
    if fmt == "csv":
        return _to_csv([
            {
                "estimator": cell.estimator,
                "prior_mean": cell.prior.mean if cell.prior else None,
                "alpha": cell.prior.alpha if cell.prior else None,
                "beta": cell.prior.beta if cell.prior else None,
                **cell.statistics.to_dict(),
            }
            for cell in report.cells
        ])

    config = report.config
    columns = ["statistic"] + [cell.label for cell in report.cells]
    rows = [
        ["Mean"] + [cell.statistics.mean for cell in report.cells],
        ["Variance"] + [cell.statistics.variance for cell in report.cells],
        ["MSE"] + [cell.statistics.mse for cell in report.cells],
        ["Squared bias"] + [cell.statistics.squared_bias for cell in report.cells],
    ]
    caption = (
        f"{config.replicates} fBm paths, n={config.n}, H={config.hurst}, "
        f"{config.wavelet} depth {config.depth}, levels {config.levels[0]}:{config.levels[1]}, seed {config.master_seed}"
    )
    return render_table("Estimation performance", columns, rows, caption)


def write_raw_estimates(report: MonteCarloReport, file_path: Union[str, Path]):
    """Per-replicate estimates (replicate, estimator, prior_mean, h_hat) for box plots"""
    records = []
    for cell in report.cells:
        for replicate, value in enumerate(cell.estimates):
            records.append({
                "replicate": replicate,
                "estimator": cell.estimator,
                "prior_mean": cell.prior.mean if cell.prior else None,
                "h_hat": float(value),
            })
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_text(_to_csv(records), encoding="utf-8")
    logger.info("Raw estimates written", file=str(file_path), rows=len(records))
