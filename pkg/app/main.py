"""
bayes-hurst command line interface.

Levels follow the finest = J-1 convention: for n = 2^11 the finest detail level is 10,
and with depth 8 the default range 4:6 sits one to three levels above the coarsest kept level, 3.
Exit codes: 0 success, 2 usage, 3 input-parse, 4 degenerate-input, 5 internal.
"""

import functools
from pathlib import Path
from typing import List, Optional

import click
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import HurstEstimatorException
from app.core.logging import get_logger, setup_logging
from app.evaluation.harness import ExperimentConfig, run_experiment
from app.models.signal_data import FbmSpec
from app.services.fbm import generate_fbm
from app.services.ndwt import SUPPORTED_WAVELETS
from app.services.pipeline import METHOD_CHOICES, EstimationPipeline, parse_levels
from app.services.prior_elicit import default_ess, elicit_beta, resolve_prior
from app.services.report_writer import (
    FORMATS,
    format_estimation_report,
    format_experiment,
    format_prior,
    format_spectrum,
    write_raw_estimates,
)
from app.services.signal_io import dyadic_truncate, read_signal, write_signal

logger = get_logger(__name__)

OPEN_UNIT = click.FloatRange(0.0, 1.0, min_open=True, max_open=True)
POSITIVE = click.FloatRange(min=0.0, min_open=True)


def _fail(code: str, message: str, exit_code: int, details: Optional[str] = None):
    click.echo(f"error[{code}]: {message}", err=True)
    if details:
        click.echo(f"  {details}", err=True)
    raise SystemExit(exit_code)


def handle_errors(command):
    """Map library exceptions onto error codes and exit statuses"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except HurstEstimatorException as e:
            _fail(e.error_code, e.message, e.exit_code, e.details)
        except ValidationError as e:
            messages = "; ".join(error["msg"] for error in e.errors())
            _fail("invalid-argument", messages, 2)
        except (click.ClickException, click.exceptions.Exit, SystemExit):
            raise
        except Exception as e:
            logger.exception("Unexpected failure")
            _fail("internal", str(e), 5)
    return wrapper


class HurstGroup(click.Group):
    """Click group whose parsing failures carry the same error codes as the commands"""

    def main(self, *args, standalone_mode: bool = True, **kwargs):
        if not standalone_mode:
            return super().main(*args, standalone_mode=False, **kwargs)
        try:
            code = super().main(*args, standalone_mode=False, **kwargs)
        except HurstEstimatorException as e:
            _fail(e.error_code, e.message, e.exit_code, e.details)
        except click.exceptions.NoArgsIsHelpError as e:
            e.show()
            raise SystemExit(e.exit_code)
        except click.BadParameter as e:
            _fail("invalid-argument", e.format_message(), e.exit_code, _usage_hint(e.ctx))
        except click.UsageError as e:
            _fail("usage", e.format_message(), e.exit_code, _usage_hint(e.ctx))
        except click.ClickException as e:
            _fail("usage", e.format_message(), e.exit_code)
        except click.Abort:
            _fail("usage", "aborted", 1)
        raise SystemExit(code if isinstance(code, int) else 0)


def _usage_hint(ctx: Optional[click.Context]) -> Optional[str]:
    if ctx is None:
        return None
    return f"Try '{ctx.command_path} --help' for help."


def _levels_option(ctx, param, value):
    if value is None:
        return None
    return parse_levels(value)


def _float_list(ctx, param, value) -> List[float]:
    if not value:
        return []
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got '{value}'")


def _emit(text: str, output: Optional[Path]):
    if output is None:
        click.echo(text, nl=False)
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text, encoding="utf-8")
    logger.info("Report written", file=str(output))


def _transform_options(command):
    command = click.option("--levels", callback=_levels_option, default=None,
                           help="Level range j1:j2 (finest level is J-1).")(command)
    command = click.option("--depth", type=click.IntRange(min=1), default=None,
                           help="NDWT depth (default: min(DEFAULT_DEPTH, J)).")(command)
    command = click.option("--wavelet", type=click.Choice(SUPPORTED_WAVELETS), default=settings.DEFAULT_WAVELET,
                           show_default=True)(command)
    return command


def _input_options(command):
    command = click.option("--strict", is_flag=True,
                           help="Reject non-power-of-two lengths instead of truncating.")(command)
    command = click.option("--sampling-rate", type=POSITIVE, default=None, help="Sampling rate metadata (Hz).")(command)
    command = click.option("--column", default=None, help="Column index (0-based) or header name.")(command)
    command = click.argument("input_path", type=click.Path(path_type=Path))(command)
    return command


@click.group(cls=HurstGroup)
@click.option("--log-level", default=None, help="Log level for messages on standard error.")
@click.version_option(settings.APP_VERSION, prog_name="bayes-hurst")
def cli(log_level: Optional[str]):
    """Bayesian wavelet-based estimation of the Hurst exponent."""
    setup_logging(log_level)


@cli.command()
@_input_options
@_transform_options
@click.option("--method", type=click.Choice(METHOD_CHOICES), default="both", show_default=True)
@click.option("--prior-mean", type=OPEN_UNIT, default=None, help="Prior mean of H.")
@click.option("--ess", type=POSITIVE, default=None, help="Effective sample size alpha+beta (default n/2).")
@click.option("--alpha", type=POSITIVE, default=None)
@click.option("--beta", type=POSITIVE, default=None)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="table", show_default=True)
@click.option("--output", type=click.Path(path_type=Path), default=None)
@handle_errors
def estimate(input_path, column, sampling_rate, strict, wavelet, depth, levels, method,
             prior_mean, ess, alpha, beta, fmt, output):
    """Estimate H for the signal in INPUT_PATH."""
    signal = read_signal(input_path, column, sampling_rate)
    n_original = signal.n
    signal = dyadic_truncate(signal, strict)
    prior = resolve_prior(signal.n, prior_mean, ess, alpha, beta) if method != "regression" else None
    report = EstimationPipeline(wavelet, depth, levels).estimate(signal, method, prior, n_original)
    _emit(format_estimation_report(report, fmt), output)


@cli.command()
@_input_options
@_transform_options
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="csv", show_default=True)
@click.option("--output", type=click.Path(path_type=Path), default=None)
@handle_errors
def spectrum(input_path, column, sampling_rate, strict, wavelet, depth, levels, fmt, output):
    """Emit the wavelet spectrum (j, log2 y_j) and its fitted line."""
    signal = dyadic_truncate(read_signal(input_path, column, sampling_rate), strict)
    result = EstimationPipeline(wavelet, depth, levels).spectrum(signal)
    _emit(format_spectrum(result, fmt), output)


@cli.command()
@click.option("--hurst", type=OPEN_UNIT, required=True, help="True H of the simulated paths.")
@click.option("--n", "n", type=click.IntRange(min=2), default=2048, show_default=True)
@click.option("--reps", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--prior-means", callback=_float_list, default=None, help="Comma-separated prior means.")
@click.option("--ess", type=POSITIVE, default=None, help="ESS for every prior (default n/2).")
@click.option("--levels", callback=_levels_option, default=settings.DEFAULT_LEVELS, show_default=True)
@click.option("--depth", type=click.IntRange(min=1), default=settings.DEFAULT_DEPTH, show_default=True)
@click.option("--wavelet", type=click.Choice(SUPPORTED_WAVELETS), default=settings.DEFAULT_WAVELET, show_default=True)
@click.option("--sigma", type=POSITIVE, default=1.0, show_default=True)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=0, show_default=True)
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Threads (default HURST_WORKERS).")
@click.option("--raw", type=click.Path(path_type=Path), default=None, help="CSV file for per-replicate estimates.")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="table", show_default=True)
@handle_errors
def simulate(hurst, n, reps, prior_means, ess, levels, depth, wavelet, sigma, seed, workers, raw, fmt):
    """Monte Carlo comparison of the MAP and regression estimators."""
    config = ExperimentConfig.from_prior_means(
        prior_means,
        ess,
        replicates=reps,
        n=n,
        hurst=hurst,
        sigma=sigma,
        wavelet=wavelet,
        depth=depth,
        levels=levels,
        master_seed=seed,
        workers=workers,
    )
    report = run_experiment(config)
    if raw is not None:
        write_raw_estimates(report, raw)
    _emit(format_experiment(report, fmt), None)


@cli.command()
@click.option("--mean", "mean", type=OPEN_UNIT, required=True, help="Prior mean of H.")
@click.option("--ess", type=POSITIVE, default=None, help="Effective sample size alpha+beta.")
@click.option("--n", "n", type=click.IntRange(min=2), default=None, help="Signal length; ESS = n/2.")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="table", show_default=True)
@handle_errors
def elicit(mean, ess, n, fmt):
    """Beta prior hyperparameters from a mean and an ESS."""
    if ess is None and n is None:
        raise click.UsageError("give --ess or --n")
    prior = elicit_beta(mean, ess if ess is not None else default_ess(n))
    _emit(format_prior(prior, fmt), None)


@cli.command()
@click.option("--n", "n", type=click.IntRange(min=2), required=True)
@click.option("--hurst", type=OPEN_UNIT, required=True)
@click.option("--sigma", type=POSITIVE, default=1.0, show_default=True)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), required=True)
@click.option("--output", type=click.Path(path_type=Path), required=True)
@handle_errors
def generate(n, hurst, sigma, seed, output):
    """Write a seeded fBm sample path, one value per line."""
    signal = generate_fbm(FbmSpec(n=n, hurst=hurst, sigma=sigma, seed=seed))
    write_signal(output, signal.samples, header=[signal.source])


if __name__ == "__main__":
    cli()
