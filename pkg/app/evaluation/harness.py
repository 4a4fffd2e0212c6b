"""
Monte Carlo experiment runner.

Each replicate simulates an fBm path from a seed derived from (master_seed, replicate),
runs the regression estimator once and the MAP estimator once per prior. Replicates may run
on a thread pool; results are assembled in replicate order so reports do not depend on
the schedule.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import settings
from app.core.exceptions import DegenerateInputException
from app.core.logging import get_logger
from app.evaluation.metrics import SummaryStatistics, summarize
from app.models.signal_data import MAX_SEED, BetaPrior, FbmSpec, SolverConfig
from app.services.fbm import derive_seed, generate_fbm
from app.services.ndwt import SUPPORTED_WAVELETS
from app.services.pipeline import EstimationPipeline
from app.services.posterior import map_estimate
from app.services.prior_elicit import elicit_beta
from app.services.regression import regression_estimate

logger = get_logger(__name__)

BAYES = "bayes"
REGRESSION = "regression"


class ExperimentConfig(BaseModel):
    """Simulation protocol: fBm template, transform, level range, priors and seeding"""
    model_config = ConfigDict(frozen=True)

    replicates: int = Field(default=200, ge=1)
    n: int = Field(default=2048, ge=2)
    hurst: float = Field(default=0.5, gt=0.0, lt=1.0)
    sigma: float = Field(default=1.0, gt=0.0)
    wavelet: str = "haar"
    depth: int = Field(default=8, ge=1)
    levels: Tuple[int, int] = (4, 6)
    priors: List[BetaPrior] = Field(default_factory=list)
    master_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def check_protocol(self):
        if self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two, got {self.n}")
        if self.wavelet not in SUPPORTED_WAVELETS:
            raise ValueError(f"wavelet must be one of {SUPPORTED_WAVELETS}")
        J = self.n.bit_length() - 1
        if self.depth > J:
            raise ValueError(f"depth {self.depth} exceeds J={J}")
        j1, j2 = self.levels
        if not J - self.depth <= j1 <= j2 <= J - 1:
            raise ValueError(f"levels {j1}:{j2} outside the transform's levels {J - self.depth}..{J - 1}")
        return self

    @classmethod
    def from_prior_means(cls, prior_means: Sequence[float], ess: Optional[float] = None, **kwargs) -> "ExperimentConfig":
        """Priors elicited from means at a common ESS (n/2 by default)"""
        n = kwargs.get("n", cls.model_fields["n"].default)
        ess = ess if ess is not None else settings.DEFAULT_ESS_FRACTION * n
        return cls(priors=[elicit_beta(mean, ess) for mean in prior_means], **kwargs)


@dataclass(frozen=True)
class CellReport:
    """Statistics of one estimator (and prior) over all replicates"""
    estimator: str
    prior: Optional[BetaPrior]
    statistics: SummaryStatistics
    estimates: np.ndarray

    @property
    def label(self) -> str:
        if self.prior is None:
            return self.estimator
        return f"{self.estimator} mu={self.prior.mean:.4g}"

    def to_dict(self, include_raw: bool = False) -> Dict[str, Any]:
        data = {
            "estimator": self.estimator,
            "prior": self.prior.to_dict() if self.prior else None,
            **self.statistics.to_dict(),
        }
        if include_raw:
            data["estimates"] = self.estimates.tolist()
        return data


@dataclass(frozen=True)
class MonteCarloReport:
    config: ExperimentConfig
    cells: List[CellReport]

    def cell(self, estimator: str, prior_mean: Optional[float] = None) -> CellReport:
        for cell in self.cells:
            if cell.estimator != estimator:
                continue
            if prior_mean is None or (cell.prior is not None and abs(cell.prior.mean - prior_mean) < 1e-9):
                return cell
        raise KeyError(f"{estimator} {prior_mean}")

    def to_dict(self, include_raw: bool = False) -> Dict[str, Any]:
        return {
            "config": self.config.model_dump(mode="json"),
            "cells": [cell.to_dict(include_raw) for cell in self.cells],
        }


def run_experiment(config: ExperimentConfig, solver: Optional[SolverConfig] = None) -> MonteCarloReport:
    """
    Simulate `config.replicates` fBm paths and summarize every estimator.

    Raises:
        DegenerateInputException: a replicate produced unusable energies (carries its index)
    """
    solver = solver or SolverConfig.from_settings()
    pipeline = EstimationPipeline(config.wavelet, config.depth, config.levels, solver)
    workers = config.workers or settings.HURST_WORKERS

    def run_replicate(replicate: int) -> Tuple[float, List[float]]:
        spec = FbmSpec(n=config.n, hurst=config.hurst, sigma=config.sigma, seed=derive_seed(config.master_seed, replicate))
        try:
            _, energies = pipeline.prepare(generate_fbm(spec))
            regression = regression_estimate(energies, solver).h_hat
            bayes = [map_estimate(energies, prior, solver).h_hat for prior in config.priors]
        except DegenerateInputException as e:
            raise DegenerateInputException(f"replicate {replicate}: {e.message}", details=e.details)
        return regression, bayes

    logger.info(
        "Monte Carlo experiment started",
        replicates=config.replicates,
        hurst=config.hurst,
        n=config.n,
        priors=len(config.priors),
        workers=workers,
    )
    started = time.perf_counter()
    if workers == 1:
        outcomes = [run_replicate(r) for r in range(config.replicates)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_replicate, range(config.replicates)))

    cells = []
    for index, prior in enumerate(config.priors):
        estimates = np.array([bayes[index] for _, bayes in outcomes])
        cells.append(CellReport(BAYES, prior, summarize(estimates, config.hurst), estimates))
    estimates = np.array([regression for regression, _ in outcomes])
    cells.append(CellReport(REGRESSION, None, summarize(estimates, config.hurst), estimates))

    logger.info("Monte Carlo experiment finished", seconds=round(time.perf_counter() - started, 3))
    return MonteCarloReport(config=config, cells=cells)
