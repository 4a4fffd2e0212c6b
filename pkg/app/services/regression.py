"""Regression baseline: unweighted OLS of log2 y_j on j"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from app.core.exceptions import InsufficientLevelsException
from app.core.logging import get_logger
from app.models.signal_data import (
    EstimateDiagnostics,
    EstimateResult,
    EstimationMethod,
    LevelEnergies,
    SolverConfig,
)

logger = get_logger(__name__)


@dataclass(frozen=True)
class WaveletSpectrum:
    """(j, log2 y_j) pairs and their least-squares line"""
    levels: np.ndarray
    log2_energies: np.ndarray
    slope: float
    intercept: float
    m: int = 1

    @property
    def fitted(self) -> np.ndarray:
        return self.intercept + self.slope * self.levels

    @property
    def hurst(self) -> float:
        """Unclamped H implied by slope = -(2H + m)"""
        return -(self.slope + self.m) / 2.0

    def rows(self) -> List[Dict[str, float]]:
        return [
            {"level": int(j), "log2_energy": float(y), "fitted": float(f)}
            for j, y, f in zip(self.levels, self.log2_energies, self.fitted)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "hurst": self.hurst,
            "m": self.m,
            "rows": self.rows(),
        }


def wavelet_spectrum(energies: LevelEnergies) -> WaveletSpectrum:
    """Fit log2 y_j = intercept + slope * j over [j1, j2]"""
    if energies.c < 2:
        raise InsufficientLevelsException(f"regression needs at least two levels, got {energies.c}")
    energies.require_positive()

    x = energies.levels
    y = np.log2(energies.values)
    x_centered = x - x.mean()
    slope = float(np.dot(x_centered, y - y.mean()) / np.dot(x_centered, x_centered))
    intercept = float(y.mean() - slope * x.mean())
    return WaveletSpectrum(levels=x, log2_energies=y, slope=slope, intercept=intercept, m=energies.m)


def regression_estimate(energies: LevelEnergies, config: Optional[SolverConfig] = None) -> EstimateResult:
    """
    H from the slope of the wavelet spectrum, h = -(slope + m)/2, clamped to [h_min, h_max].

    Raises:
        InsufficientLevelsException: fewer than two levels
        DegenerateInputException: some y_j <= 0
    """
    config = config or SolverConfig.from_settings()
    spectrum = wavelet_spectrum(energies)
    raw = spectrum.hurst
    h_hat = min(max(raw, config.h_min), config.h_max)
    clamped = h_hat != raw
    if clamped:
        logger.warning("Regression slope outside (0, 1); estimate clamped", raw_hurst=raw, h_hat=h_hat)

    return EstimateResult(
        h_hat=h_hat,
        sigma2_hat=float(2.0 ** spectrum.intercept),
        method=EstimationMethod.REGRESSION,
        levels_used=(energies.j1, energies.j2),
        diagnostics=EstimateDiagnostics(root_brackets=0, boundary_hit=clamped),
    )
