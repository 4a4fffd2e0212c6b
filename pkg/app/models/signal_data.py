"""
Data models for signals, wavelet decompositions and Hurst estimates.
Numerical containers are frozen dataclasses; solver configuration is a Pydantic model.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.core.config import settings
from app.core.exceptions import (
    DegenerateInputException,
    InvalidArgumentException,
    InvalidLevelRangeException,
)

MAX_SEED = 2**64 - 1


def check_hurst(value: float, name: str = "hurst") -> float:
    """Validate a Hurst exponent, which must lie in the open interval (0, 1)"""
    value = float(value)
    if not math.isfinite(value) or not 0.0 < value < 1.0:
        raise InvalidArgumentException(f"{name} must lie in (0, 1), got {value}")
    return value


def _frozen_array(values: Any) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Signal:
    """A 1-D real-valued series plus sampling metadata"""
    samples: np.ndarray
    sampling_rate: Optional[float] = None
    source: str = ""

    def __post_init__(self):
        samples = _frozen_array(self.samples)
        if samples.ndim != 1:
            raise InvalidArgumentException(f"signal must be one-dimensional, got shape {samples.shape}")
        if samples.size < 2:
            raise InvalidArgumentException(f"signal needs at least 2 samples, got {samples.size}")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgumentException("signal contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return int(self.samples.size)

    @property
    def J(self) -> int:
        """Integer part of log2 n"""
        return self.n.bit_length() - 1

    @property
    def is_dyadic(self) -> bool:
        return self.n == 1 << self.J


@dataclass(frozen=True)
class FbmSpec:
    """Parameters of one fractional Brownian motion sample path"""
    n: int
    hurst: float
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidArgumentException(f"path length must be an integer >= 2, got {self.n}")
        check_hurst(self.hurst)
        if not math.isfinite(self.sigma) or self.sigma <= 0:
            raise InvalidArgumentException(f"sigma must be positive, got {self.sigma}")
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise InvalidArgumentException(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class WaveletFilter:
    """Orthonormal quadrature-mirror filter pair"""
    name: str
    lowpass: np.ndarray
    highpass: np.ndarray
    vanishing_moments: int = 1

    def __post_init__(self):
        lowpass = _frozen_array(self.lowpass)
        highpass = _frozen_array(self.highpass)
        if lowpass.shape != highpass.shape or lowpass.ndim != 1 or lowpass.size < 2:
            raise InvalidArgumentException(f"filter {self.name} needs two equal-length 1-D taps")
        for label, taps in (("lowpass", lowpass), ("highpass", highpass)):
            if abs(np.linalg.norm(taps) - 1.0) > 1e-12:
                raise InvalidArgumentException(f"filter {self.name} {label} is not unit norm")
        signs = (-1.0) ** np.arange(lowpass.size)
        if not np.allclose(highpass, signs * lowpass[::-1], rtol=0.0, atol=1e-14):
            raise InvalidArgumentException(f"filter {self.name} highpass is not the quadrature mirror of lowpass")
        object.__setattr__(self, "lowpass", lowpass)
        object.__setattr__(self, "highpass", highpass)

    @property
    def length(self) -> int:
        return int(self.lowpass.size)


@dataclass(frozen=True)
class NdwtDecomposition:
    """Per-level detail coefficients of a non-decimated transform; level J-1 is the finest"""
    levels: Dict[int, np.ndarray]
    smooth: np.ndarray
    depth: int
    J: int
    filter: WaveletFilter

    @property
    def n(self) -> int:
        return int(self.smooth.size)

    @property
    def level_indices(self) -> Tuple[int, ...]:
        return tuple(sorted(self.levels))

    def coefficients(self, j: int) -> np.ndarray:
        if j not in self.levels:
            raise InvalidLevelRangeException(
                f"level {j} is not in the decomposition (levels {self.J - self.depth}..{self.J - 1})"
            )
        return self.levels[j]


@dataclass(frozen=True)
class LevelEnergies:
    """Averaged squared detail coefficients y_j over the level range [j1, j2]"""
    energies: Dict[int, float]
    J: int
    j1: int
    j2: int
    m: int = 1

    def __post_init__(self):
        if self.j1 > self.j2:
            raise InvalidLevelRangeException(f"level range {self.j1}:{self.j2} is empty")
        expected = set(range(self.j1, self.j2 + 1))
        if set(self.energies) != expected:
            raise InvalidLevelRangeException(
                f"energies cover levels {sorted(self.energies)}, expected {self.j1}..{self.j2}"
            )
        for j, y in self.energies.items():
            if not math.isfinite(y) or y < 0:
                raise DegenerateInputException(f"energy at level {j} must be finite and nonnegative, got {y}")
        object.__setattr__(self, "energies", {j: float(self.energies[j]) for j in sorted(self.energies)})

    @property
    def b(self) -> float:
        """Chi-square degrees of freedom per level, 2^(mJ)"""
        return float(2.0 ** (self.m * self.J))

    @property
    def c(self) -> int:
        """Number of levels used"""
        return self.j2 - self.j1 + 1

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.j1, self.j2 + 1, dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([self.energies[j] for j in range(self.j1, self.j2 + 1)], dtype=float)

    def scaled(self, factor: float) -> "LevelEnergies":
        """Energies multiplied by a positive factor"""
        return LevelEnergies(
            energies={j: factor * y for j, y in self.energies.items()},
            J=self.J, j1=self.j1, j2=self.j2, m=self.m,
        )

    def require_positive(self):
        for j, y in self.energies.items():
            if y <= 0:
                raise DegenerateInputException(
                    f"energy at level {j} is zero; the likelihood is undefined",
                    details="constant or level-dead signal",
                )


@dataclass(frozen=True)
class BetaPrior:
    """Beta(alpha, beta) prior on H"""
    alpha: float
    beta: float

    def __post_init__(self):
        for label, value in (("alpha", self.alpha), ("beta", self.beta)):
            if not math.isfinite(value) or value <= 0:
                raise InvalidArgumentException(f"{label} must be positive, got {value}")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def ess(self) -> float:
        """Effective sample size alpha + beta"""
        return self.alpha + self.beta

    def to_dict(self) -> Dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta, "mean": self.mean, "ess": self.ess}


class SolverConfig(BaseModel):
    """Coarse scan and bisection settings for the MAP solver"""
    coarse_step: float = Field(default=1e-4, gt=0)
    refine_tolerance: float = Field(default=1e-7, gt=0)
    h_min: float = 1e-7
    h_max: float = 1.0 - 1e-7

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_bounds(self):
        if not 0.0 < self.h_min < self.h_max < 1.0:
            raise ValueError("need 0 < h_min < h_max < 1")
        if self.refine_tolerance > self.coarse_step:
            raise ValueError("refine_tolerance must not exceed coarse_step")
        return self

    @classmethod
    def from_settings(cls) -> "SolverConfig":
        return cls(
            coarse_step=settings.SOLVER_COARSE_STEP,
            refine_tolerance=settings.SOLVER_REFINE_TOLERANCE,
            h_min=settings.SOLVER_H_MIN,
            h_max=settings.SOLVER_H_MAX,
        )


class EstimationMethod(str, Enum):
    BAYES_MAP = "bayes-map"
    REGRESSION = "regression"


@dataclass(frozen=True)
class EstimateDiagnostics:
    root_brackets: int = 0
    boundary_hit: bool = False


@dataclass(frozen=True)
class EstimateResult:
    """Point estimate of (H, sigma^2) from one estimator"""
    h_hat: float
    sigma2_hat: float
    method: EstimationMethod
    levels_used: Tuple[int, int]
    log_posterior_at_mode: Optional[float] = None
    prior: Optional[BetaPrior] = None
    diagnostics: EstimateDiagnostics = field(default_factory=EstimateDiagnostics)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return {
            "method": self.method.value,
            "h_hat": self.h_hat,
            "sigma2_hat": self.sigma2_hat,
            "log_posterior_at_mode": self.log_posterior_at_mode,
            "levels": list(self.levels_used),
            "prior": self.prior.to_dict() if self.prior else None,
            "diagnostics": {
                "root_brackets": self.diagnostics.root_brackets,
                "boundary_hit": self.diagnostics.boundary_hit,
            },
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EstimateResult":
        prior = data.get("prior")
        diagnostics = data.get("diagnostics") or {}
        return cls(
            h_hat=float(data["h_hat"]),
            sigma2_hat=float(data["sigma2_hat"]),
            method=EstimationMethod(data["method"]),
            levels_used=(int(data["levels"][0]), int(data["levels"][1])),
            log_posterior_at_mode=data.get("log_posterior_at_mode"),
            prior=BetaPrior(float(prior["alpha"]), float(prior["beta"])) if prior else None,
            diagnostics=EstimateDiagnostics(
                root_brackets=int(diagnostics.get("root_brackets", 0)),
                boundary_hit=bool(diagnostics.get("boundary_hit", False)),
            ),
        )
