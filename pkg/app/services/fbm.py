"""
Exact fractional Brownian motion synthesis.

Increments (fractional Gaussian noise) are drawn by circulant embedding of their
autocovariance; the path is their cumulative sum on the unit grid t = 1..n.
"""

import math
from functools import lru_cache

import numpy as np

from app.core.exceptions import InternalConsistencyException, InvalidArgumentException
from app.core.logging import get_logger
from app.models.signal_data import FbmSpec, Signal, check_hurst

logger = get_logger(__name__)

EIGENVALUE_TOLERANCE = 1e-10


def _check_sigma2(sigma2: float) -> float:
    sigma2 = float(sigma2)
    if not math.isfinite(sigma2) or sigma2 <= 0:
        raise InvalidArgumentException(f"sigma2 must be positive, got {sigma2}")
    return sigma2


def fbm_covariance(t: float, s: float, hurst: float, sigma2: float = 1.0) -> float:
    """E[B_H(t) B_H(s)] = (sigma^2 / 2)(|t|^2H + |s|^2H - |t - s|^2H)"""
    if not (math.isfinite(t) and math.isfinite(s)):
        raise InvalidArgumentException(f"times must be finite, got t={t}, s={s}")
    two_h = 2.0 * check_hurst(hurst)
    sigma2 = _check_sigma2(sigma2)
    return 0.5 * sigma2 * (abs(t) ** two_h + abs(s) ** two_h - abs(t - s) ** two_h)


def _fgn_autocovariance_array(lags: np.ndarray, hurst: float) -> np.ndarray:
    """Unit-variance fGn autocovariance for nonnegative integer lags"""
    two_h = 2.0 * hurst
    lags = np.asarray(lags, dtype=float)
    if two_h == 1.0:
        # Brownian increments are white
        return (lags == 0).astype(float)
    gamma = np.empty_like(lags)

    near = lags < 2
    k = lags[near]
    gamma[near] = 0.5 * ((k + 1) ** two_h - 2.0 * k ** two_h + np.abs(k - 1) ** two_h)

    # k^2H [(1 + 1/k)^2H - 2 + (1 - 1/k)^2H] / 2 without the leading-order cancellation
    k = lags[~near]
    x = 1.0 / k
    bracket = np.expm1(two_h * np.log1p(x)) + np.expm1(two_h * np.log1p(-x))
    gamma[~near] = 0.5 * k ** two_h * bracket
    return gamma


def fgn_autocovariance(lag: int, hurst: float, sigma2: float = 1.0) -> float:
    """Autocovariance of unit-spaced fBm increments at a nonnegative lag"""
    if int(lag) != lag or lag < 0:
        raise InvalidArgumentException(f"lag must be a nonnegative integer, got {lag}")
    hurst = check_hurst(hurst)
    sigma2 = _check_sigma2(sigma2)
    return float(sigma2 * _fgn_autocovariance_array(np.array([lag]), hurst)[0])


@lru_cache(maxsize=64)
def _circulant_sqrt_eigenvalues(n: int, hurst: float) -> np.ndarray:
    """Square roots of the eigenvalues of the 2n circulant embedding of the fGn covariance"""
    gamma = _fgn_autocovariance_array(np.arange(n + 1), hurst)
    row = np.concatenate([gamma, gamma[n - 1:0:-1]])
    eigenvalues = np.fft.fft(row).real

    floor = -EIGENVALUE_TOLERANCE * eigenvalues.max()
    if eigenvalues.min() < floor:
        raise InternalConsistencyException(
            f"circulant embedding has a negative eigenvalue {eigenvalues.min():.3e}",
            details=f"n={n}, hurst={hurst}",
        )
    logger.debug("Circulant embedding ready", n=n, hurst=hurst, min_eigenvalue=float(eigenvalues.min()))

    root = np.sqrt(np.maximum(eigenvalues, 0.0))
    root.setflags(write=False)
    return root


def derive_seed(master_seed: int, index: int) -> int:
    """Deterministic 64-bit seed for replicate `index` of a run seeded with `master_seed`"""
    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def generate_fgn(spec: FbmSpec) -> np.ndarray:
    """n exact fGn increments with autocovariance sigma^2 * fgn_autocovariance"""
    n = spec.n
    root = _circulant_sqrt_eigenvalues(n, float(spec.hurst))
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
    # real part of F diag(sqrt(lambda)) Z / sqrt(2n) has the embedded covariance
    field = np.fft.fft(root * noise) / math.sqrt(2 * n)
    return spec.sigma * field.real[:n]


def generate_fbm(spec: FbmSpec) -> Signal:
    """Sample path of fBm on t = 1..n; the B_H(0) = 0 origin is not stored"""
    path = np.cumsum(generate_fgn(spec))
    return Signal(
        samples=path,
        source=f"fbm(n={spec.n}, hurst={spec.hurst}, sigma={spec.sigma}, seed={spec.seed})",
    )


def generate_fbm_paths(spec: FbmSpec, count: int) -> np.ndarray:
    """`count` independent paths, path i seeded with derive_seed(spec.seed, i)"""
    if count < 1:
        raise InvalidArgumentException(f"count must be positive, got {count}")
    paths = np.empty((count, spec.n))
    for index in range(count):
        replicate = FbmSpec(n=spec.n, hurst=spec.hurst, sigma=spec.sigma, seed=derive_seed(spec.seed, index))
        paths[index] = generate_fbm(replicate).samples
    return paths
