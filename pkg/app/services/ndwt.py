"""
Non-decimated (a trous) wavelet transform of 1-D signals.

Scale s = 1..depth uses the filters upsampled by 2^(s-1) with periodic boundary handling
and no renormalisation, and its details are stored under level j = J - s, so the finest
level is J - 1.
"""

from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
import pywt

from app.core.exceptions import (
    DegenerateInputException,
    InvalidArgumentException,
    InvalidLevelRangeException,
)
from app.core.logging import get_logger
from app.models.signal_data import LevelEnergies, NdwtDecomposition, Signal, WaveletFilter

logger = get_logger(__name__)

SUPPORTED_WAVELETS: Tuple[str, ...] = ("haar",) + tuple(f"db{k}" for k in range(2, 9))

# y_j below this fraction of the decomposition's largest energy counts as zero
RELATIVE_ENERGY_FLOOR = 1e-24


@lru_cache(maxsize=None)
def get_filter(name: str) -> WaveletFilter:
    """Orthonormal filter pair for `haar` or `db2`..`db8`"""
    key = name.strip().lower()
    if key not in SUPPORTED_WAVELETS:
        raise InvalidArgumentException(
            f"unsupported wavelet '{name}'",
            details=f"choose one of {', '.join(SUPPORTED_WAVELETS)}",
        )
    wavelet = pywt.Wavelet(key)
    lowpass = np.asarray(wavelet.rec_lo, dtype=float)
    lowpass = lowpass / np.linalg.norm(lowpass)
    highpass = (-1.0) ** np.arange(lowpass.size) * lowpass[::-1]
    return WaveletFilter(
        name=key,
        lowpass=lowpass,
        highpass=highpass,
        vanishing_moments=int(wavelet.vanishing_moments_psi),
    )


def _circular_filter(values: np.ndarray, taps: np.ndarray, stride: int) -> np.ndarray:
    """out[k] = sum_l taps[l] * values[(k - stride * l) mod n]"""
    out = np.zeros_like(values)
    for l, tap in enumerate(taps):
        out += tap * np.roll(values, stride * l)
    return out


def ndwt_decompose(signal: Signal, depth: int, filter: Optional[WaveletFilter] = None, m: int = 1) -> NdwtDecomposition:
    """
    Decompose a dyadic-length signal into `depth` detail levels plus the final smooth.

    Args:
        signal: Input signal, length n = 2^J
        depth: Number of cascade stages, 1 <= depth <= J
        filter: Filter pair (Haar when omitted)
        m: Signal dimension; only 1 is supported by the transform

    Returns:
        NdwtDecomposition with levels J-depth..J-1

    Raises:
        InvalidArgumentException: non-dyadic length, bad depth or m != 1
    """
    if m != 1:
        raise InvalidArgumentException(f"the transform is one-dimensional, got m={m}")
    if not signal.is_dyadic:
        raise InvalidArgumentException(f"signal length {signal.n} is not a power of two")
    J = signal.J
    if int(depth) != depth or not 1 <= depth <= J:
        raise InvalidArgumentException(f"depth must be in 1..{J} for n={signal.n}, got {depth}")
    filter = filter or get_filter("haar")

    approx = signal.samples.copy()
    levels = {}
    for s in range(1, depth + 1):
        stride = 1 << (s - 1)
        detail = _circular_filter(approx, filter.highpass, stride)
        approx = _circular_filter(approx, filter.lowpass, stride)
        detail.setflags(write=False)
        levels[J - s] = detail
    approx.setflags(write=False)

    logger.debug("NDWT complete", n=signal.n, depth=depth, wavelet=filter.name)
    return NdwtDecomposition(levels=levels, smooth=approx, depth=depth, J=J, filter=filter)


def level_energies(decomp: NdwtDecomposition, j1: int, j2: int) -> LevelEnergies:
    """
    Average squared detail coefficients y_j = (1/n) sum_k d_jk^2 for j in [j1, j2].

    Raises:
        InvalidLevelRangeException: j1 > j2 or a level outside the decomposition
        DegenerateInputException: some y_j vanishes
    """
    available = decomp.level_indices
    if j1 > j2:
        raise InvalidLevelRangeException(f"level range {j1}:{j2} is empty")
    if j1 not in decomp.levels or j2 not in decomp.levels:
        raise InvalidLevelRangeException(
            f"levels {j1}:{j2} are outside the decomposition",
            details=f"available levels {available[0]}..{available[-1]} (finest = J-1 = {decomp.J - 1})",
        )

    all_energies = {j: float(np.mean(d ** 2)) for j, d in decomp.levels.items()}
    reference = max(max(all_energies.values()), float(np.mean(decomp.smooth ** 2)))
    energies = {}
    for j in range(j1, j2 + 1):
        y = all_energies[j]
        if y == 0.0 or y <= RELATIVE_ENERGY_FLOOR * reference:
            raise DegenerateInputException(
                f"level {j} has zero energy; the likelihood is undefined",
                details="constant or level-dead signal",
            )
        energies[j] = y
    return LevelEnergies(energies=energies, J=decomp.J, j1=j1, j2=j2, m=1)
