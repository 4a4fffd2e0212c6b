"""
Estimation pipeline: signal -> NDWT -> level energies -> estimators.

The CLI and the Monte Carlo harness both go through this class, so command-line
results are the library's results.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from app.core.config import settings
from app.core.exceptions import InvalidArgumentException, InvalidLevelRangeException
from app.core.logging import get_logger
from app.models.signal_data import (
    BetaPrior,
    EstimateResult,
    EstimationMethod,
    LevelEnergies,
    NdwtDecomposition,
    Signal,
    SolverConfig,
)
from app.services.ndwt import get_filter, level_energies, ndwt_decompose
from app.services.posterior import map_estimate
from app.services.regression import WaveletSpectrum, regression_estimate, wavelet_spectrum

logger = get_logger(__name__)

METHOD_CHOICES = ("bayes", "regression", "both")


def parse_levels(text: str) -> Tuple[int, int]:
    """Parse 'j1:j2' (or a single level 'j') into a level pair"""
    first, sep, last = text.strip().partition(":")
    try:
        j1 = int(first)
        j2 = int(last) if sep else j1
    except ValueError:
        raise InvalidLevelRangeException(f"levels must look like 'j1:j2', got '{text}'")
    if j1 > j2:
        raise InvalidLevelRangeException(f"level range {j1}:{j2} is empty")
    return j1, j2


@dataclass(frozen=True)
class EstimationReport:
    """Everything an `estimate` run reports"""
    source: str
    n: int
    n_original: int
    wavelet: str
    depth: int
    levels: Tuple[int, int]
    prior: Optional[BetaPrior] = None
    results: List[EstimateResult] = field(default_factory=list)

    def result(self, method: EstimationMethod) -> EstimateResult:
        for result in self.results:
            if result.method == method:
                return result
        raise KeyError(method.value)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "n": self.n,
            "n_original": self.n_original,
            "wavelet": self.wavelet,
            "depth": self.depth,
            "levels": list(self.levels),
            "prior": self.prior.to_dict() if self.prior else None,
            "results": [result.to_dict() for result in self.results],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EstimationReport":
        prior = data.get("prior")
        return cls(
            source=str(data["source"]),
            n=int(data["n"]),
            n_original=int(data["n_original"]),
            wavelet=str(data["wavelet"]),
            depth=int(data["depth"]),
            levels=(int(data["levels"][0]), int(data["levels"][1])),
            prior=BetaPrior(float(prior["alpha"]), float(prior["beta"])) if prior else None,
            results=[EstimateResult.from_dict(item) for item in data["results"]],
        )


class EstimationPipeline:
    """Runs the transform and the estimators with one set of transform settings"""

    def __init__(
        self,
        wavelet: Optional[str] = None,
        depth: Optional[int] = None,
        levels: Optional[Tuple[int, int]] = None,
        config: Optional[SolverConfig] = None,
    ):
        self.filter = get_filter(wavelet or settings.DEFAULT_WAVELET)
        self.depth = depth
        self.levels = levels
        self.config = config or SolverConfig.from_settings()

    def _resolve_depth(self, signal: Signal) -> int:
        if self.depth is not None:
            return self.depth
        return min(settings.DEFAULT_DEPTH, signal.J)

    def _resolve_levels(self, decomp: NdwtDecomposition) -> Tuple[int, int]:
        if self.levels is not None:
            return self.levels
        j1, j2 = settings.default_levels
        if j1 in decomp.levels and j2 in decomp.levels:
            return j1, j2
        # three coarsest levels of the decomposition
        coarsest = decomp.J - decomp.depth
        return coarsest, min(coarsest + 2, decomp.J - 1)

    def prepare(self, signal: Signal) -> Tuple[NdwtDecomposition, LevelEnergies]:
        """Decompose a dyadic-length signal and average the energies over the level range"""
        decomp = ndwt_decompose(signal, self._resolve_depth(signal), self.filter)
        j1, j2 = self._resolve_levels(decomp)
        return decomp, level_energies(decomp, j1, j2)

    def estimate_energies(self, energies: LevelEnergies, method: str = "both", prior: Optional[BetaPrior] = None) -> List[EstimateResult]:
        """Run the selected estimators on precomputed energies"""
        if method not in METHOD_CHOICES:
            raise InvalidArgumentException(f"method must be one of {METHOD_CHOICES}, got '{method}'")
        results = []
        if method in ("bayes", "both"):
            if prior is None:
                raise InvalidArgumentException(
                    "the Bayes estimator needs a prior",
                    details="give a prior mean (and optionally an ESS) or alpha and beta",
                )
            results.append(map_estimate(energies, prior, self.config))
        if method in ("regression", "both"):
            results.append(regression_estimate(energies, self.config))
        return results

    def estimate(
        self,
        signal: Signal,
        method: str = "both",
        prior: Optional[BetaPrior] = None,
        n_original: Optional[int] = None,
    ) -> EstimationReport:
        """
        Estimate H for one signal.

        Args:
            signal: Dyadic-length signal
            method: bayes, regression or both
            prior: Beta prior, required for the Bayes estimator
            n_original: Length before truncation, recorded in the report

        Returns:
            EstimationReport with one result per estimator
        """
        decomp, energies = self.prepare(signal)
        results = self.estimate_energies(energies, method, prior)
        for result in results:
            logger.info(
                "Hurst exponent estimated",
                method=result.method.value,
                h_hat=result.h_hat,
                levels=f"{energies.j1}:{energies.j2}",
                boundary_hit=result.diagnostics.boundary_hit,
            )
        return EstimationReport(
            source=signal.source,
            n=signal.n,
            n_original=n_original or signal.n,
            wavelet=self.filter.name,
            depth=decomp.depth,
            levels=(energies.j1, energies.j2),
            prior=prior if method != "regression" else None,
            results=results,
        )

    def spectrum(self, signal: Signal) -> WaveletSpectrum:
        """Wavelet spectrum (j, log2 y_j) with its fitted line"""
        _, energies = self.prepare(signal)
        return wavelet_spectrum(energies)
