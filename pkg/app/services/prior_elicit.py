"""Beta prior hyperparameters from a prior mean and an effective sample size (alpha + beta)"""

import math
from typing import Optional

from app.core.config import settings
from app.core.exceptions import InvalidArgumentException
from app.models.signal_data import BetaPrior


def elicit_beta(mean: float, ess: float) -> BetaPrior:
    """alpha = mean * ess, beta = (1 - mean) * ess"""
    mean, ess = float(mean), float(ess)
    if not math.isfinite(mean) or not 0.0 < mean < 1.0:
        raise InvalidArgumentException(f"prior mean must lie in (0, 1), got {mean}")
    if not math.isfinite(ess) or ess <= 0:
        raise InvalidArgumentException(f"effective sample size must be positive, got {ess}")
    return BetaPrior(alpha=mean * ess, beta=(1.0 - mean) * ess)


def default_ess(n: int) -> float:
    """Half the signal length"""
    if n < 2:
        raise InvalidArgumentException(f"signal length must be at least 2, got {n}")
    return settings.DEFAULT_ESS_FRACTION * n


def resolve_prior(
    n: int,
    prior_mean: Optional[float] = None,
    ess: Optional[float] = None,
    alpha: Optional[float] = None,
    beta: Optional[float] = None,
) -> Optional[BetaPrior]:
    """
    Pick the prior from either explicit (alpha, beta) or (prior_mean, ess).

    ESS defaults to default_ess(n). Returns None when neither form is given.
    """
    explicit = alpha is not None or beta is not None
    if explicit:
        if alpha is None or beta is None:
            raise InvalidArgumentException("alpha and beta must be given together")
        if prior_mean is not None or ess is not None:
            raise InvalidArgumentException("give either alpha/beta or prior mean/ESS, not both")
        return BetaPrior(alpha=float(alpha), beta=float(beta))
    if prior_mean is None:
        if ess is not None:
            raise InvalidArgumentException("ESS needs a prior mean")
        return None
    return elicit_beta(prior_mean, ess if ess is not None else default_ess(n))
