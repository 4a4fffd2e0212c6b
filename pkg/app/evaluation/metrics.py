"""Replicate statistics for Monte Carlo evaluation of Hurst estimators"""

import math
from typing import NamedTuple, Sequence

from app.core.exceptions import InvalidArgumentException


class SummaryStatistics(NamedTuple):
    mean: float
    variance: float
    mse: float
    squared_bias: float

    def to_dict(self):
        return self._asdict()


def summarize(raw: Sequence[float], true_h: float) -> SummaryStatistics:
    """
    Mean, population variance, MSE and squared bias of replicate estimates.

    The variance divides by N, so mse = variance + squared_bias holds exactly up to
    rounding. Sums are compensated (math.fsum) and taken in replicate order.

    Args:
        raw: Estimates, one per replicate
        true_h: Hurst exponent used for simulation

    Returns:
        SummaryStatistics

    Raises:
        InvalidArgumentException: empty input
    """
    values = [float(v) for v in raw]
    if not values:
        raise InvalidArgumentException("cannot summarize an empty set of estimates")
    count = len(values)
    mean = math.fsum(values) / count
    variance = math.fsum((v - mean) ** 2 for v in values) / count
    mse = math.fsum((v - true_h) ** 2 for v in values) / count
    return SummaryStatistics(
        mean=mean,
        variance=variance,
        mse=mse,
        squared_bias=(mean - true_h) ** 2,
    )
