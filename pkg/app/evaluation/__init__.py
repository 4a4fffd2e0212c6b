"""Monte Carlo evaluation of the Hurst estimators"""

from .metrics import SummaryStatistics, summarize
from .harness import ExperimentConfig, MonteCarloReport, run_experiment

__all__ = [
    'SummaryStatistics',
    'summarize',
    'ExperimentConfig',
    'MonteCarloReport',
    'run_experiment',
]
