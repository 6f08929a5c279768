"""
Hybrid scores: capture confidence and dispersity together.
"""
import logging
from dataclasses import dataclass
from typing import List, Literal

import numpy as np

from predevaltools.core.exceptions import ConfigurationError, DataError
from predevaltools.core.primitives import largest_remainder
from predevaltools.core.types import Histogram, PredictionMatrix
from predevaltools.metrics.confidence import neg_entropy
from predevaltools.metrics.dispersity import class_entropy
from predevaltools.numerics.eigen import nuclear_norm_raw
from predevaltools.numerics.transport import ot_entropic, ot_exact

logger = logging.getLogger(__name__)

PriorOrigin = Literal['uniform', 'file']
CotAggregation = Literal['mean', 'max']
COT_AGGREGATIONS = ('mean', 'max')


@dataclass(frozen=True)
class PriorDistribution:
    """
    Prior class distribution used by COT and SoftmaxCorr.

    Attributes:
        d (Histogram): Class proportions.
        origin (PriorOrigin): 'uniform' or 'file'.
    """
    d: Histogram
    origin: PriorOrigin = 'uniform'

    @classmethod
    def uniform(cls, k: int) -> 'PriorDistribution':
        return cls(Histogram.uniform(k), 'uniform')


@dataclass(frozen=True)
class CotConfig:
    """
    Solver settings for COT.

    Attributes:
        aggregation (CotAggregation): 'mean' averages the per-sample transport cost,
            'max' returns the bottleneck (largest cost the optimal matching must pay).
        exact_limit (int): Largest n solved by the network simplex; larger problems
            use entropic transport (mean aggregation only).
        epsilon (float): Entropic regularization of the fallback solver.
        max_iter (int): Iteration cap of the fallback solver.
    """
    aggregation: CotAggregation = 'mean'
    exact_limit: int = 2000
    epsilon: float = 1e-2
    max_iter: int = 10_000

    def __post_init__(self) -> None:
        if self.aggregation not in COT_AGGREGATIONS:
            raise ConfigurationError(
                f'cot_aggregation must be one of {", ".join(COT_AGGREGATIONS)}, got {self.aggregation!r}'
            )
        if self.exact_limit < 1:
            raise ConfigurationError(f'cot_exact_limit must be at least 1, got {self.exact_limit}')
        if not self.epsilon > 0:
            raise ConfigurationError(f'cot_epsilon must be positive, got {self.epsilon}')
        if self.max_iter < 1:
            raise ConfigurationError(f'cot max_iter must be at least 1, got {self.max_iter}')


@dataclass(frozen=True)
class CotSolution:
    """
    Attributes:
        value (float): The COT score.
        solver (str): 'network_simplex' or 'sinkhorn'.
        aggregation (CotAggregation): How per-sample costs were combined.
        reference_counts (List[int]): Number of reference one-hots per class.
    """
    value: float
    solver: str
    aggregation: CotAggregation
    reference_counts: List[int]


def _check_prior(preds: PredictionMatrix, prior: PriorDistribution) -> None:
    if prior.d.k != preds.k:
        raise DataError(f'prior has {prior.d.k} classes, predictions have {preds.k}')


def im_score(preds: PredictionMatrix) -> float:
    """Information maximization: H(marginal) minus the mean per-row entropy."""
    return class_entropy(preds) + neg_entropy(preds)


def nuclear_norm_score(preds: PredictionMatrix) -> float:
    """Nuclear norm of the prediction matrix normalized by sqrt(min(n, k) * n)."""
    n, k = preds.n, preds.k
    return nuclear_norm_raw(preds.data) / float(np.sqrt(min(n, k) * n))


def cot_cost_matrix(preds: PredictionMatrix) -> np.ndarray:
    """
    ℓ∞ distance from every prediction row to every class one-hot.

    ||p - e_c||_∞ = max(1 - p_c, max_{l != c} p_l).
    """
    p = preds.data
    order = np.sort(p, axis=1)
    row_max = order[:, -1:]
    runner_up = order[:, -2:-1]
    # largest entry outside column c; a tied maximum makes runner_up equal to row_max
    others = np.where(p == row_max, runner_up, row_max)
    return np.maximum(1.0 - p, others)


def _bottleneck(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray) -> float:
    """
    Smallest threshold t such that a feasible plan exists using only costs <= t.

    Masses are multiples of 1/n, so an integral optimum exists: the 0/1 cost of the best
    plan is either 0 or at least 1/n.
    """
    n = supply.size
    levels = np.unique(cost)
    lo, hi = 0, levels.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        blocked = (cost > levels[mid]).astype(np.float64)
        if ot_exact(blocked, supply, demand).total_cost <= 0.5 / n:
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo])


def cot_solve(preds: PredictionMatrix, prior: PriorDistribution, cfg: CotConfig = CotConfig()) -> CotSolution:
    """
    Confidence optimal transport between prediction rows and prior-shaped one-hot references.

    The n references are one-hots whose class counts apportion n·d by largest remainder.
    Identical references are merged into one target per class, which leaves the optimum
    unchanged and reduces the problem to n×k.

    Raises:
        DataError: If the prior does not have k classes.
        NumericalError: If a solver fails.
    """
    _check_prior(preds, prior)
    n = preds.n
    counts = largest_remainder(prior.d.mass, n)
    cost = cot_cost_matrix(preds)
    supply = np.full(n, 1.0 / n)
    demand = np.asarray(counts, dtype=np.float64) / n

    if cfg.aggregation == 'max':
        value = _bottleneck(cost, supply, demand)
        return CotSolution(value, 'network_simplex', 'max', counts)

    if n > cfg.exact_limit:
        logger.warning('COT with n=%d exceeds the exact limit %d; using entropic transport (epsilon=%g)',
                       n, cfg.exact_limit, cfg.epsilon)
        result = ot_entropic(cost, supply, demand, cfg.epsilon, cfg.max_iter)
    else:
        result = ot_exact(cost, supply, demand)
    return CotSolution(result.total_cost, result.solver, 'mean', counts)


def cot_score(preds: PredictionMatrix, prior: PriorDistribution, cfg: CotConfig = CotConfig()) -> float:
    return cot_solve(preds, prior, cfg).value


def softmax_corr(preds: PredictionMatrix, prior: PriorDistribution) -> float:
    """
    Cosine similarity between C = PᵀP / n and diag(d).

    Raises:
        DataError: If the prior does not have k classes.
    """
    _check_prior(preds, prior)
    c = preds.data.T @ preds.data / preds.n
    d = prior.d.mass
    inner = float(np.sum(np.diag(c) * d))
    return inner / (float(np.linalg.norm(c)) * float(np.linalg.norm(d)))
