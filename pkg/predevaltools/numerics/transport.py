import logging
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import ot

from predevaltools.core.exceptions import ConfigurationError, DataError, NumericalError
from predevaltools.core.types import Histogram

logger = logging.getLogger(__name__)

MARGINAL_TOLERANCE = 1e-9
PLAN_TOLERANCE = 1e-8
ENTROPIC_MARGINAL_TOLERANCE = 1e-6
EXACT_MAX_ITER = 10_000_000

Masses = Union[Histogram, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class TransportResult:
    """
    Solution of a discrete transport problem.

    Attributes:
        total_cost (float): Sum of plan * cost.
        plan (np.ndarray): n×m coupling whose marginals are the supply and demand.
        solver (str): 'network_simplex' or 'sinkhorn'.
    """
    total_cost: float
    plan: np.ndarray
    solver: str


def _as_masses(values: Masses, name: str) -> np.ndarray:
    array = values.mass if isinstance(values, Histogram) else np.asarray(values, dtype=np.float64)
    array = np.ascontiguousarray(array, dtype=np.float64)
    if array.ndim != 1 or array.size == 0:
        raise DataError(f'{name} must be a non-empty vector')
    if not np.isfinite(array).all() or (array < 0).any():
        raise DataError(f'{name} must be finite and nonnegative')
    return array


def _validate_problem(cost: np.ndarray, supply: Masses, demand: Masses):
    a = _as_masses(supply, 'supply')
    b = _as_masses(demand, 'demand')
    m = np.ascontiguousarray(cost, dtype=np.float64)
    if m.shape != (a.size, b.size):
        raise DataError(f'cost matrix shape {m.shape} does not match supply/demand sizes ({a.size}, {b.size})')
    if not np.isfinite(m).all() or (m < 0).any():
        raise DataError('cost matrix entries must be finite and nonnegative')
    if abs(a.sum() - b.sum()) > MARGINAL_TOLERANCE:
        raise DataError(f'infeasible marginals: supply sums to {a.sum()!r}, demand to {b.sum()!r}')
    return m, a, b


def emd_1d(h_t: Histogram, h_s: Histogram) -> float:
    """
    Earth mover's distance between two histograms over ordered bins with cost |i - j|.

    Equals the sum over the first k-1 bins of the absolute CDF difference, which is the
    exact optimal transport cost in one dimension.

    Raises:
        DataError: If the histograms have different lengths.
    """
    if h_t.k != h_s.k:
        raise DataError(f'histogram lengths differ ({h_t.k} vs {h_s.k})')
    cdf_gap = np.cumsum(h_t.mass) - np.cumsum(h_s.mass)
    return float(np.sum(np.abs(cdf_gap[:-1])))


def ot_exact(cost: np.ndarray, supply: Masses, demand: Masses) -> TransportResult:
    """
    Exact discrete optimal transport by the network simplex (POT's `ot.emd`).

    Parameters:
        cost (np.ndarray): n×m nonnegative ground costs.
        supply (Masses): n source masses.
        demand (Masses): m target masses with the same total as supply.

    Returns:
        TransportResult: Optimal cost and plan.

    Raises:
        DataError: On shape mismatch, negative entries or infeasible marginals.
        NumericalError: If the solver stops without an optimal feasible plan.
    """
    m, a, b = _validate_problem(cost, supply, demand)

    with warnings.catch_warnings():
        warnings.simplefilter('ignore')
        plan, log = ot.emd(a, b, m, numItermax=EXACT_MAX_ITER, log=True)

    plan = np.asarray(plan, dtype=np.float64)
    if log.get('warning'):
        raise NumericalError(f'network simplex failed: {log["warning"]}')

    violation = max(np.max(np.abs(plan.sum(axis=1) - a)), np.max(np.abs(plan.sum(axis=0) - b)))
    if violation > PLAN_TOLERANCE:
        raise NumericalError(f'network simplex plan violates marginals by {violation:.3e}')

    return TransportResult(total_cost=float(np.sum(plan * m)), plan=plan, solver='network_simplex')


def ot_entropic(cost: np.ndarray, supply: Masses, demand: Masses, epsilon: float, max_iter: int) -> TransportResult:
    """
    Entropy-regularized transport by log-domain Sinkhorn scaling (POT's `ot.sinkhorn`).

    The returned cost is <plan, cost> of the regularized plan; it approaches the exact
    optimum as epsilon shrinks. Zero-mass rows and columns are removed before scaling and
    restored as zeros in the plan.

    Raises:
        ConfigurationError: If epsilon <= 0 or max_iter < 1.
        DataError: On shape mismatch, negative entries or infeasible marginals.
        NumericalError: If the marginals are still violated after max_iter iterations.
    """
    if not epsilon > 0:
        raise ConfigurationError(f'epsilon must be positive, got {epsilon}')
    if max_iter < 1:
        raise ConfigurationError(f'max_iter must be at least 1, got {max_iter}')
    m, a, b = _validate_problem(cost, supply, demand)

    rows = np.flatnonzero(a > 0)
    cols = np.flatnonzero(b > 0)
    sub_cost = np.ascontiguousarray(m[np.ix_(rows, cols)])

    with warnings.catch_warnings():
        warnings.simplefilter('ignore')
        sub_plan = ot.sinkhorn(
            a[rows], b[cols], sub_cost, reg=epsilon,
            method='sinkhorn_log', numItermax=max_iter, stopThr=1e-12
        )

    plan = np.zeros_like(m)
    plan[np.ix_(rows, cols)] = np.asarray(sub_plan, dtype=np.float64)

    violation = max(np.max(np.abs(plan.sum(axis=1) - a)), np.max(np.abs(plan.sum(axis=0) - b)))
    if not np.isfinite(plan).all() or violation > ENTROPIC_MARGINAL_TOLERANCE:
        raise NumericalError(
            f'Sinkhorn did not converge within {max_iter} iterations '
            f'(final marginal violation {violation:.3e}, epsilon={epsilon})'
        )

    logger.debug('Sinkhorn converged: epsilon=%g, marginal violation %.2e', epsilon, violation)
    return TransportResult(total_cost=float(np.sum(plan * m)), plan=plan, solver='sinkhorn')
