"""
Correlation statistics between label-free scores and ground-truth performance.
"""
from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats

from predevaltools.core.exceptions import DataError, NumericalError
from predevaltools.numerics.normal import inv_norm_cdf

PROBIT_CLAMP = 1e-6
# round-off past the ends of [0, 1] that probit scaling absorbs
FRACTION_SLACK = 1e-9
MIN_POINTS = 3


def _paired(xs: Sequence[float], ys: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise DataError(f'expected two equal-length vectors, got shapes {x.shape} and {y.shape}')
    if x.size < MIN_POINTS:
        raise DataError(f'need at least {MIN_POINTS} points, got {x.size}')
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DataError('correlation inputs must be finite')
    return x, y


def _check_variance(values: np.ndarray, axis_name: str) -> None:
    if np.ptp(values) == 0.0:
        raise NumericalError(f'{axis_name} values are all identical; the correlation is undefined')


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """
    Product-moment correlation.

    Raises:
        DataError: If fewer than three pairs or the lengths differ.
        NumericalError: If either argument has zero variance.
    """
    x, y = _paired(xs, ys)
    _check_variance(x, 'metric')
    _check_variance(y, 'ground-truth')
    return float(stats.pearsonr(x, y).statistic)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of average ranks; tied values share the mean of their rank span."""
    x, y = _paired(xs, ys)
    return pearson(stats.rankdata(x, method='average'), stats.rankdata(y, method='average'))


def descending_rank(values: Sequence[float]) -> np.ndarray:
    """0-based rank in descending order; ties keep their input order."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(-v, kind='stable')
    rank = np.empty(v.size, dtype=np.int64)
    rank[order] = np.arange(v.size)
    return rank


def kendall_tau_weighted(xs: Sequence[float], ys: Sequence[float]) -> float:
    """
    Weighted Kendall correlation with additive hyperbolic weights.

    Element i weighs 1 / (r_i + 1), r_i being its descending rank by ys (the ground truth),
    so agreement near the top of the true ranking counts most. Each pair weighs
    w_i + w_j and contributes +1 when concordant, -1 when discordant, 0 when tied;
    the weighted sum is divided by the total pair weight.

    Raises:
        DataError: If fewer than three pairs or the lengths differ.
        NumericalError: If either argument is entirely tied.
    """
    x, y = _paired(xs, ys)
    _check_variance(x, 'metric')
    _check_variance(y, 'ground-truth')

    weights = 1.0 / (descending_rank(y) + 1.0)
    i, j = np.triu_indices(x.size, k=1)
    pair_weight = weights[i] + weights[j]
    agreement = np.sign((x[i] - x[j]) * (y[i] - y[j]))
    return float(np.sum(pair_weight * agreement) / np.sum(pair_weight))


def probit_transform(values: Sequence[float], assume_fraction: bool) -> List[float]:
    """
    Map fractions through the inverse normal CDF after clamping to [1e-6, 1 - 1e-6].

    Values outside [0, 1] by at most FRACTION_SLACK count as the nearest end.

    Non-fraction values (assume_fraction False) pass through unchanged.

    Raises:
        DataError: If assume_fraction and a value lies further outside [0, 1].
    """
    if not assume_fraction:
        return [float(v) for v in values]

    transformed = []
    for v in values:
        v = float(v)
        if not -FRACTION_SLACK <= v <= 1.0 + FRACTION_SLACK:
            raise DataError(f'probit scaling needs values in [0, 1], got {v!r}')
        transformed.append(inv_norm_cdf(min(max(v, PROBIT_CLAMP), 1.0 - PROBIT_CLAMP)))
    return transformed


def linear_fit_r2(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float, float]:
    """
    Ordinary least squares of ys on xs.

    Returns:
        Tuple[float, float, float]: slope, intercept and R² = 1 - SS_res / SS_tot.

    Raises:
        DataError: If fewer than three pairs or the lengths differ.
        NumericalError: If xs or ys have zero variance.
    """
    x, y = _paired(xs, ys)
    _check_variance(x, 'metric')
    _check_variance(y, 'ground-truth')

    fit = stats.linregress(x, y)
    residuals = y - (fit.slope * x + fit.intercept)
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return float(fit.slope), float(fit.intercept), r_squared
