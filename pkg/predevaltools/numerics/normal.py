import math

from scipy import special

from predevaltools.core.exceptions import DataError


def norm_cdf(x: float) -> float:
    """Standard normal CDF."""
    return float(special.ndtr(x))


def inv_norm_cdf(p: float) -> float:
    """
    Inverse of the standard normal CDF (probit).

    Raises:
        DataError: If p is not strictly between 0 and 1.
    """
    value = float(p)
    if not (math.isfinite(value) and 0.0 < value < 1.0):
        raise DataError(f'probit is defined on (0, 1), got {p!r}')
    return float(special.ndtri(value))
