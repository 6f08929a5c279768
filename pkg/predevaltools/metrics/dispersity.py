"""
Dispersity-based scores: how predictions spread over the k classes.
"""
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from predevaltools.core.exceptions import DataError
from predevaltools.core.primitives import top1
from predevaltools.core.types import Histogram, PredictionMatrix
from predevaltools.numerics.transport import emd_1d

HistogramOrigin = Literal['uniform', 'user_supplied']


@dataclass(frozen=True)
class SourceHistogram:
    """
    Reference label distribution for CTD.

    Attributes:
        mass (Histogram): Class proportions.
        origin (HistogramOrigin): 'uniform' or 'user_supplied'.
    """
    mass: Histogram
    origin: HistogramOrigin = 'uniform'

    @classmethod
    def uniform(cls, k: int) -> 'SourceHistogram':
        return cls(Histogram.uniform(k), 'uniform')


def marginal(preds: PredictionMatrix) -> np.ndarray:
    """Column means of the prediction matrix."""
    return preds.data.mean(axis=0)


def class_entropy(preds: PredictionMatrix) -> float:
    """Entropy of the mean predicted distribution, in [0, ln k]."""
    return float(special.entr(marginal(preds)).sum())


def top1_histogram(preds: PredictionMatrix) -> Histogram:
    """Empirical distribution of top-1 predicted classes."""
    counts = np.bincount(top1(preds).labels, minlength=preds.k)
    return Histogram(counts / preds.n)


def ctd_score(preds: PredictionMatrix, source: SourceHistogram) -> float:
    """
    Class transport distance: 1-D earth mover's distance with cost |i - j| between the
    top-1 histogram and the source histogram. Lower is better.

    Raises:
        DataError: If the source histogram has a different number of classes.
    """
    if source.mass.k != preds.k:
        raise DataError(f'source histogram has {source.mass.k} classes, predictions have {preds.k}')
    return emd_1d(top1_histogram(preds), source.mass)
