from typing import List, Sequence

import numpy as np
from scipy import special

from predevaltools.core.exceptions import DataError
from predevaltools.core.types import LabelVector, LogitMatrix, PredictionMatrix


def softmax(logits: LogitMatrix) -> PredictionMatrix:
    """
    Row-wise softmax of a logit matrix.

    The per-row maximum is subtracted before exponentiation, so the result is
    invariant to adding a constant to every logit of a row.

    Parameters:
        logits (LogitMatrix): Finite n×k scores (finiteness is enforced by LogitMatrix).

    Returns:
        PredictionMatrix: The row-stochastic probabilities.
    """
    return PredictionMatrix(special.softmax(logits.data, axis=1))


def top1(preds: PredictionMatrix) -> LabelVector:
    """Per-row argmax; ties go to the lowest class index."""
    return LabelVector(np.argmax(preds.data, axis=1))


def _paired_top1(preds: PredictionMatrix, labels: LabelVector) -> np.ndarray:
    if len(labels) != preds.n:
        raise DataError(f'label count {len(labels)} does not match prediction count {preds.n}')
    return top1(preds).labels


def accuracy(preds: PredictionMatrix, labels: LabelVector) -> float:
    """
    Fraction of rows whose top-1 class equals the label.

    Raises:
        DataError: If the lengths differ.
    """
    predicted = _paired_top1(preds, labels)
    return float(np.mean(predicted == labels.labels))


def macro_f1(preds: PredictionMatrix, labels: LabelVector) -> float:
    """
    Unweighted mean of per-class F1 scores.

    Classes that appear neither among predictions nor among labels are skipped.
    A class without true positives contributes F1 = 0.

    Raises:
        DataError: If the lengths differ.
    """
    predicted = _paired_top1(preds, labels)
    truth = labels.labels
    k = max(preds.k, int(truth.max()) + 1)

    true_pos = np.bincount(truth[predicted == truth], minlength=k)
    predicted_count = np.bincount(predicted, minlength=k)
    true_count = np.bincount(truth, minlength=k)

    present = (predicted_count + true_count) > 0
    # F1 = 2TP / (2TP + FP + FN) = 2TP / (predicted + true)
    f1 = 2.0 * true_pos[present] / (predicted_count[present] + true_count[present])
    return float(np.mean(f1))


def largest_remainder(weights: Sequence[float], total: int) -> List[int]:
    """
    Apportion `total` units proportionally to nonnegative `weights`.

    Every share gets the floor of its quota; the units left over go to the largest
    fractional remainders, ties resolved toward the lowest index.

    Raises:
        DataError: If weights are negative, all zero, or total is negative.
    """
    w = np.asarray(weights, dtype=np.float64)
    if total < 0:
        raise DataError(f'cannot apportion a negative total ({total})')
    if w.ndim != 1 or (w < 0).any() or not np.isfinite(w).all() or w.sum() <= 0:
        raise DataError('apportionment weights must be finite, nonnegative and not all zero')

    quotas = w / w.sum() * total
    counts = np.floor(quotas).astype(np.int64)
    remainders = quotas - counts
    leftover = int(total - counts.sum())
    # stable sort on the negated remainder keeps lower indices first among ties
    order = np.argsort(-remainders, kind='stable')
    counts[order[:leftover]] += 1
    return [int(c) for c in counts]
