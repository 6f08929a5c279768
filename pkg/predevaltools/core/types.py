from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional, Sequence

import numpy as np

from predevaltools.core.exceptions import DataError

ROW_SUM_TOLERANCE = 1e-9
"""Rows of a PredictionMatrix must sum to one within this tolerance."""

HISTOGRAM_TOLERANCE = 1e-9

StudyMode = Literal['dataset_centric', 'model_centric']
STUDY_MODES = ('dataset_centric', 'model_centric')


def _frozen_copy(data: np.ndarray) -> np.ndarray:
    array = np.array(data, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


def _check_matrix_shape(data: np.ndarray, kind: str) -> None:
    if data.ndim != 2:
        raise DataError(f'{kind} must be a 2-dimensional matrix, got {data.ndim} dimension(s)')
    n, k = data.shape
    if n < 1:
        raise DataError(f'{kind} must have at least one row')
    if k < 2:
        raise DataError(f'{kind} must have at least two classes, got {k}')


def _first_bad_row(mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask)[0])


@dataclass(frozen=True)
class LogitMatrix:
    """
    Unnormalized classifier scores, one row per sample.

    Attributes:
        data (np.ndarray): Read-only n×k float64 matrix with finite entries.
    """
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        _check_matrix_shape(data, 'LogitMatrix')
        finite_rows = np.isfinite(data).all(axis=1)
        if not finite_rows.all():
            raise DataError(f'LogitMatrix row {_first_bad_row(~finite_rows)} contains a non-finite value')
        object.__setattr__(self, 'data', _frozen_copy(data))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def k(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PredictionMatrix:
    """
    Row-stochastic matrix of softmax outputs, one row per sample.

    Attributes:
        data (np.ndarray): Read-only n×k float64 matrix; entries in [0, 1] and every row
            summing to one within ROW_SUM_TOLERANCE.
    """
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        _check_matrix_shape(data, 'PredictionMatrix')
        finite_rows = np.isfinite(data).all(axis=1)
        if not finite_rows.all():
            raise DataError(f'PredictionMatrix row {_first_bad_row(~finite_rows)} contains a non-finite value')
        in_range = ((data >= 0.0) & (data <= 1.0)).all(axis=1)
        if not in_range.all():
            raise DataError(f'PredictionMatrix row {_first_bad_row(~in_range)} has an entry outside [0, 1]')
        off_sum = np.abs(data.sum(axis=1) - 1.0) > ROW_SUM_TOLERANCE
        if off_sum.any():
            row = _first_bad_row(off_sum)
            raise DataError(f'PredictionMatrix row {row} sums to {data[row].sum()!r}, expected 1')
        object.__setattr__(self, 'data', _frozen_copy(data))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def k(self) -> int:
        return self.data.shape[1]

    def max_confidence(self) -> np.ndarray:
        """Per-row maximum probability."""
        return self.data.max(axis=1)


@dataclass(frozen=True)
class LabelVector:
    """
    Ground-truth class indices.

    Attributes:
        labels (np.ndarray): Read-only int64 vector of class indices, all >= 0.
    """
    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise DataError('LabelVector must be one-dimensional')
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise DataError('LabelVector entries must be integers')
        labels = labels.astype(np.int64)
        if (labels < 0).any():
            raise DataError(f'LabelVector entry {_first_bad_row(labels < 0)} is negative')
        labels.setflags(write=False)
        object.__setattr__(self, 'labels', labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def check_against(self, n: int, k: int) -> None:
        """
        Validate pairing with an n×k matrix.

        Raises:
            DataError: If the length differs from n or an index is >= k.
        """
        if len(self) != n:
            raise DataError(f'label count {len(self)} does not match matrix row count {n}')
        too_large = self.labels >= k
        if too_large.any():
            row = _first_bad_row(too_large)
            raise DataError(f'label {int(self.labels[row])} at position {row} is not a valid class index for k={k}')


@dataclass(frozen=True)
class Histogram:
    """
    Probability mass over k bins.

    Attributes:
        mass (np.ndarray): Read-only nonnegative vector summing to one within HISTOGRAM_TOLERANCE.
    """
    mass: np.ndarray

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.ndim != 1 or mass.size < 1:
            raise DataError('Histogram mass must be a non-empty vector')
        if not np.isfinite(mass).all() or (mass < 0).any():
            raise DataError('Histogram mass must be finite and nonnegative')
        if abs(mass.sum() - 1.0) > HISTOGRAM_TOLERANCE:
            raise DataError(f'Histogram mass sums to {mass.sum()!r}, expected 1')
        object.__setattr__(self, 'mass', _frozen_copy(mass))

    @classmethod
    def normalized(cls, values: Sequence[float]) -> 'Histogram':
        """
        Build a histogram by normalizing nonnegative weights.

        Raises:
            DataError: If any weight is negative or non-finite, or all weights are zero.
        """
        weights = np.asarray(values, dtype=np.float64)
        if weights.ndim != 1 or not np.isfinite(weights).all() or (weights < 0).any():
            raise DataError('histogram weights must be finite and nonnegative')
        total = weights.sum()
        if total <= 0:
            raise DataError('histogram weights are all zero')
        return cls(weights / total)

    @classmethod
    def uniform(cls, k: int) -> 'Histogram':
        return cls(np.full(k, 1.0 / k))

    @property
    def k(self) -> int:
        return int(self.mass.shape[0])


@dataclass(frozen=True)
class ValidationStats:
    """
    Source validation statistics used by ATC and DoC.

    Attributes:
        val_accuracy (float): Top-1 accuracy on the labeled validation set.
        val_conf_score (float): Mean maximum probability on the validation set.
        atc_threshold (float): Confidence threshold calibrated so the share of validation rows
            strictly above it reproduces val_accuracy.
    """
    val_accuracy: float
    val_conf_score: float
    atc_threshold: float


@dataclass(frozen=True)
class ManifestEntry:
    """
    One (model, test set) pair of a study.

    Attributes:
        model_id (str): Identifier of the classifier.
        dataset_id (str): Identifier of the test set.
        predictions_path (Path): CSV of the prediction matrix.
        logits_path (Optional[Path]): CSV of the logit matrix, if exported.
        labels_path (Optional[Path]): Labels for ground-truth accuracy.
        val_predictions_path (Optional[Path]): Validation predictions for ATC/DoC.
        val_labels_path (Optional[Path]): Validation labels for ATC/DoC.
    """
    model_id: str
    dataset_id: str
    predictions_path: Path
    logits_path: Optional[Path] = None
    labels_path: Optional[Path] = None
    val_predictions_path: Optional[Path] = None
    val_labels_path: Optional[Path] = None

    @property
    def subject_id(self) -> str:
        return f'{self.model_id}/{self.dataset_id}'


@dataclass(frozen=True)
class Manifest:
    """
    Collection of study entries.

    Attributes:
        mode (StudyMode): 'dataset_centric' (one model, many test sets) or
            'model_centric' (many models, one test set).
        entries (List[ManifestEntry]): The entries, in file order.
    """
    mode: StudyMode
    entries: List[ManifestEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.mode not in STUDY_MODES:
            raise DataError(f'unknown manifest mode {self.mode!r}; expected one of {", ".join(STUDY_MODES)}')
        if not self.entries:
            raise DataError('manifest has no entries')

        pairs = [(e.model_id, e.dataset_id) for e in self.entries]
        if len(set(pairs)) != len(pairs):
            raise DataError('manifest contains duplicate (model_id, dataset_id) entries')

        if self.mode == 'dataset_centric':
            models = sorted({e.model_id for e in self.entries})
            if len(models) != 1:
                raise DataError(f'dataset_centric manifest must have exactly one model_id, found {models}')
        else:
            datasets = sorted({e.dataset_id for e in self.entries})
            if len(datasets) != 1:
                raise DataError(f'model_centric manifest must have exactly one dataset_id, found {datasets}')
