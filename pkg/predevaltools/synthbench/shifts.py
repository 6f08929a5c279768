"""
Test-set corruptions with five severity levels, and long-tailed resampling.
"""
from dataclasses import dataclass
from typing import Dict, List, Literal, Sequence, Tuple

import numpy as np

from predevaltools.core.exceptions import ConfigurationError, DataError
from predevaltools.core.primitives import largest_remainder
from predevaltools.synthbench.rng import IMBALANCE_STREAM, SHIFT_STREAM, cell_generator
from predevaltools.synthbench.task import LabeledSet

ShiftKind = Literal['gaussian_noise', 'feature_dropout', 'mean_shift', 'covariance_scale', 'label_prior_shift']
SHIFT_KINDS: Tuple[str, ...] = (
    'gaussian_noise', 'feature_dropout', 'mean_shift', 'covariance_scale', 'label_prior_shift'
)
SEVERITIES = (1, 2, 3, 4, 5)

SEVERITY_GRIDS: Dict[str, Tuple[float, ...]] = {
    # additive noise standard deviation
    'gaussian_noise': (0.5, 1.0, 1.5, 2.0, 3.0),
    # probability of zeroing each feature value
    'feature_dropout': (0.1, 0.25, 0.4, 0.55, 0.7),
    # translation length, in units of class separation
    'mean_shift': (0.2, 0.4, 0.6, 0.8, 1.0),
    # factor applied to within-class deviations
    'covariance_scale': (1.5, 2.0, 2.5, 3.0, 4.0),
    # exponential tilt of the class prior
    'label_prior_shift': (0.5, 1.0, 1.5, 2.0, 3.0),
}


@dataclass(frozen=True)
class ShiftSpec:
    """
    Attributes:
        kind (ShiftKind): Corruption type.
        severity (int): Level 1..5; the clean set is the baseline and has no level.
    """
    kind: ShiftKind
    severity: int

    def __post_init__(self) -> None:
        if self.kind not in SHIFT_KINDS:
            raise ConfigurationError(f'unknown shift kind {self.kind!r}; expected one of {", ".join(SHIFT_KINDS)}')
        if self.severity not in SEVERITIES:
            raise ConfigurationError(f'severity must be an integer in 1..5, got {self.severity!r}')

    @property
    def magnitude(self) -> float:
        return SEVERITY_GRIDS[self.kind][self.severity - 1]

    @property
    def dataset_id(self) -> str:
        return f'{self.kind}-s{self.severity}'


@dataclass(frozen=True)
class ImbalanceSpec:
    """
    Attributes:
        ratio_m (float): Least-to-most frequent class count ratio, in (0, 1].
        profile (str): Only 'exponential': n_j = n_0 · m^(j / (k - 1)).
    """
    ratio_m: float
    profile: Literal['exponential'] = 'exponential'

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio_m <= 1.0:
            raise ConfigurationError(f'imbalance ratio must be in (0, 1], got {self.ratio_m}')
        if self.profile != 'exponential':
            raise ConfigurationError(f'unknown imbalance profile {self.profile!r}')

    def weights(self, k: int) -> np.ndarray:
        return self.ratio_m ** (np.arange(k) / (k - 1))


def _class_centered(test: LabeledSet) -> Tuple[np.ndarray, np.ndarray]:
    """Empirical per-class means of the set, broadcast to rows, and the row deviations."""
    y = test.labels.labels
    sums = np.zeros((test.k, test.features.shape[1]))
    np.add.at(sums, y, test.features)
    counts = np.maximum(test.class_counts(), 1)[:, None]
    row_means = (sums / counts)[y]
    return row_means, test.features - row_means


def apply_shift(test: LabeledSet, shift: ShiftSpec, seed: int, separation: float = 1.0) -> LabeledSet:
    """
    Corrupt a test set.

    gaussian_noise adds N(0, σ²) noise; feature_dropout zeroes each value independently;
    mean_shift translates every sample along one random unit direction by magnitude ×
    separation; covariance_scale stretches deviations from the class means; and
    label_prior_shift resamples with replacement so class j has weight exp(-tilt·j/(k-1)),
    leaving each class's feature distribution unchanged.

    The stream depends only on (seed, kind, severity).
    """
    rng = cell_generator(seed, SHIFT_STREAM, SHIFT_KINDS.index(shift.kind), shift.severity)
    x = test.features
    level = shift.magnitude

    if shift.kind == 'gaussian_noise':
        return LabeledSet(x + level * rng.standard_normal(x.shape), test.labels, test.k)

    if shift.kind == 'feature_dropout':
        keep = rng.random(x.shape) >= level
        return LabeledSet(x * keep, test.labels, test.k)

    if shift.kind == 'mean_shift':
        direction = rng.standard_normal(x.shape[1])
        direction /= np.linalg.norm(direction)
        return LabeledSet(x + level * separation * direction, test.labels, test.k)

    if shift.kind == 'covariance_scale':
        row_means, deviations = _class_centered(test)
        return LabeledSet(row_means + level * deviations, test.labels, test.k)

    k = test.k
    targets = largest_remainder(np.exp(-level * np.arange(k) / (k - 1)), test.n)
    y = test.labels.labels
    picks = []
    for cls, count in enumerate(targets):
        pool = np.flatnonzero(y == cls)
        if count and pool.size == 0:
            raise DataError(f'label_prior_shift needs samples of class {cls}')
        picks.append(rng.choice(pool, size=count, replace=True) if count else pool[:0])
    indices = np.concatenate(picks)
    rng.shuffle(indices)
    return test.subset(indices)


def imbalance_counts(supply: np.ndarray, spec: ImbalanceSpec) -> List[int]:
    """
    Class counts of the exponential profile that fit the available supply.

    n_0 is the largest integer head count whose profile n_0·w_j stays within every class's
    supply; n_0·Σw samples are then apportioned by largest remainder, which never exceeds
    the supply of any class.

    Raises:
        DataError: If some class has too few samples to realize the profile.
    """
    supply = np.asarray(supply, dtype=np.int64)
    weights = spec.weights(supply.size)
    head = int(np.min(np.floor(supply / weights + 1e-9)))
    if head < 1:
        raise DataError(f'insufficient per-class supply {supply.tolist()} for imbalance ratio {spec.ratio_m}')
    total = int(np.floor(head * weights.sum() + 1e-9))
    return largest_remainder(weights, total)


def apply_imbalance(test: LabeledSet, spec: ImbalanceSpec, seed: int) -> LabeledSet:
    """
    Subsample a test set, without replacement, into a long-tailed version.

    Class 0 is the head and class k-1 the tail. With ratio 1 the result is class-balanced.
    """
    counts = imbalance_counts(test.class_counts(), spec)
    rng = cell_generator(seed, IMBALANCE_STREAM, 0)
    y = test.labels.labels
    picks = [rng.choice(np.flatnonzero(y == cls), size=count, replace=False) for cls, count in enumerate(counts)]
    indices = np.sort(np.concatenate(picks))
    return test.subset(indices)


def severity_grid(kinds: Sequence[str] = SHIFT_KINDS, severities: Sequence[int] = SEVERITIES) -> List[ShiftSpec]:
    """Every (kind, severity) combination, kind-major."""
    return [ShiftSpec(kind, severity) for kind in kinds for severity in severities]
