from dataclasses import dataclass

import numpy as np

from predevaltools.core.exceptions import ConfigurationError, DataError
from predevaltools.core.primitives import largest_remainder
from predevaltools.core.types import LabelVector
from predevaltools.synthbench.rng import TASK_STREAM, cell_generator


@dataclass(frozen=True)
class TaskSpec:
    """
    A synthetic classification task: k Gaussian classes with identity covariance.

    Attributes:
        k (int): Number of classes.
        dim (int): Feature dimension.
        class_separation (float): Norm of every class mean; means point in random directions.
        seed (int): Root seed.
        n_train (int): Training samples.
        n_val (int): Validation samples.
        n_test (int): Clean test samples.
    """
    k: int = 10
    dim: int = 16
    class_separation: float = 3.0
    seed: int = 0
    n_train: int = 2000
    n_val: int = 1000
    n_test: int = 2000

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ConfigurationError(f'k must be at least 2, got {self.k}')
        if self.dim < 2:
            raise ConfigurationError(f'dim must be at least 2, got {self.dim}')
        if self.class_separation < 0:
            raise ConfigurationError(f'class_separation must be nonnegative, got {self.class_separation}')
        if self.seed < 0:
            raise ConfigurationError(f'seed must be nonnegative, got {self.seed}')
        for name in ('n_train', 'n_val', 'n_test'):
            if getattr(self, name) < self.k:
                raise ConfigurationError(f'{name} must be at least k={self.k}')


@dataclass(frozen=True)
class LabeledSet:
    """
    Features with their class labels.

    Attributes:
        features (np.ndarray): n×dim float64 matrix.
        labels (LabelVector): n class indices.
        k (int): Number of classes of the task.
    """
    features: np.ndarray
    labels: LabelVector
    k: int

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64, copy=True)
        if features.ndim != 2 or features.shape[0] != len(self.labels):
            raise DataError(f'features of shape {features.shape} do not pair with {len(self.labels)} labels')
        features.setflags(write=False)
        object.__setattr__(self, 'features', features)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels.labels, minlength=self.k)

    def subset(self, indices: np.ndarray) -> 'LabeledSet':
        return LabeledSet(self.features[indices], LabelVector(self.labels.labels[indices]), self.k)


@dataclass(frozen=True)
class Task:
    """
    Attributes:
        spec (TaskSpec): The generating spec.
        means (np.ndarray): k×dim class means.
        train (LabeledSet): Training split.
        val (LabeledSet): Source validation split.
        test (LabeledSet): Clean test split.
    """
    spec: TaskSpec
    means: np.ndarray
    train: LabeledSet
    val: LabeledSet
    test: LabeledSet

    def __iter__(self):
        return iter((self.train, self.val, self.test))


def class_means(k: int, dim: int, separation: float, rng: np.random.Generator) -> np.ndarray:
    directions = rng.standard_normal((k, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return separation * directions


def sample_split(means: np.ndarray, n: int, rng: np.random.Generator) -> LabeledSet:
    """Draw n samples with balanced classes (largest-remainder counts), shuffled."""
    k, dim = means.shape
    counts = largest_remainder(np.ones(k), n)
    labels = np.repeat(np.arange(k), counts)
    rng.shuffle(labels)
    features = means[labels] + rng.standard_normal((n, dim))
    return LabeledSet(features, LabelVector(labels), k)


def generate_task(spec: TaskSpec) -> Task:
    """
    Generate train, validation and clean test splits.

    Each split draws from its own stream, so changing one split size leaves the other
    splits unchanged. Unpacks as (train, val, test).
    """
    means = class_means(spec.k, spec.dim, spec.class_separation, cell_generator(spec.seed, TASK_STREAM, 0))
    train = sample_split(means, spec.n_train, cell_generator(spec.seed, TASK_STREAM, 1))
    val = sample_split(means, spec.n_val, cell_generator(spec.seed, TASK_STREAM, 2))
    test = sample_split(means, spec.n_test, cell_generator(spec.seed, TASK_STREAM, 3))
    return Task(spec, means, train, val, test)
