import numpy as np
import pytest

from predevaltools.core.types import LabelVector, PredictionMatrix


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the synthetic end-to-end studies')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: end-to-end synthetic studies, enabled with --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


def uniform_matrix(n: int, k: int) -> PredictionMatrix:
    return PredictionMatrix(np.full((n, k), 1.0 / k))


def balanced_one_hot(n: int, k: int) -> PredictionMatrix:
    return PredictionMatrix(np.eye(k)[np.arange(n) % k])


def single_class_one_hot(n: int, k: int, cls: int = 0) -> PredictionMatrix:
    return PredictionMatrix(np.eye(k)[np.full(n, cls)])


def random_predictions(rng: np.random.Generator, n: int, k: int, sharpness: float = 1.0) -> PredictionMatrix:
    z = sharpness * rng.standard_normal((n, k))
    p = np.exp(z - z.max(axis=1, keepdims=True))
    return PredictionMatrix(p / p.sum(axis=1, keepdims=True))


def random_labels(rng: np.random.Generator, n: int, k: int) -> LabelVector:
    return LabelVector(rng.integers(0, k, size=n))
