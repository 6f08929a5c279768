"""
Multinomial logistic regression trained by full-batch gradient descent.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import special

from predevaltools.core.exceptions import ConfigurationError, DataError, NumericalError
from predevaltools.core.primitives import softmax
from predevaltools.core.types import LabelVector, LogitMatrix, PredictionMatrix
from predevaltools.numerics.eigen import sym_eigenvalues
from predevaltools.synthbench.rng import MODEL_STREAM, cell_generator
from predevaltools.synthbench.task import LabeledSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearSoftmaxModel:
    """
    A linear classifier z = (x ⊙ mask) W + b.

    Attributes:
        weights (np.ndarray): dim×k weight matrix.
        bias (np.ndarray): Length-k bias.
        feature_mask (np.ndarray): Length-dim 0/1 vector of the features the model sees.
        loss_history (List[float]): Training loss before the first step and after every epoch.
    """
    weights: np.ndarray
    bias: np.ndarray
    feature_mask: np.ndarray
    loss_history: List[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.weights.shape[1]

    def logits(self, features: np.ndarray) -> LogitMatrix:
        return LogitMatrix(_logits(self.weights, self.bias, np.asarray(features) * self.feature_mask))

    def predict(self, features: np.ndarray) -> PredictionMatrix:
        return softmax(self.logits(features))


def _logits(weights: np.ndarray, bias: np.ndarray, features: np.ndarray) -> np.ndarray:
    return features @ weights + bias


def cross_entropy(weights: np.ndarray, bias: np.ndarray, features: np.ndarray, labels: LabelVector) -> float:
    """Mean cross-entropy, computed as logsumexp(z) - z_y per row."""
    z = _logits(weights, bias, features)
    y = labels.labels
    return float(np.mean(special.logsumexp(z, axis=1) - z[np.arange(y.size), y]))


def cross_entropy_gradient(
    weights: np.ndarray, bias: np.ndarray, features: np.ndarray, labels: LabelVector
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradient of the mean cross-entropy.

    With G = (softmax(Z) - Y) / n, the gradients are XᵀG for the weights and the column
    sums of G for the bias.
    """
    z = _logits(weights, bias, features)
    n = z.shape[0]
    residual = special.softmax(z, axis=1)
    residual[np.arange(n), labels.labels] -= 1.0
    residual /= n
    return features.T @ residual, residual.sum(axis=0)


def stable_learning_rate(features: np.ndarray) -> float:
    """
    Step size 2 / λ_max(X̃ᵀX̃ / n), X̃ being the features with a bias column.

    The Hessian of the softmax cross-entropy in the logits is bounded by I/2, so the loss
    is (λ_max / 2)-smooth and any step up to this size never increases it.

    Raises:
        DataError: If the features are empty or all zero.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError('stable_learning_rate needs a non-empty feature matrix')
    augmented = np.hstack([x, np.ones((x.shape[0], 1))])
    lam_max = sym_eigenvalues(augmented.T @ augmented / x.shape[0])[0]
    return 2.0 / lam_max


def train_linear_softmax(
    train: LabeledSet,
    epochs: int,
    learning_rate: Optional[float] = None,
    seed: int = 0,
    init_scale: float = 0.0,
    feature_mask: Optional[np.ndarray] = None,
) -> LinearSoftmaxModel:
    """
    Fit a multinomial logistic regression by full-batch gradient descent.

    Parameters:
        train (LabeledSet): Non-empty training data.
        epochs (int): Number of descent steps; 0 returns the initialization.
        learning_rate (Optional[float]): Step size; defaults to stable_learning_rate.
        seed (int): Seed of the weight initialization.
        init_scale (float): Standard deviation of the initial weights; 0 starts from zeros.
        feature_mask (Optional[np.ndarray]): 0/1 vector selecting the features the model sees.

    Returns:
        LinearSoftmaxModel: The trained model with its loss history.

    Raises:
        ConfigurationError: On negative epochs or a non-positive learning rate.
        NumericalError: If the loss becomes non-finite; the message names the epoch.
    """
    if train.n == 0:
        raise DataError('training set is empty')
    if epochs < 0:
        raise ConfigurationError(f'epochs must be nonnegative, got {epochs}')

    dim = train.features.shape[1]
    mask = np.ones(dim) if feature_mask is None else np.asarray(feature_mask, dtype=np.float64)
    if mask.shape != (dim,):
        raise ConfigurationError(f'feature mask must have length {dim}')
    x = train.features * mask

    step = stable_learning_rate(x) if learning_rate is None else float(learning_rate)
    if not step > 0:
        raise ConfigurationError(f'learning_rate must be positive, got {learning_rate}')

    rng = cell_generator(seed, MODEL_STREAM, 0)
    weights = init_scale * rng.standard_normal((dim, train.k)) if init_scale > 0 else np.zeros((dim, train.k))
    bias = np.zeros(train.k)

    history = [cross_entropy(weights, bias, x, train.labels)]
    for epoch in range(1, epochs + 1):
        grad_w, grad_b = cross_entropy_gradient(weights, bias, x, train.labels)
        weights = weights - step * grad_w
        bias = bias - step * grad_b
        loss = cross_entropy(weights, bias, x, train.labels) if np.isfinite(weights).all() else float('nan')
        if not np.isfinite(loss):
            raise NumericalError(f'training diverged at epoch {epoch} (learning rate {step:g})')
        history.append(loss)

    logger.debug('Trained %d epoch(s) at lr=%g: loss %.4f -> %.4f', epochs, step, history[0], history[-1])
    return LinearSoftmaxModel(weights, bias, mask, history)
