"""
Confidence-based scores: how certain the classifier is on each test sample.
"""
from dataclasses import dataclass

import numpy as np
from scipy import special

from predevaltools.core.exceptions import ConfigurationError, DataError
from predevaltools.core.primitives import accuracy
from predevaltools.core.types import LabelVector, LogitMatrix, PredictionMatrix, ValidationStats

RECONSTRUCTION_EPSILON = 1e-12
ATC_FLOOR_OFFSET = 1e-12


@dataclass(frozen=True)
class ConfidenceConfig:
    """
    Parameters of the logit-based confidence scores.

    Attributes:
        energy_temperature (float): Temperature T of the energy score.
        mano_eta (float): Switch point between MaNo's Taylor and exponential normalizations.
        mano_p (int): Norm order of the MaNo aggregate.
    """
    energy_temperature: float = 1.0
    mano_eta: float = 5.0
    mano_p: int = 4

    def __post_init__(self) -> None:
        if not self.energy_temperature > 0:
            raise ConfigurationError(f'energy_temperature must be positive, got {self.energy_temperature}')
        if not self.mano_eta > 0:
            raise ConfigurationError(f'mano_eta must be positive, got {self.mano_eta}')
        if int(self.mano_p) != self.mano_p or self.mano_p < 1:
            raise ConfigurationError(f'mano_p must be a positive integer, got {self.mano_p}')


def row_entropies(probabilities: np.ndarray) -> np.ndarray:
    """Shannon entropy (natural log) of each row, with 0·ln 0 = 0."""
    return special.entr(probabilities).sum(axis=1)


def conf_score(preds: PredictionMatrix) -> float:
    """Mean of the per-row maximum probability."""
    return float(np.mean(preds.max_confidence()))


def mean_entropy(preds: PredictionMatrix) -> float:
    """Mean per-row Shannon entropy, in [0, ln k]."""
    return float(np.mean(row_entropies(preds.data)))


def neg_entropy(preds: PredictionMatrix) -> float:
    """Negated mean entropy, in [-ln k, 0]; higher means more confident."""
    return -mean_entropy(preds)


def calibrate_atc(val_preds: PredictionMatrix, val_labels: LabelVector) -> ValidationStats:
    """
    Calibrate the ATC threshold on a labeled validation set.

    With maximum confidences sorted descending as c(1) >= ... >= c(n) and m = round(acc * n),
    the threshold is c(m+1), or c(n) - 1e-12 when m = n, so that exactly m rows lie strictly
    above it whenever the confidences are distinct.

    Returns:
        ValidationStats: Validation accuracy, validation ConfScore and the threshold.

    Raises:
        DataError: If the validation set is empty or labels do not pair with predictions.
    """
    if val_preds.n == 0 or len(val_labels) == 0:
        raise DataError('validation set is empty')

    val_accuracy = accuracy(val_preds, val_labels)
    confidences = np.sort(val_preds.max_confidence())[::-1]
    n = confidences.size
    m = int(round(val_accuracy * n))
    threshold = confidences[m] if m < n else confidences[-1] - ATC_FLOOR_OFFSET

    return ValidationStats(
        val_accuracy=val_accuracy,
        val_conf_score=float(np.mean(confidences)),
        atc_threshold=float(threshold),
    )


def atc_score(preds: PredictionMatrix, stats: ValidationStats) -> float:
    """Fraction of rows whose maximum probability is strictly above the calibrated threshold."""
    return float(np.mean(preds.max_confidence() > stats.atc_threshold))


def avg_energy(logits: LogitMatrix, cfg: ConfidenceConfig = ConfidenceConfig()) -> float:
    """
    Average energy score: -(1/n) Σ_i T·ln Σ_j exp(z_ij / T).

    `logsumexp` subtracts the row maximum internally.
    """
    t = cfg.energy_temperature
    return float(-np.mean(t * special.logsumexp(logits.data / t, axis=1)))


def doc_score(test_preds: PredictionMatrix, stats: ValidationStats) -> float:
    """Validation accuracy corrected by the drop in ConfScore from validation to test."""
    return stats.val_accuracy - (stats.val_conf_score - conf_score(test_preds))


def mano_normalize(logits: np.ndarray, eta: float) -> np.ndarray:
    """
    MaNo's piecewise normalization of logits onto the simplex.

    τ is the mean KL divergence from each softmax row to the uniform distribution,
    ln k - mean H(softmax(z)). For τ <= eta each logit is mapped through
    1 + z + z²/2 (always >= 0.5), otherwise through exp(z), and every row is
    normalized to sum to one.
    """
    k = logits.shape[1]
    probabilities = special.softmax(logits, axis=1)
    tau = np.log(k) - float(np.mean(row_entropies(probabilities)))
    if tau <= eta:
        weights = 1.0 + logits + 0.5 * logits ** 2
        return weights / weights.sum(axis=1, keepdims=True)
    return probabilities


def mano_score(logits: LogitMatrix, cfg: ConfidenceConfig = ConfidenceConfig()) -> float:
    """((1/(nk)) Σ |Q_ij|^p)^(1/p) over the MaNo-normalized matrix Q."""
    q = mano_normalize(logits.data, cfg.mano_eta)
    p = int(cfg.mano_p)
    return float(np.mean(np.abs(q) ** p) ** (1.0 / p))


def reconstruct_logits(preds: PredictionMatrix) -> LogitMatrix:
    """
    Logits consistent with a prediction matrix, ln(p + 1e-12).

    Softmax of the result reproduces the probabilities up to the epsilon; the additive
    per-row constant lost by softmax is not recoverable, which shifts AvgEnergy.
    """
    return LogitMatrix(np.log(preds.data + RECONSTRUCTION_EPSILON))
