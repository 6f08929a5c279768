from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, Literal, Optional

from predevaltools.core.types import LogitMatrix, PredictionMatrix, ValidationStats

MetricCategory = Literal['confidence', 'dispersity', 'hybrid']
"""The property a metric captures, as grouped in the metric summary table."""


@dataclass(frozen=True)
class MetricInputs:
    """
    Everything a metric may read for one (model, test set) pair.

    Attributes:
        predictions (PredictionMatrix): Softmax outputs on the test set.
        logits (Optional[LogitMatrix]): Logits on the test set, if exported or reconstructed.
        logits_reconstructed (bool): True when `logits` were rebuilt as ln(p + 1e-12).
        validation (Optional[ValidationStats]): Calibrated source validation statistics.
    """
    predictions: PredictionMatrix
    logits: Optional[LogitMatrix] = None
    logits_reconstructed: bool = False
    validation: Optional[ValidationStats] = None


@dataclass(frozen=True)
class MetricValue:
    """
    A computed score plus the facts needed to reproduce it.

    Attributes:
        value (float): The raw score, never sign-flipped.
        provenance (Dict[str, Any]): e.g. the transport solver used or the prior's origin.
    """
    value: float
    provenance: Dict[str, Any] = field(default_factory=dict)


class Metric(ABC):
    """
    Abstract base class for label-free scores of a prediction matrix.

    Class attributes describe how a score relates to accuracy:
        name (str): Registry key, e.g. 'nuclear_norm'.
        category (MetricCategory): confidence, dispersity or hybrid.
        direction (int): +1 when higher scores mean higher accuracy, -1 otherwise.
        needs_logits (bool): The score is defined on logits rather than probabilities.
        needs_validation (bool): The score needs ValidationStats.
    """
    name: ClassVar[str]
    category: ClassVar[MetricCategory]
    direction: ClassVar[int] = 1
    needs_logits: ClassVar[bool] = False
    needs_validation: ClassVar[bool] = False

    @abstractmethod
    def compute(self, inputs: MetricInputs) -> MetricValue:
        """
        Score one prediction matrix.

        Parameters:
            inputs (MetricInputs): The matrix and its optional companions.

        Returns:
            MetricValue: The raw score with provenance.

        Raises:
            ConfigurationError: If a required companion input is missing.
        """
        pass

    def as_fraction(self, value: float, k: int) -> Optional[float]:
        """
        Map a score onto [0, 1] for probit scaling.

        Returns:
            Optional[float]: The rescaled score, or None when the score has no natural
            [0, 1] form and must be correlated raw.
        """
        return None
