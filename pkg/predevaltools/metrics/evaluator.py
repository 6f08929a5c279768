import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from predevaltools.core.exceptions import ConfigurationError, DataError
from predevaltools.core.interfaces.metric import Metric, MetricInputs, MetricValue
from predevaltools.core.types import LogitMatrix, PredictionMatrix, ValidationStats
from predevaltools.metrics.confidence import ConfidenceConfig, reconstruct_logits
from predevaltools.metrics.dispersity import SourceHistogram
from predevaltools.metrics.hybrid import CotConfig, PriorDistribution
from predevaltools.metrics.registry import METRIC_NAMES, MetricFactory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvaluationConfig:
    """
    Metric-level settings shared by every evaluated matrix.

    Attributes:
        confidence (ConfidenceConfig): Energy temperature and MaNo parameters.
        cot (CotConfig): COT aggregation and solver limits.
        prior (Optional[PriorDistribution]): Prior for COT and SoftmaxCorr; uniform if None.
        source (Optional[SourceHistogram]): Reference histogram for CTD; uniform if None.
        reconstruct_logits (bool): Rebuild logits as ln(p + 1e-12) when none are supplied.
    """
    confidence: ConfidenceConfig = field(default_factory=ConfidenceConfig)
    cot: CotConfig = field(default_factory=CotConfig)
    prior: Optional[PriorDistribution] = None
    source: Optional[SourceHistogram] = None
    reconstruct_logits: bool = True

    def as_factory_configuration(self) -> dict:
        return {
            'confidence': self.confidence,
            'cot': self.cot,
            'prior': self.prior,
            'source': self.source,
        }


@dataclass(frozen=True)
class MetricReport:
    """
    Scores of the enabled metrics for one (model, test set) pair.

    Attributes:
        n (int): Number of samples.
        k (int): Number of classes.
        values (Dict[str, float]): Raw scores keyed by metric name, in evaluation order.
        directions (Dict[str, int]): +1 when higher is better, -1 when lower is better.
        provenance (Dict[str, Dict[str, Any]]): Per-metric facts such as the COT solver.
        logits_reconstructed (bool): Whether logit-based scores used reconstructed logits.
    """
    n: int
    k: int
    values: Dict[str, float]
    directions: Dict[str, int]
    provenance: Dict[str, Dict[str, Any]]
    logits_reconstructed: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'k': self.k,
            'logits_reconstructed': self.logits_reconstructed,
            'metrics': {
                name: {
                    'value': value,
                    'direction': self.directions[name],
                    'display_value': value * self.directions[name],
                    'provenance': self.provenance.get(name, {}),
                }
                for name, value in self.values.items()
            },
        }


def resolve_metric_names(names: Optional[Sequence[str]], has_validation: bool) -> List[str]:
    """
    Validate and order a metric selection.

    With no explicit selection every metric runs, except the validation-based ones
    (atc, doc) when no validation data is available.

    Raises:
        ConfigurationError: On an unknown name.
    """
    if not names:
        return [n for n in METRIC_NAMES if has_validation or not MetricFactory.metric_class(n).needs_validation]

    selected = []
    for name in names:
        MetricFactory.metric_class(name)
        if name not in selected:
            selected.append(name)
    return selected


class MetricEvaluator:
    """
    Computes an ordered subset of the metrics on prediction matrices.

    Parameters:
        metric_names (Sequence[str]): Metrics to compute, in report order.
        config (EvaluationConfig): Shared metric settings.
    """

    def __init__(self, metric_names: Sequence[str], config: EvaluationConfig = EvaluationConfig()):
        if not metric_names:
            raise ConfigurationError('no metrics selected')
        self.config = config
        configuration = config.as_factory_configuration()
        self.metrics: Dict[str, Metric] = {
            name: MetricFactory.get_metric(name, configuration) for name in resolve_metric_names(metric_names, True)
        }

    @property
    def names(self) -> List[str]:
        return list(self.metrics)

    @property
    def needs_logits(self) -> bool:
        return any(m.needs_logits for m in self.metrics.values())

    @property
    def needs_validation(self) -> bool:
        return any(m.needs_validation for m in self.metrics.values())

    def prepare_inputs(
        self,
        preds: PredictionMatrix,
        logits: Optional[LogitMatrix] = None,
        validation: Optional[ValidationStats] = None
    ) -> MetricInputs:
        """
        Bundle one matrix with its companions, reconstructing logits when allowed.

        Raises:
            DataError: If the logits do not have the shape of the predictions.
            ConfigurationError: If logits are needed, missing and reconstruction is disabled.
        """
        reconstructed = False
        if logits is not None and (logits.n, logits.k) != (preds.n, preds.k):
            raise DataError(
                f'logits are {logits.n}x{logits.k} but predictions are {preds.n}x{preds.k}'
            )
        if logits is None and self.needs_logits:
            if not self.config.reconstruct_logits:
                needing = [m.name for m in self.metrics.values() if m.needs_logits]
                raise ConfigurationError(
                    f'{", ".join(needing)} need logits: supply a logits file or enable logit reconstruction'
                )
            logger.warning('No logits supplied; reconstructing them as ln(p + 1e-12)')
            logits = reconstruct_logits(preds)
            reconstructed = True

        return MetricInputs(preds, logits, reconstructed, validation)

    def compute(self, name: str, inputs: MetricInputs) -> MetricValue:
        return self.metrics[name].compute(inputs)

    def direction(self, name: str) -> int:
        return self.metrics[name].direction

    def as_fraction(self, name: str, value: float, k: int) -> Optional[float]:
        return self.metrics[name].as_fraction(value, k)

    def evaluate(
        self,
        preds: PredictionMatrix,
        logits: Optional[LogitMatrix] = None,
        validation: Optional[ValidationStats] = None
    ) -> MetricReport:
        """
        Compute every selected metric on one matrix.

        Raises:
            ConfigurationError: If a selected metric lacks a required input.
            DataError, NumericalError: If a metric kernel fails.
        """
        if validation is None and self.needs_validation:
            needing = [m.name for m in self.metrics.values() if m.needs_validation]
            raise ConfigurationError(
                f'{", ".join(needing)} need validation data: supply validation predictions and validation labels'
            )

        inputs = self.prepare_inputs(preds, logits, validation)
        values: Dict[str, float] = {}
        provenance: Dict[str, Dict[str, Any]] = {}
        for name, metric in self.metrics.items():
            result = metric.compute(inputs)
            values[name] = result.value
            provenance[name] = result.provenance
            logger.debug('%s = %.6g', name, result.value)

        return MetricReport(
            n=preds.n,
            k=preds.k,
            values=values,
            directions={name: m.direction for name, m in self.metrics.items()},
            provenance=provenance,
            logits_reconstructed=inputs.logits_reconstructed,
        )
