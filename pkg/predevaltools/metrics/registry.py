from typing import Dict, Literal, Optional, Tuple, Type

import numpy as np

from predevaltools.core.exceptions import ConfigurationError
from predevaltools.core.interfaces.metric import Metric, MetricInputs, MetricValue
from predevaltools.core.types import LogitMatrix, ValidationStats
from predevaltools.metrics import confidence, dispersity, hybrid
from predevaltools.metrics.confidence import ConfidenceConfig
from predevaltools.metrics.dispersity import SourceHistogram
from predevaltools.metrics.hybrid import CotConfig, PriorDistribution

MetricName = Literal[
    'conf_score', 'entropy', 'atc', 'avg_energy', 'doc', 'mano',
    'class_entropy', 'ctd', 'nuclear_norm', 'cot', 'softmax_corr', 'im'
]

METRIC_NAMES: Tuple[str, ...] = (
    'conf_score', 'entropy', 'atc', 'avg_energy', 'doc', 'mano',
    'class_entropy', 'ctd', 'nuclear_norm', 'cot', 'softmax_corr', 'im'
)
"""All metrics, in report order."""


def _require_logits(metric: Metric, inputs: MetricInputs) -> LogitMatrix:
    if inputs.logits is None:
        raise ConfigurationError(
            f'metric {metric.name} needs logits: supply a logits file or enable logit reconstruction'
        )
    return inputs.logits


def _require_validation(metric: Metric, inputs: MetricInputs) -> ValidationStats:
    if inputs.validation is None:
        raise ConfigurationError(
            f'metric {metric.name} needs validation predictions and validation labels'
        )
    return inputs.validation


def _logit_provenance(inputs: MetricInputs) -> dict:
    return {'logits_reconstructed': inputs.logits_reconstructed}


class ConfScoreMetric(Metric):
    name = 'conf_score'
    category = 'confidence'

    def compute(self, inputs: MetricInputs) -> MetricValue:
        return MetricValue(confidence.conf_score(inputs.predictions))

    def as_fraction(self, value: float, k: int) -> Optional[float]:
        return value


class EntropyMetric(Metric):
    """Negated mean entropy; the raw mean entropy is kept in the provenance."""
    name = 'entropy'
    category = 'confidence'

    def compute(self, inputs: MetricInputs) -> MetricValue:
        value = confidence.neg_entropy(inputs.predictions)
        return MetricValue(value, {'mean_entropy': -value})


class ATCMetric(Metric):
    name = 'atc'
    category = 'confidence'
    needs_validation = True

    def compute(self, inputs: MetricInputs) -> MetricValue:
        stats = _require_validation(self, inputs)
        return MetricValue(
            confidence.atc_score(inputs.predictions, stats),
            {'atc_threshold': stats.atc_threshold}
        )

    def as_fraction(self, value: float, k: int) -> Optional[float]:
        return value


class AvgEnergyMetric(Metric):
    name = 'avg_energy'
    category = 'confidence'
    needs_logits = True

    def __init__(self, config: ConfidenceConfig = ConfidenceConfig()):
        self.config = config

    def compute(self, inputs: MetricInputs) -> MetricValue:
        logits = _require_logits(self, inputs)
        return MetricValue(confidence.avg_energy(logits, self.config), _logit_provenance(inputs))


class DoCMetric(Metric):
    name = 'doc'
    category = 'confidence'
    needs_validation = True

    def compute(self, inputs: MetricInputs) -> MetricValue:
        stats = _require_validation(self, inputs)
        return MetricValue(confidence.doc_score(inputs.predictions, stats))

    def as_fraction(self, value: float, k: int) -> Optional[float]:
        return float(np.clip(value, 0.0, 1.0))


class MaNoMetric(Metric):
    name = 'mano'
    category = 'confidence'
    needs_logits = True

    def __init__(self, config: ConfidenceConfig = ConfidenceConfig()):
        self.config = config

    def compute(self, inputs: MetricInputs) -> MetricValue:
        logits = _require_logits(self, inputs)
        return MetricValue(confidence.mano_score(logits, self.config), _logit_provenance(inputs))

    def as_fraction(self, value: float, k: int) -> Optional[float]:
        return value


class ClassEntropyMetric(Metric):
    name = 'class_entropy'
    category = 'dispersity'

    def compute(self, inputs: MetricInputs) -> MetricValue:
        return MetricValue(dispersity.class_entropy(inputs.predictions))


class CTDMetric(Metric):
    name = 'ctd'
    category = 'dispersity'
    direction = -1

    def __init__(self, source: Optional[SourceHistogram] = None):
        self.source = source

    def compute(self, inputs: MetricInputs) -> MetricValue:
        source = self.source or SourceHistogram.uniform(inputs.predictions.k)
        value = dispersity.ctd_score(inputs.predictions, source)
        return MetricValue(value, {'source_histogram_origin': source.origin})

    def as_fraction(self, value: float, k: int) -> Optional[float]:
        return value / k


class NuclearNormMetric(Metric):
    name = 'nuclear_norm'
    category = 'hybrid'

    def compute(self, inputs: MetricInputs) -> MetricValue:
        return MetricValue(hybrid.nuclear_norm_score(inputs.predictions))

    def as_fraction(self, value: float, k: int) -> Optional[float]:
        return value


class COTMetric(Metric):
    name = 'cot'
    category = 'hybrid'
    direction = -1

    def __init__(self, prior: Optional[PriorDistribution] = None, config: CotConfig = CotConfig()):
        self.prior = prior
        self.config = config

    def compute(self, inputs: MetricInputs) -> MetricValue:
        prior = self.prior or PriorDistribution.uniform(inputs.predictions.k)
        solution = hybrid.cot_solve(inputs.predictions, prior, self.config)
        return MetricValue(solution.value, {
            'solver': solution.solver,
            'aggregation': solution.aggregation,
            'prior_origin': prior.origin,
        })

    def as_fraction(self, value: float, k: int) -> Optional[float]:
        return value


class SoftmaxCorrMetric(Metric):
    name = 'softmax_corr'
    category = 'hybrid'

    def __init__(self, prior: Optional[PriorDistribution] = None):
        self.prior = prior

    def compute(self, inputs: MetricInputs) -> MetricValue:
        prior = self.prior or PriorDistribution.uniform(inputs.predictions.k)
        return MetricValue(hybrid.softmax_corr(inputs.predictions, prior), {'prior_origin': prior.origin})

    def as_fraction(self, value: float, k: int) -> Optional[float]:
        return value


class IMMetric(Metric):
    name = 'im'
    category = 'hybrid'

    def compute(self, inputs: MetricInputs) -> MetricValue:
        return MetricValue(hybrid.im_score(inputs.predictions))


METRIC_CLASSES: Dict[str, Type[Metric]] = {
    cls.name: cls for cls in (
        ConfScoreMetric, EntropyMetric, ATCMetric, AvgEnergyMetric, DoCMetric, MaNoMetric,
        ClassEntropyMetric, CTDMetric, NuclearNormMetric, COTMetric, SoftmaxCorrMetric, IMMetric
    )
}


class MetricFactory:
    """
    MetricFactory instantiates metric implementations by name, wiring in the parts of the
    configuration each metric reads.
    """

    @staticmethod
    def metric_class(name: str) -> Type[Metric]:
        """
        Look up the implementation class of a metric without instantiating it.

        Raises:
            ConfigurationError: If the name is not a known metric.
        """
        try:
            return METRIC_CLASSES[name]
        except KeyError:
            raise ConfigurationError(
                f'unknown metric {name!r}; expected one of {", ".join(METRIC_NAMES)}'
            ) from None

    @staticmethod
    def get_metric(name: str, configuration: dict = {}) -> Metric:
        """
        Creates and returns the metric registered under `name`.

        Parameters:
            name (str): One of METRIC_NAMES.
            configuration (dict): A dictionary that can include:
                - confidence: ConfidenceConfig for avg_energy and mano.
                - cot: CotConfig for cot.
                - prior: PriorDistribution for cot and softmax_corr (uniform if absent).
                - source: SourceHistogram for ctd (uniform if absent).

        Returns:
            Metric: The configured metric.

        Raises:
            ConfigurationError: If the name is not a known metric.
        """
        cls = MetricFactory.metric_class(name)
        confidence_config = configuration.get('confidence') or ConfidenceConfig()

        if cls in (AvgEnergyMetric, MaNoMetric):
            return cls(confidence_config)
        if cls is CTDMetric:
            return CTDMetric(configuration.get('source'))
        if cls is COTMetric:
            return COTMetric(configuration.get('prior'), configuration.get('cot') or CotConfig())
        if cls is SoftmaxCorrMetric:
            return SoftmaxCorrMetric(configuration.get('prior'))
        return cls()
