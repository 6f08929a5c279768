from unittest.mock import Mock

import numpy as np
import pytest

from predevaltools.core.exceptions import ConfigurationError, DataError
from predevaltools.core.interfaces.metric import Metric, MetricInputs, MetricValue
from predevaltools.core.primitives import top1
from predevaltools.core.types import Histogram, LogitMatrix, PredictionMatrix
from predevaltools.metrics.confidence import RECONSTRUCTION_EPSILON, calibrate_atc
from predevaltools.metrics.evaluator import EvaluationConfig, MetricEvaluator, resolve_metric_names
from predevaltools.metrics.hybrid import PriorDistribution
from predevaltools.metrics.registry import METRIC_CLASSES, METRIC_NAMES, COTMetric, MetricFactory
from tests.conftest import balanced_one_hot, single_class_one_hot, uniform_matrix


def _mano_one_hot(k: int) -> float:
    """MaNo of a one-hot matrix after logit reconstruction (Taylor branch)."""
    z = np.array([np.log(1.0 + RECONSTRUCTION_EPSILON)] + [np.log(RECONSTRUCTION_EPSILON)] * (k - 1))
    v = 1.0 + z + 0.5 * z ** 2
    q = v / v.sum()
    return float(np.mean(q ** 4) ** 0.25)


def closed_form(name: str, kind: str, k: int) -> float:
    ln_k = np.log(k)
    reconstructed_energy = -np.log(1.0 + k * RECONSTRUCTION_EPSILON)
    table = {
        #                uniform              balanced one-hot   single-class one-hot
        'conf_score':    (1.0 / k,            1.0,               1.0),
        'entropy':       (-ln_k,              0.0,               0.0),
        'atc':           (1.0,                1.0,               1.0),
        'avg_energy':    (reconstructed_energy,) * 3,
        'doc':           (1.0,                1.0,               1.0),
        'mano':          (1.0 / k,            _mano_one_hot(k),  _mano_one_hot(k)),
        'class_entropy': (ln_k,               ln_k,              0.0),
        'ctd':           ((k - 1) / 2.0,      0.0,               (k - 1) / 2.0),
        'nuclear_norm':  (1.0 / k,            1.0,               1.0 / np.sqrt(k)),
        'cot':           (1.0 - 1.0 / k,      0.0,               1.0 - 1.0 / k),
        'softmax_corr':  (1.0 / np.sqrt(k),   1.0,               1.0 / np.sqrt(k)),
        'im':            (0.0,                ln_k,              0.0),
    }
    return table[name][('uniform', 'balanced', 'single').index(kind)]


MATRICES = {
    'uniform': uniform_matrix,
    'balanced': balanced_one_hot,
    'single': single_class_one_hot,
}


class TestClosedFormTable:
    @pytest.mark.parametrize('k', [2, 4, 10])
    @pytest.mark.parametrize('multiple', [1, 4])
    @pytest.mark.parametrize('kind', ['uniform', 'balanced', 'single'])
    def test_all_metrics(self, kind, k, multiple):
        preds = MATRICES[kind](multiple * k, k)
        validation = calibrate_atc(preds, top1(preds))
        evaluator = MetricEvaluator(METRIC_NAMES)

        report = evaluator.evaluate(preds, None, validation)

        assert report.logits_reconstructed
        assert list(report.values) == list(METRIC_NAMES)
        for name, value in report.values.items():
            assert value == pytest.approx(closed_form(name, kind, k), abs=1e-9), name


class TestResolveMetricNames:
    def test_default_skips_validation_metrics(self):
        names = resolve_metric_names(None, has_validation=False)

        assert 'atc' not in names and 'doc' not in names
        assert len(names) == 10

    def test_default_with_validation(self):
        assert resolve_metric_names([], has_validation=True) == list(METRIC_NAMES)

    def test_explicit_selection_is_deduplicated(self):
        assert resolve_metric_names(['cot', 'im', 'cot'], has_validation=False) == ['cot', 'im']

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError, match="unknown metric 'rmse'"):
            resolve_metric_names(['rmse'], has_validation=False)


class TestMetricFactory:
    def test_registry_is_complete(self):
        assert set(METRIC_CLASSES) == set(METRIC_NAMES)

    def test_directions(self):
        lower_is_better = {name for name, cls in METRIC_CLASSES.items() if cls.direction == -1}

        assert lower_is_better == {'ctd', 'cot'}

    def test_prior_is_wired_into_cot(self):
        prior = PriorDistribution(Histogram(np.array([1.0, 0.0])), 'file')

        metric = MetricFactory.get_metric('cot', {'prior': prior})

        assert isinstance(metric, COTMetric)
        value = metric.compute(MetricInputs(PredictionMatrix(np.array([[0.9, 0.1]]))))
        assert value.value == pytest.approx(0.1)
        assert value.provenance == {'solver': 'network_simplex', 'aggregation': 'mean', 'prior_origin': 'file'}

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            MetricFactory.get_metric('accuracy')


class TestMetricEvaluator:
    @pytest.fixture
    def preds(self):
        return PredictionMatrix(np.array([[0.7, 0.2, 0.1], [0.1, 0.6, 0.3], [0.2, 0.2, 0.6], [0.5, 0.4, 0.1]]))

    def test_requires_a_selection(self):
        with pytest.raises(ConfigurationError, match='no metrics'):
            MetricEvaluator([])

    def test_missing_validation_names_metrics(self, preds):
        evaluator = MetricEvaluator(['conf_score', 'atc', 'doc'])

        with pytest.raises(ConfigurationError, match='atc, doc need validation'):
            evaluator.evaluate(preds)

    def test_reconstruction_disabled(self, preds):
        evaluator = MetricEvaluator(['mano', 'im'], EvaluationConfig(reconstruct_logits=False))

        with pytest.raises(ConfigurationError, match='mano need logits'):
            evaluator.evaluate(preds)

    def test_supplied_logits_are_used(self, preds):
        logits = LogitMatrix(np.log(preds.data) + 5.0)
        evaluator = MetricEvaluator(['avg_energy', 'mano'])

        report = evaluator.evaluate(preds, logits)

        assert not report.logits_reconstructed
        assert report.provenance['mano'] == {'logits_reconstructed': False}
        assert report.values['avg_energy'] == pytest.approx(-5.0)

    def test_logit_shape_mismatch(self, preds):
        evaluator = MetricEvaluator(['avg_energy'])

        with pytest.raises(DataError, match='logits are 1x3'):
            evaluator.evaluate(preds, LogitMatrix(np.zeros((1, 3))))

    def test_report_dict_applies_direction(self, preds):
        report = MetricEvaluator(['ctd', 'entropy']).evaluate(preds)

        document = report.to_dict()

        ctd = document['metrics']['ctd']
        assert ctd['direction'] == -1
        assert ctd['display_value'] == -ctd['value']
        assert ctd['provenance'] == {'source_histogram_origin': 'uniform'}
        assert document['metrics']['entropy']['provenance']['mean_entropy'] == -report.values['entropy']
        assert (document['n'], document['k']) == (4, 3)

    def test_delegates_to_metric(self, preds):
        metric = Mock(spec=Metric)
        metric.name = 'conf_score'
        metric.direction = 1
        metric.needs_logits = False
        metric.needs_validation = False
        metric.compute.return_value = MetricValue(0.42, {'source': 'mock'})
        evaluator = MetricEvaluator(['conf_score'])
        evaluator.metrics['conf_score'] = metric

        report = evaluator.evaluate(preds)

        metric.compute.assert_called_once()
        inputs = metric.compute.call_args.args[0]
        assert inputs.predictions is preds
        assert report.values == {'conf_score': 0.42}
        assert report.provenance == {'conf_score': {'source': 'mock'}}
