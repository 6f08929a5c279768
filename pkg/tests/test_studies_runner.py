import json
import tempfile
from pathlib import Path
from typing import List, Sequence, Tuple
from unittest.mock import Mock

import numpy as np
import polars as pl
import pytest

from predevaltools.core.exceptions import ConfigurationError, DataError
from predevaltools.core.types import LabelVector, LogitMatrix, Manifest, ManifestEntry, PredictionMatrix
from predevaltools.io.loaders import save_labels_csv, save_logit_csv, save_prediction_csv
from predevaltools.metrics.evaluator import MetricEvaluator
from predevaltools.studies.correlation import probit_transform
from predevaltools.studies.runner import (
    SCHEMA_VERSION, StudyConfig, build_report, dumps_report, group_summary, load_validation, predict_accuracy,
    _transform_values, run_dataset_centric, run_model_centric, write_scatter_csv
)

# (model_id, dataset_id, max confidence, number of correctly labeled rows)
Cell = Tuple[str, str, float, int]


def write_cells(
    directory: Path, mode: str, cells: Sequence[Cell], with_labels: bool = True, rows: int = 10
) -> Manifest:
    """Two-class cells whose rows all predict class 0 with the given confidence."""
    entries: List[ManifestEntry] = []
    for model_id, dataset_id, confidence, correct in cells:
        base = directory / model_id / dataset_id
        preds = PredictionMatrix(np.tile([confidence, 1.0 - confidence], (rows, 1)))
        labels = LabelVector(np.array([0] * correct + [1] * (rows - correct)))
        save_prediction_csv(preds, base / 'predictions.csv')
        save_labels_csv(labels, base / 'labels.csv')
        entries.append(ManifestEntry(
            model_id, dataset_id, base / 'predictions.csv',
            labels_path=(base / 'labels.csv') if with_labels else None,
        ))
    return Manifest(mode, entries)  # type: ignore


def write_validation(directory: Path) -> Tuple[Path, Path]:
    preds = PredictionMatrix(np.array([[0.9, 0.1], [0.8, 0.2], [0.7, 0.3], [0.6, 0.4]]))
    save_prediction_csv(preds, directory / 'val' / 'predictions.csv')
    save_labels_csv(LabelVector(np.array([0, 0, 0, 1])), directory / 'val' / 'labels.csv')
    return directory / 'val' / 'predictions.csv', directory / 'val' / 'labels.csv'


DATASET_CELLS = [
    ('model', 'clean', 0.9, 9),
    ('model', 'noise-s1', 0.8, 8),
    ('model', 'noise-s2', 0.7, 7),
    ('model', 'noise-s3', 0.6, 6),
]


class TestDatasetCentric:
    @pytest.fixture
    def temp_dir(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            yield Path(tmp_dir)

    @pytest.fixture
    def manifest(self, temp_dir):
        return write_cells(temp_dir, 'dataset_centric', DATASET_CELLS)

    def test_metric_tracking_accuracy(self, manifest):
        results = run_dataset_centric(manifest, StudyConfig(metrics=('conf_score', 'class_entropy')))

        conf, class_entropy = results
        assert conf.status == 'ok'
        assert conf.spearman_rho == pytest.approx(1.0)
        assert conf.kendall_tau_w == pytest.approx(1.0)
        assert conf.r_squared == pytest.approx(1.0)
        assert conf.transform == 'probit'
        assert [p.subject_id for p in conf.points] == ['clean', 'noise-s1', 'noise-s2', 'noise-s3']
        assert class_entropy.spearman_rho == pytest.approx(-1.0)
        assert class_entropy.display_rho == pytest.approx(-1.0)
        assert class_entropy.transform == 'raw'

    def test_constant_metric_fails_alone(self, manifest):
        results = run_dataset_centric(manifest, StudyConfig(metrics=('ctd', 'conf_score')))

        ctd, conf = results
        assert ctd.status == 'failed'
        assert 'identical' in ctd.error
        assert ctd.spearman_rho is None
        assert ctd.direction == -1
        assert conf.status == 'ok'

    def test_missing_validation_fails_per_metric(self, manifest):
        results = run_dataset_centric(manifest, StudyConfig(metrics=('atc', 'conf_score')))

        assert results[0].status == 'failed'
        assert 'validation' in results[0].error
        assert results[1].status == 'ok'

    def test_default_selection_without_validation(self, manifest):
        names = [r.metric_name for r in run_dataset_centric(manifest)]

        assert 'atc' not in names and 'doc' not in names
        assert names[0] == 'conf_score'

    def test_shared_validation_enables_atc(self, manifest, temp_dir):
        val_predictions, val_labels = write_validation(temp_dir)
        config = StudyConfig(metrics=('atc', 'doc'), val_predictions=val_predictions, val_labels=val_labels)

        atc, doc = run_dataset_centric(manifest, config)

        # threshold 0.6 calibrated on 3/4 accuracy; confidences strictly above it count
        assert [p.metric_value for p in atc.points] == [1.0, 1.0, 1.0, 0.0]
        assert doc.status == 'ok'
        assert doc.points[0].metric_value == pytest.approx(0.75 - (0.75 - 0.9))

    def test_transform_override(self, manifest):
        config = StudyConfig(metrics=('conf_score',), transforms={'conf_score': 'raw'})

        result = run_dataset_centric(manifest, config)[0]

        assert result.transform == 'raw'
        assert [p.metric_transformed for p in result.points] == pytest.approx([0.9, 0.8, 0.7, 0.6])

    def test_macro_f1_ground_truth(self, manifest):
        result = run_dataset_centric(manifest, StudyConfig(metrics=('conf_score',), ground_truth='macro_f1'))[0]

        # class 0 always predicted: F1 = 2c / (10 + c), class 1 never predicted: F1 = 0
        assert result.points[0].ground_truth == pytest.approx(0.5 * 18 / 19)

    def test_narrow_range_flag(self, temp_dir):
        manifest = write_cells(temp_dir, 'dataset_centric', [
            ('model', 'a', 0.9, 90), ('model', 'b', 0.8, 88), ('model', 'c', 0.7, 86),
        ], rows=100)

        result = run_dataset_centric(manifest, StudyConfig(metrics=('conf_score',)))[0]

        assert result.truth_range == pytest.approx(0.04)
        assert result.narrow_range

    def test_wide_range_is_not_flagged(self, manifest):
        result = run_dataset_centric(manifest, StudyConfig(metrics=('conf_score',)))[0]

        assert result.truth_range == pytest.approx(0.3)
        assert not result.narrow_range

    def test_confident_one_hot_set_keeps_fraction_metrics(self, temp_dir):
        top = np.arange(6) % 3
        entries = []
        # (dataset_id, confidence of the top class, correctly labeled rows)
        for dataset_id, confidence, correct in (('one-hot', 1.0, 6), ('s1', 0.8, 5), ('s2', 0.6, 4), ('s3', 0.4, 3)):
            probs = np.full((6, 3), (1.0 - confidence) / 2)
            probs[np.arange(6), top] = confidence
            labels = top.copy()
            labels[correct:] = (labels[correct:] + 1) % 3
            base = temp_dir / dataset_id
            save_prediction_csv(PredictionMatrix(probs), base / 'predictions.csv')
            save_labels_csv(LabelVector(labels), base / 'labels.csv')
            entries.append(ManifestEntry('model', dataset_id, base / 'predictions.csv', labels_path=base / 'labels.csv'))

        results = run_dataset_centric(Manifest('dataset_centric', entries),
                                      StudyConfig(metrics=('nuclear_norm', 'softmax_corr')))

        nuclear, softmax_corr = results
        assert nuclear.status == 'ok', nuclear.error
        assert nuclear.transform == 'probit'
        assert nuclear.spearman_rho == pytest.approx(1.0)
        assert softmax_corr.status == 'ok', softmax_corr.error

    def test_fractions_are_clamped_before_probit(self):
        evaluator = Mock(spec=MetricEvaluator)
        evaluator.as_fraction.side_effect = [1.0 + 1e-7, 0.5, -1e-8]

        axis = _transform_values(evaluator, 'nuclear_norm', 'probit', [1.0, 0.5, 0.0], 3)

        assert axis == probit_transform([1.0, 0.5, 0.0], assume_fraction=True)

    def test_needs_three_sets(self, temp_dir):
        manifest = write_cells(temp_dir, 'dataset_centric', DATASET_CELLS[:2])

        with pytest.raises(DataError, match='at least 3 test sets'):
            run_dataset_centric(manifest)

    def test_labels_required(self, temp_dir):
        manifest = write_cells(temp_dir, 'dataset_centric', DATASET_CELLS, with_labels=False)

        with pytest.raises(DataError, match='no labels_path'):
            run_dataset_centric(manifest)

    def test_mode_checked(self, manifest):
        with pytest.raises(ConfigurationError, match='model_centric'):
            run_model_centric(manifest)

    def test_class_count_mismatch(self, temp_dir, manifest):
        extra = temp_dir / 'model' / 'three-class'
        save_prediction_csv(PredictionMatrix(np.full((10, 3), 1 / 3)), extra / 'predictions.csv')
        save_labels_csv(LabelVector(np.zeros(10, dtype=np.int64)), extra / 'labels.csv')
        entries = manifest.entries + [
            ManifestEntry('model', 'three-class', extra / 'predictions.csv', labels_path=extra / 'labels.csv')
        ]

        with pytest.raises(DataError, match='same number of classes'):
            run_dataset_centric(Manifest('dataset_centric', entries))

    def test_logits_are_read(self, temp_dir, manifest):
        entries = []
        for entry in manifest.entries:
            logits_path = entry.predictions_path.parent / 'logits.csv'
            save_logit_csv(LogitMatrix(np.tile([2.0, 0.0], (10, 1))), logits_path)
            entries.append(ManifestEntry(entry.model_id, entry.dataset_id, entry.predictions_path,
                                         logits_path=logits_path, labels_path=entry.labels_path))

        result = run_dataset_centric(Manifest('dataset_centric', entries), StudyConfig(metrics=('avg_energy',)))[0]

        # identical logits everywhere: a constant metric
        assert result.status == 'failed'


class TestModelCentric:
    @pytest.fixture
    def temp_dir(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            yield Path(tmp_dir)

    @pytest.fixture
    def manifest(self, temp_dir):
        return write_cells(temp_dir, 'model_centric', [
            ('model-c', 'shifted', 0.7, 6),
            ('model-a', 'shifted', 0.9, 9),
            ('model-d', 'shifted', 0.6, 5),
            ('model-b', 'shifted', 0.8, 8),
        ])

    def test_ranking_and_regret(self, manifest):
        result = run_model_centric(manifest, StudyConfig(metrics=('conf_score',)))[0]

        assert result.ranking == ['model-a', 'model-b', 'model-c', 'model-d']
        assert result.top1_regret == 0.0
        assert result.kendall_tau_w == pytest.approx(1.0)

    def test_lower_is_better_ranking(self, manifest):
        result = run_model_centric(manifest, StudyConfig(metrics=('class_entropy',)))[0]

        # class entropy falls as confidence rises; direction +1 ranks the least confident first
        assert result.ranking == ['model-d', 'model-c', 'model-b', 'model-a']
        assert result.top1_regret == pytest.approx(0.4)

    def test_degraded_copy_ranks_lower(self, temp_dir):
        rng = np.random.default_rng(0)
        z = 3.0 * rng.standard_normal((50, 4))
        labels = LabelVector(np.argmax(z + rng.standard_normal((50, 4)), axis=1))
        dataset = temp_dir / 'data'
        save_labels_csv(labels, dataset / 'labels.csv')
        entries = []
        noisy = z + 10.0 * rng.standard_normal((50, 4))
        for model_id, logits in (('sharp', z), ('degraded', 0.1 * z), ('noisy', noisy)):
            p = np.exp(logits - logits.max(axis=1, keepdims=True))
            save_prediction_csv(PredictionMatrix(p / p.sum(axis=1, keepdims=True)), temp_dir / model_id / 'p.csv')
            entries.append(ManifestEntry(model_id, 'data', temp_dir / model_id / 'p.csv',
                                         labels_path=dataset / 'labels.csv'))

        result = run_model_centric(Manifest('model_centric', entries), StudyConfig(metrics=('conf_score',)))[0]

        assert result.ranking.index('sharp') < result.ranking.index('degraded')

    def test_shared_validation_is_ignored(self, manifest, temp_dir):
        val_predictions, val_labels = write_validation(temp_dir)
        config = StudyConfig(val_predictions=val_predictions, val_labels=val_labels)

        names = [r.metric_name for r in run_model_centric(manifest, config)]

        assert 'atc' not in names


class TestReports:
    @pytest.fixture
    def temp_dir(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            yield Path(tmp_dir)

    @pytest.fixture
    def manifest(self, temp_dir):
        return write_cells(temp_dir, 'dataset_centric', DATASET_CELLS)

    def test_byte_identical_across_thread_counts(self, manifest):
        serial = run_dataset_centric(manifest, StudyConfig(threads=1))
        threaded = run_dataset_centric(manifest, StudyConfig(threads=8))

        config = {'metrics': []}
        assert dumps_report(build_report('dataset_centric', serial, config)) == \
            dumps_report(build_report('dataset_centric', threaded, config))

    def test_report_layout(self, manifest):
        results = run_dataset_centric(manifest, StudyConfig(metrics=('conf_score', 'ctd', 'nuclear_norm')))

        document = json.loads(dumps_report(build_report('dataset_centric', results, {'ground_truth': 'accuracy'})))

        assert document['schema_version'] == SCHEMA_VERSION
        assert document['mode'] == 'dataset_centric'
        assert document['config'] == {'ground_truth': 'accuracy'}
        assert [r['metric_name'] for r in document['results']] == ['conf_score', 'ctd', 'nuclear_norm']
        assert document['results'][1]['status'] == 'failed'
        assert document['results'][1]['pearson_r'] is None

    def test_group_summary(self, manifest):
        results = run_dataset_centric(manifest, StudyConfig(metrics=('conf_score', 'class_entropy', 'ctd')))

        summary = group_summary(results)

        assert summary['confidence']['metrics'] == ['conf_score']
        assert summary['confidence']['mean_display_rho'] == pytest.approx(1.0)
        assert summary['dispersity']['metrics'] == ['class_entropy']
        assert summary['hybrid'] == {'metrics': [], 'mean_display_rho': None, 'mean_display_tau_w': None}

    def test_predict_accuracy_inverts_fit(self, temp_dir):
        manifest = write_cells(temp_dir, 'dataset_centric', [
            ('model', 'a', 0.9, 9), ('model', 'b', 0.8, 8), ('model', 'c', 0.7, 7),
        ])
        result = run_dataset_centric(manifest, StudyConfig(metrics=('conf_score',)))[0]

        assert result.fit_slope == pytest.approx(1.0)
        assert predict_accuracy(result, [0.75]) == pytest.approx([0.75])

    def test_predict_accuracy_needs_fit(self, manifest):
        failed = run_dataset_centric(manifest, StudyConfig(metrics=('ctd',)))[0]

        with pytest.raises(ConfigurationError, match='no fitted line'):
            predict_accuracy(failed, [0.5])

    def test_scatter_csv(self, manifest, temp_dir):
        results = run_dataset_centric(manifest, StudyConfig(metrics=('conf_score', 'ctd')))
        path = temp_dir / 'out' / 'scatter.csv'

        write_scatter_csv(results, path)

        scatter = pl.read_csv(path)
        assert scatter.columns == [
            'metric', 'subject_id', 'metric_raw', 'metric_transformed', 'truth_raw', 'truth_transformed'
        ]
        assert scatter.height == 4
        assert scatter['metric'].unique().to_list() == ['conf_score']

    def test_load_validation_checks_pairing(self, temp_dir):
        val_predictions, _ = write_validation(temp_dir)
        labels_path = temp_dir / 'short.csv'
        save_labels_csv(LabelVector(np.array([0, 1])), labels_path)

        with pytest.raises(DataError) as info:
            load_validation(val_predictions, labels_path)

        assert info.value.path == str(labels_path)
