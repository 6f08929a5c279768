"""
Dataset-centric and model-centric label-free generalization studies.

A dataset-centric study scores one model on many unlabeled test sets and asks how well
each metric tracks the model's accuracy. A model-centric study scores many models on one
test set and asks how well each metric ranks them.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
import polars as pl

from predevaltools import __version__
from predevaltools.core.exceptions import ConfigurationError, DataError, PredEvalError
from predevaltools.core.interfaces.metric import MetricInputs
from predevaltools.core.primitives import accuracy, macro_f1
from predevaltools.core.types import LabelVector, LogitMatrix, Manifest, ManifestEntry, PredictionMatrix, ValidationStats
from predevaltools.io.loaders import load_labels_csv, load_logit_csv, load_prediction_csv
from predevaltools.metrics.confidence import calibrate_atc
from predevaltools.metrics.evaluator import EvaluationConfig, MetricEvaluator, resolve_metric_names
from predevaltools.metrics.registry import MetricFactory
from predevaltools.numerics.normal import norm_cdf
from predevaltools.studies.correlation import (
    MIN_POINTS, kendall_tau_weighted, linear_fit_r2, pearson, probit_transform, spearman
)
from predevaltools.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
NARROW_RANGE = 0.10

GroundTruth = Literal['accuracy', 'macro_f1']
GROUND_TRUTHS = ('accuracy', 'macro_f1')
Transform = Literal['probit', 'raw']
TRANSFORMS = ('probit', 'raw')


@dataclass(frozen=True)
class StudyConfig:
    """
    Settings of a study run.

    Attributes:
        metrics (Tuple[str, ...]): Metrics to evaluate; empty selects the default set.
        evaluation (EvaluationConfig): Metric-level settings.
        ground_truth (GroundTruth): 'accuracy' or 'macro_f1'.
        transforms (Mapping[str, Transform]): Per-metric overrides of the probit/raw choice.
        threads (int): Worker threads for loading and scoring; 1 runs serially.
        val_predictions (Optional[Path]): Validation predictions shared by every entry of a
            dataset-centric study that has none of its own.
        val_labels (Optional[Path]): Labels matching `val_predictions`.
    """
    metrics: Tuple[str, ...] = ()
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    ground_truth: GroundTruth = 'accuracy'
    transforms: Mapping[str, Transform] = field(default_factory=dict)
    threads: int = 1
    val_predictions: Optional[Path] = None
    val_labels: Optional[Path] = None

    def __post_init__(self) -> None:
        if self.ground_truth not in GROUND_TRUTHS:
            raise ConfigurationError(
                f'ground_truth must be one of {", ".join(GROUND_TRUTHS)}, got {self.ground_truth!r}'
            )
        for name, transform in self.transforms.items():
            MetricFactory.metric_class(name)
            if transform not in TRANSFORMS:
                raise ConfigurationError(f'transform for {name} must be probit or raw, got {transform!r}')
        if self.threads < 1:
            raise ConfigurationError(f'threads must be at least 1, got {self.threads}')
        if (self.val_predictions is None) != (self.val_labels is None):
            raise ConfigurationError('val_predictions and val_labels must be given together')


@dataclass(frozen=True)
class StudyPoint:
    """
    One scatter point: a subject's score against its ground truth.

    Attributes:
        subject_id (str): Test-set id (dataset-centric) or model id (model-centric).
        metric_value (float): Raw score.
        ground_truth (float): Accuracy or macro-F1, in [0, 1].
        metric_transformed (float): Score on the correlation axis.
        truth_transformed (float): Probit-scaled ground truth.
    """
    subject_id: str
    metric_value: float
    ground_truth: float
    metric_transformed: float
    truth_transformed: float


@dataclass(frozen=True)
class StudyResult:
    """
    Correlation statistics of one metric across a study.

    Statistics are None when the metric failed; `error` then says why. Correlations are
    stored raw; `display_rho` and `display_tau_w` apply the metric's direction so that
    higher always reads as better.
    """
    metric_name: str
    category: str
    direction: int
    transform: Transform
    k: int
    status: Literal['ok', 'failed'] = 'ok'
    error: Optional[str] = None
    pearson_r: Optional[float] = None
    spearman_rho: Optional[float] = None
    kendall_tau_w: Optional[float] = None
    r_squared: Optional[float] = None
    fit_slope: Optional[float] = None
    fit_intercept: Optional[float] = None
    display_rho: Optional[float] = None
    display_tau_w: Optional[float] = None
    truth_range: Optional[float] = None
    narrow_range: bool = False
    points: List[StudyPoint] = field(default_factory=list)
    ranking: Optional[List[str]] = None
    top1_regret: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class LoadedEntry:
    """A manifest entry with its files read and validation statistics calibrated."""
    entry: ManifestEntry
    subject_id: str
    predictions: PredictionMatrix
    labels: LabelVector
    logits: Optional[LogitMatrix] = None
    validation: Optional[ValidationStats] = None


def load_validation(predictions_path: Path, labels_path: Path) -> ValidationStats:
    """Read a labeled validation set and calibrate ATC/DoC statistics on it."""
    preds = load_prediction_csv(predictions_path)
    labels = load_labels_csv(labels_path)
    try:
        labels.check_against(preds.n, preds.k)
    except DataError as e:
        raise DataError(e.message, labels_path) from e
    return calibrate_atc(preds, labels)


def _load_entry(entry: ManifestEntry, subject_id: str, shared: Optional[ValidationStats]) -> LoadedEntry:
    if entry.labels_path is None:
        raise DataError(f'entry {entry.subject_id} has no labels_path; ground truth is required for studies')
    if (entry.val_predictions_path is None) != (entry.val_labels_path is None):
        raise DataError(f'entry {entry.subject_id} must give val_predictions_path and val_labels_path together')

    preds = load_prediction_csv(entry.predictions_path)
    labels = load_labels_csv(entry.labels_path)
    try:
        labels.check_against(preds.n, preds.k)
    except DataError as e:
        raise DataError(e.message, entry.labels_path) from e

    logits = load_logit_csv(entry.logits_path) if entry.logits_path is not None else None
    validation = shared
    if entry.val_predictions_path is not None:
        validation = load_validation(entry.val_predictions_path, entry.val_labels_path)  # type: ignore

    logger.debug('Loaded %s (n=%d, k=%d)', entry.subject_id, preds.n, preds.k)
    return LoadedEntry(entry, subject_id, preds, labels, logits, validation)


def load_entries(manifest: Manifest, config: StudyConfig) -> List[LoadedEntry]:
    """
    Read every entry of a manifest.

    Shared validation files from the config apply only to dataset-centric studies, where
    every entry belongs to the same model.

    Raises:
        DataError: On unreadable files, missing labels or mismatched shapes.
    """
    shared = None
    if manifest.mode == 'dataset_centric' and config.val_predictions is not None:
        shared = load_validation(config.val_predictions, config.val_labels)  # type: ignore

    def subject(entry: ManifestEntry) -> str:
        return entry.dataset_id if manifest.mode == 'dataset_centric' else entry.model_id

    loaded = parallel_map(lambda e: _load_entry(e, subject(e), shared), manifest.entries, config.threads)

    classes = sorted({item.predictions.k for item in loaded})
    if len(classes) != 1:
        raise DataError(f'all prediction matrices of a study must have the same number of classes, found {classes}')
    logger.info('Loaded %d %s entries', len(loaded), manifest.mode)
    return loaded


def _ground_truth(item: LoadedEntry, kind: GroundTruth) -> float:
    if kind == 'macro_f1':
        return macro_f1(item.predictions, item.labels)
    return accuracy(item.predictions, item.labels)


def _choose_transform(evaluator: MetricEvaluator, name: str, config: StudyConfig) -> Transform:
    override = config.transforms.get(name)
    if override is not None:
        return override
    # metrics with a [0, 1] form are probit-scaled, the others stay raw
    return 'raw' if evaluator.as_fraction(name, 0.5, 2) is None else 'probit'


def _transform_values(evaluator: MetricEvaluator, name: str, transform: Transform,
                      values: Sequence[float], k: int) -> List[float]:
    if transform == 'raw':
        return probit_transform(values, assume_fraction=False)
    fractions = []
    for v in values:
        fraction = evaluator.as_fraction(name, v, k)
        fractions.append(v if fraction is None else min(max(fraction, 0.0), 1.0))
    return probit_transform(fractions, assume_fraction=True)


def _correlate(
    evaluator: MetricEvaluator,
    name: str,
    items: List[LoadedEntry],
    values: List[float],
    truths: List[float],
    truth_axis: List[float],
    config: StudyConfig,
    model_centric: bool,
) -> StudyResult:
    metric_class = MetricFactory.metric_class(name)
    direction = metric_class.direction
    k = items[0].predictions.k
    transform = _choose_transform(evaluator, name, config)
    base = dict(metric_name=name, category=metric_class.category, direction=direction, transform=transform, k=k)

    truth_range = max(truths) - min(truths)
    try:
        metric_axis = _transform_values(evaluator, name, transform, values, k)
        rho = spearman(metric_axis, truth_axis)
        tau = kendall_tau_weighted(metric_axis, truth_axis)
        r = pearson(metric_axis, truth_axis)
        slope, intercept, r_squared = linear_fit_r2(metric_axis, truth_axis)
    except PredEvalError as e:
        logger.warning('Metric %s failed: %s', name, e)
        return StudyResult(**base, status='failed', error=str(e), truth_range=truth_range)

    points = [
        StudyPoint(item.subject_id, v, t, x, y)
        for item, v, t, x, y in zip(items, values, truths, metric_axis, truth_axis)
    ]

    ranking = None
    top1_regret = None
    if model_centric:
        order = sorted(range(len(items)), key=lambda i: (-direction * values[i], items[i].subject_id))
        ranking = [items[i].subject_id for i in order]
        top1_regret = max(truths) - truths[order[0]]

    logger.info('%s: rho=%.4f tau_w=%.4f R2=%.4f', name, rho, tau, r_squared)
    return StudyResult(
        **base,
        pearson_r=r,
        spearman_rho=rho,
        kendall_tau_w=tau,
        r_squared=r_squared,
        fit_slope=slope,
        fit_intercept=intercept,
        display_rho=direction * rho,
        display_tau_w=direction * tau,
        truth_range=truth_range,
        narrow_range=truth_range < NARROW_RANGE,
        points=points,
        ranking=ranking,
        top1_regret=top1_regret,
    )


def _run_study(manifest: Manifest, config: StudyConfig, model_centric: bool) -> List[StudyResult]:
    items = load_entries(manifest, config)
    if len(items) < MIN_POINTS:
        noun = 'models' if model_centric else 'test sets'
        raise DataError(f'a study needs at least {MIN_POINTS} {noun}, the manifest has {len(items)}')

    has_validation = all(item.validation is not None for item in items)
    names = resolve_metric_names(config.metrics, has_validation)
    evaluator = MetricEvaluator(names, config.evaluation)

    inputs: List[MetricInputs] = parallel_map(
        lambda item: evaluator.prepare_inputs(item.predictions, item.logits, item.validation),
        items, config.threads
    )

    def score(cell: Tuple[int, str]) -> Tuple[Optional[float], Optional[str]]:
        index, name = cell
        try:
            return evaluator.compute(name, inputs[index]).value, None
        except PredEvalError as e:
            return None, f'{items[index].subject_id}: {e}'

    cells = [(i, name) for name in names for i in range(len(items))]
    scores = dict(zip(cells, parallel_map(score, cells, config.threads)))

    truths = [_ground_truth(item, config.ground_truth) for item in items]
    truth_axis = probit_transform(truths, assume_fraction=True)
    if max(truths) - min(truths) < NARROW_RANGE:
        logger.warning('Ground truth spans only %.3f; correlations may be unstable', max(truths) - min(truths))

    results = []
    for name in names:
        outcomes = [scores[(i, name)] for i in range(len(items))]
        failures = [error for _, error in outcomes if error is not None]
        if failures:
            metric_class = MetricFactory.metric_class(name)
            logger.warning('Metric %s failed: %s', name, failures[0])
            results.append(StudyResult(
                metric_name=name, category=metric_class.category, direction=metric_class.direction,
                transform=_choose_transform(evaluator, name, config), k=items[0].predictions.k,
                status='failed', error=failures[0], truth_range=max(truths) - min(truths),
            ))
            continue
        values = [float(value) for value, _ in outcomes]  # type: ignore
        results.append(_correlate(evaluator, name, items, values, truths, truth_axis, config, model_centric))
    return results


def run_dataset_centric(manifest: Manifest, config: StudyConfig = StudyConfig()) -> List[StudyResult]:
    """
    Correlate each metric with one model's accuracy across many test sets.

    Raises:
        ConfigurationError: If the manifest is not dataset-centric or the config is invalid.
        DataError: On fewer than three test sets or missing labels.
    """
    if manifest.mode != 'dataset_centric':
        raise ConfigurationError(f'expected a dataset_centric manifest, got {manifest.mode}')
    return _run_study(manifest, config, model_centric=False)


def run_model_centric(manifest: Manifest, config: StudyConfig = StudyConfig()) -> List[StudyResult]:
    """
    Correlate each metric with the performance of many models on one test set, and rank
    the models by each metric.

    Raises:
        ConfigurationError: If the manifest is not model-centric or the config is invalid.
        DataError: On fewer than three models or missing labels.
    """
    if manifest.mode != 'model_centric':
        raise ConfigurationError(f'expected a model_centric manifest, got {manifest.mode}')
    return _run_study(manifest, config, model_centric=True)


def group_summary(results: Sequence[StudyResult]) -> Dict[str, Dict[str, Any]]:
    """Mean direction-applied ρ and τ_w of the successful metrics in each category."""
    summary: Dict[str, Dict[str, Any]] = {}
    for category in ('confidence', 'dispersity', 'hybrid'):
        ok = [r for r in results if r.category == category and r.status == 'ok']
        summary[category] = {
            'metrics': [r.metric_name for r in ok],
            'mean_display_rho': float(np.mean([r.display_rho for r in ok])) if ok else None,
            'mean_display_tau_w': float(np.mean([r.display_tau_w for r in ok])) if ok else None,
        }
    return summary


def predict_accuracy(result: StudyResult, metric_values: Sequence[float]) -> List[float]:
    """
    Estimate ground truth from raw scores using a study's fitted line.

    Scores are moved onto the study's metric axis, passed through the fit, and mapped back
    through Φ since the truth axis is probit-scaled.

    Raises:
        ConfigurationError: If the study failed for this metric.
    """
    if result.status != 'ok' or result.fit_slope is None or result.fit_intercept is None:
        raise ConfigurationError(f'metric {result.metric_name} has no fitted line: {result.error}')

    metric = MetricFactory.get_metric(result.metric_name)
    if result.transform == 'probit':
        fractions = []
        for v in metric_values:
            fraction = metric.as_fraction(float(v), result.k)
            fractions.append(min(max(float(v) if fraction is None else fraction, 0.0), 1.0))
        axis = probit_transform(fractions, assume_fraction=True)
    else:
        axis = probit_transform(metric_values, assume_fraction=False)
    return [norm_cdf(result.fit_slope * x + result.fit_intercept) for x in axis]


def build_report(mode: str, results: Sequence[StudyResult], effective_config: Mapping[str, Any]) -> Dict[str, Any]:
    """Assemble the versioned JSON-ready study report."""
    return {
        'schema_version': SCHEMA_VERSION,
        'tool_version': __version__,
        'mode': mode,
        'config': dict(effective_config),
        'results': [r.to_dict() for r in results],
        'group_summary': group_summary(results),
    }


def dumps_report(report: Mapping[str, Any]) -> str:
    """Serialize a report deterministically; failed statistics are stored as null."""
    return json.dumps(report, indent=2, allow_nan=False) + '\n'


def write_scatter_csv(results: Sequence[StudyResult], path: Path) -> None:
    """
    Write every scatter point of the successful metrics as one CSV.

    Raises:
        DataError: If the file cannot be written.
    """
    rows = [
        {
            'metric': r.metric_name,
            'subject_id': p.subject_id,
            'metric_raw': p.metric_value,
            'metric_transformed': p.metric_transformed,
            'truth_raw': p.ground_truth,
            'truth_transformed': p.truth_transformed,
        }
        for r in results for p in r.points
    ]
    schema = {
        'metric': pl.Utf8, 'subject_id': pl.Utf8, 'metric_raw': pl.Float64,
        'metric_transformed': pl.Float64, 'truth_raw': pl.Float64, 'truth_transformed': pl.Float64,
    }
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        pl.DataFrame(rows, schema=schema).write_csv(path)
    except OSError as e:
        raise DataError(f'cannot write scatter CSV: {e}', path) from e
