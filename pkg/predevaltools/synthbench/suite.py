"""
Writes ready-to-run study suites: prediction, logit and label CSVs plus a manifest.

Layout of a suite directory:
    manifest.json
    datasets/<dataset_id>/labels.csv
    datasets/validation/labels.csv
    models/<model_id>/validation/{predictions,logits}.csv
    models/<model_id>/<dataset_id>/{predictions,logits}.csv
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from predevaltools.core.exceptions import ConfigurationError, DataError
from predevaltools.core.primitives import accuracy
from predevaltools.core.types import Manifest, ManifestEntry, StudyMode, STUDY_MODES
from predevaltools.io.loaders import save_labels_csv, save_logit_csv, save_manifest, save_prediction_csv
from predevaltools.studies.runner import StudyConfig, StudyResult, predict_accuracy, run_dataset_centric
from predevaltools.synthbench.rng import MODEL_STREAM, cell_generator
from predevaltools.synthbench.shifts import (
    ImbalanceSpec, ShiftSpec, apply_imbalance, apply_shift, severity_grid
)
from predevaltools.synthbench.task import LabeledSet, Task, TaskSpec, generate_task
from predevaltools.synthbench.trainer import LinearSoftmaxModel, stable_learning_rate, train_linear_softmax
from predevaltools.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

POOL_EPOCHS = (5, 10, 20, 50, 100, 200)
POOL_LR_SCALES = (0.1, 0.25, 0.5, 1.0)
POOL_FEATURE_FRACTIONS = (0.5, 0.75, 1.0)
POOL_INIT_SCALE = 0.01

IMBALANCE_SWEEP_RATIOS = (0.1, 0.2, 0.4, 0.6, 0.8)


@dataclass(frozen=True)
class PoolMember:
    """
    A trained model and the recipe that produced it.

    Attributes:
        model_id (str): Identifier written to the manifest.
        model (LinearSoftmaxModel): The trained classifier.
        epochs (int): Descent steps.
        learning_rate (float): Step size used.
        feature_fraction (float): Share of features the model sees.
    """
    model_id: str
    model: LinearSoftmaxModel
    epochs: int
    learning_rate: float
    feature_fraction: float


@dataclass(frozen=True)
class SuiteSpec:
    """
    Everything needed to regenerate a suite.

    Attributes:
        task (TaskSpec): The synthetic task.
        mode (StudyMode): dataset_centric (one model, every shift) or model_centric
            (a model pool, one shift).
        shifts (Tuple[ShiftSpec, ...]): Shifted test sets; model-centric suites take exactly one.
        n_models (int): Pool size for model-centric suites.
        imbalance (Optional[float]): Long-tail ratio m applied to the clean test set before shifting.
        epochs (int): Training epochs of the dataset-centric model.
        threads (int): Worker threads for training and writing.
    """
    task: TaskSpec = field(default_factory=TaskSpec)
    mode: StudyMode = 'dataset_centric'
    shifts: Tuple[ShiftSpec, ...] = field(default_factory=lambda: tuple(severity_grid()))
    n_models: int = 20
    imbalance: Optional[float] = None
    epochs: int = 300
    threads: int = 1

    def __post_init__(self) -> None:
        if self.mode not in STUDY_MODES:
            raise ConfigurationError(f'unknown mode {self.mode!r}; expected one of {", ".join(STUDY_MODES)}')
        if not self.shifts:
            raise ConfigurationError('a suite needs at least one shift')
        if self.mode == 'model_centric' and len(self.shifts) != 1:
            raise ConfigurationError(f'a model_centric suite takes exactly one shift, got {len(self.shifts)}')
        if self.mode == 'model_centric' and self.n_models < 1:
            raise ConfigurationError(f'n_models must be positive, got {self.n_models}')
        if self.epochs < 0:
            raise ConfigurationError(f'epochs must be nonnegative, got {self.epochs}')


def _feature_mask(dim: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    keep = max(1, int(round(fraction * dim)))
    mask = np.zeros(dim)
    mask[rng.choice(dim, size=keep, replace=False)] = 1.0
    return mask


def build_model_pool(task: Task, n_models: int, seed: int, threads: int = 1) -> List[PoolMember]:
    """
    Train a diverse pool of classifiers on the task's training split.

    Model i draws its epochs, learning-rate scale and feature subset from the stream
    (seed, MODEL_STREAM, i + 1) and its initial weights from seed + i, so each member is
    reproducible on its own.
    """
    def train(index: int) -> PoolMember:
        rng = cell_generator(seed, MODEL_STREAM, index + 1)
        epochs = int(rng.choice(POOL_EPOCHS))
        lr_scale = float(rng.choice(POOL_LR_SCALES))
        fraction = float(rng.choice(POOL_FEATURE_FRACTIONS))
        mask = _feature_mask(task.train.features.shape[1], fraction, rng)
        learning_rate = lr_scale * stable_learning_rate(task.train.features * mask)
        model = train_linear_softmax(
            task.train, epochs, learning_rate, seed=seed + index, init_scale=POOL_INIT_SCALE, feature_mask=mask
        )
        return PoolMember(f'model-{index:02d}', model, epochs, learning_rate, fraction)

    pool = parallel_map(train, list(range(n_models)), threads)
    logger.info('Trained a pool of %d model(s)', n_models)
    return pool


def build_reference_model(task: Task, epochs: int) -> PoolMember:
    """The single well-trained model of a dataset-centric suite."""
    learning_rate = stable_learning_rate(task.train.features)
    model = train_linear_softmax(task.train, epochs, learning_rate, seed=task.spec.seed)
    return PoolMember('model-ref', model, epochs, learning_rate, 1.0)


def shifted_test_sets(task: Task, shifts: Sequence[ShiftSpec], imbalance: Optional[float]) -> Dict[str, LabeledSet]:
    """Apply the optional long tail and then every shift to the clean test split."""
    base = task.test
    if imbalance is not None:
        base = apply_imbalance(base, ImbalanceSpec(imbalance), task.spec.seed)
    return {
        shift.dataset_id: apply_shift(base, shift, task.spec.seed, task.spec.class_separation)
        for shift in shifts
    }


def _write_outputs(member: PoolMember, data: LabeledSet, directory: Path) -> Tuple[Path, Path]:
    logits = member.model.logits(data.features)
    predictions = member.model.predict(data.features)
    predictions_path = directory / 'predictions.csv'
    logits_path = directory / 'logits.csv'
    save_prediction_csv(predictions, predictions_path)
    save_logit_csv(logits, logits_path)
    return predictions_path, logits_path


def emit_suite(
    task: Task,
    models: Sequence[PoolMember],
    datasets: Dict[str, LabeledSet],
    out_dir: Path,
    mode: StudyMode,
    threads: int = 1,
) -> Manifest:
    """
    Write every (model, dataset) cell and the manifest.

    Each model's predictions on the task's validation split are written too and linked
    from its entries, so ATC and DoC can be calibrated per model.

    Raises:
        ConfigurationError: If the model and dataset counts do not fit the mode.
        DataError: On I/O failures.
    """
    if mode == 'dataset_centric' and len(models) != 1:
        raise ConfigurationError(f'a dataset_centric suite fixes one model, got {len(models)}')
    if mode == 'model_centric' and len(datasets) != 1:
        raise ConfigurationError(f'a model_centric suite fixes one test set, got {len(datasets)}')

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f'cannot create suite directory: {e}', out_dir) from e

    val_labels_path = out_dir / 'datasets' / 'validation' / 'labels.csv'
    save_labels_csv(task.val.labels, val_labels_path)
    label_paths = {}
    for dataset_id, data in datasets.items():
        label_paths[dataset_id] = out_dir / 'datasets' / dataset_id / 'labels.csv'
        save_labels_csv(data.labels, label_paths[dataset_id])

    def write_validation(member: PoolMember) -> Path:
        return _write_outputs(member, task.val, out_dir / 'models' / member.model_id / 'validation')[0]

    val_paths = dict(zip([m.model_id for m in models], parallel_map(write_validation, list(models), threads)))

    cells = [(member, dataset_id) for member in models for dataset_id in datasets]

    def write_cell(cell: Tuple[PoolMember, str]) -> ManifestEntry:
        member, dataset_id = cell
        predictions_path, logits_path = _write_outputs(
            member, datasets[dataset_id], out_dir / 'models' / member.model_id / dataset_id
        )
        return ManifestEntry(
            model_id=member.model_id,
            dataset_id=dataset_id,
            predictions_path=predictions_path,
            logits_path=logits_path,
            labels_path=label_paths[dataset_id],
            val_predictions_path=val_paths[member.model_id],
            val_labels_path=val_labels_path,
        )

    manifest = Manifest(mode=mode, entries=parallel_map(write_cell, cells, threads))
    save_manifest(manifest, out_dir / 'manifest.json')
    logger.info('Wrote %s suite with %d entries to %s', mode, len(manifest.entries), out_dir)
    return manifest


def generate_suite(spec: SuiteSpec, out_dir: Path) -> Manifest:
    """Generate the task, train the model(s), corrupt the test set and emit the suite."""
    task = generate_task(spec.task)
    if spec.mode == 'dataset_centric':
        models = [build_reference_model(task, spec.epochs)]
    else:
        models = build_model_pool(task, spec.n_models, spec.task.seed, spec.threads)
    datasets = shifted_test_sets(task, spec.shifts, spec.imbalance)

    if logger.isEnabledFor(logging.DEBUG):
        for member in models:
            for dataset_id, data in datasets.items():
                logger.debug('%s on %s: accuracy %.4f', member.model_id, dataset_id,
                             accuracy(member.model.predict(data.features), data.labels))
    return emit_suite(task, models, datasets, out_dir, spec.mode, spec.threads)


@dataclass(frozen=True)
class ImbalanceSweepRow:
    """
    Study outcome on one long-tailed suite.

    Attributes:
        ratio_m (float): Imbalance ratio of the suite (1.0 for the balanced reference).
        results (List[StudyResult]): Dataset-centric study results on the suite.
        spearman_rho (Dict[str, Optional[float]]): Per-metric ρ, None when the metric failed.
        mae (Dict[str, Optional[float]]): Per-metric mean absolute error of the accuracies
            predicted with the balanced suite's linear fit.
    """
    ratio_m: float
    results: List[StudyResult]
    spearman_rho: Dict[str, Optional[float]]
    mae: Dict[str, Optional[float]]

    def to_dict(self) -> dict:
        return {'ratio_m': self.ratio_m, 'spearman_rho': self.spearman_rho, 'mae': self.mae}


def run_imbalance_sweep(
    spec: SuiteSpec,
    out_dir: Path,
    ratios: Sequence[float] = IMBALANCE_SWEEP_RATIOS,
    study_config: StudyConfig = StudyConfig(),
) -> List[ImbalanceSweepRow]:
    """
    Run the dataset-centric study on a balanced suite and on one long-tailed suite per ratio.

    Every suite shares the task, the model and the shift grid; only the class balance of
    the test sets changes. Fits learned on the balanced suite are reused to predict the
    accuracies of each long-tailed suite.

    Returns:
        List[ImbalanceSweepRow]: The balanced reference first, then one row per ratio.
    """
    if spec.mode != 'dataset_centric':
        raise ConfigurationError('the imbalance sweep runs dataset_centric suites')

    task = generate_task(spec.task)
    models = [build_reference_model(task, spec.epochs)]
    out_dir = Path(out_dir)

    def study(ratio: float) -> List[StudyResult]:
        datasets = shifted_test_sets(task, spec.shifts, ratio)
        manifest = emit_suite(task, models, datasets, out_dir / f'm{ratio:g}', 'dataset_centric', spec.threads)
        return run_dataset_centric(manifest, study_config)

    balanced = study(1.0)
    reference = {r.metric_name: r for r in balanced}
    rows = [ImbalanceSweepRow(1.0, balanced, _rho(balanced), {r.metric_name: None for r in balanced})]

    for ratio in ratios:
        results = study(float(ratio))
        mae: Dict[str, Optional[float]] = {}
        for result in results:
            fitted = reference.get(result.metric_name)
            if result.status != 'ok' or fitted is None or fitted.status != 'ok':
                mae[result.metric_name] = None
                continue
            predicted = predict_accuracy(fitted, [p.metric_value for p in result.points])
            truths = [p.ground_truth for p in result.points]
            mae[result.metric_name] = float(np.mean(np.abs(np.subtract(predicted, truths))))
        rows.append(ImbalanceSweepRow(float(ratio), results, _rho(results), mae))
        logger.info('Imbalance m=%g: nuclear_norm rho=%s', ratio, rows[-1].spearman_rho.get('nuclear_norm'))
    return rows


def _rho(results: Sequence[StudyResult]) -> Dict[str, Optional[float]]:
    return {r.metric_name: r.spearman_rho for r in results}
