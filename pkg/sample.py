"""
Demo of the main features of the predevaltools module: label-free accuracy estimation
and model ranking from prediction matrices.

Required dependencies:
- numpy: Numerical computing library
- polars: CSV reading and writing
- scipy: Special functions and statistics
- POT: Optimal transport solvers

Installation:
pip install numpy polars scipy POT tomli
"""
import tempfile
from pathlib import Path

import numpy as np

from predevaltools.core.types import PredictionMatrix
from predevaltools.metrics.evaluator import MetricEvaluator, resolve_metric_names
from predevaltools.studies.runner import StudyConfig, group_summary, run_dataset_centric, run_model_centric
from predevaltools.synthbench.shifts import ShiftSpec, severity_grid
from predevaltools.synthbench.suite import SuiteSpec, generate_suite
from predevaltools.synthbench.task import TaskSpec
from predevaltools.utils.logger import Logger

LOGGER = Logger.get_instance()


def main_metrics():
    # Score a single prediction matrix without labels
    rng = np.random.default_rng(0)
    z = 2.0 * rng.standard_normal((500, 10))
    p = np.exp(z - z.max(axis=1, keepdims=True))
    preds = PredictionMatrix(p / p.sum(axis=1, keepdims=True))

    evaluator = MetricEvaluator(resolve_metric_names(None, has_validation=False))
    report = evaluator.evaluate(preds)
    for name, value in report.values.items():
        LOGGER.info(f'{name}: {value:.4f}')


def main_dataset_centric(work_dir: Path):
    # One model, 25 shifted test sets: how well does each metric track accuracy?
    task = TaskSpec(k=10, dim=16, seed=0, n_train=1000, n_val=500, n_test=1000)
    manifest = generate_suite(SuiteSpec(task=task, shifts=tuple(severity_grid()), epochs=200), work_dir / 'datasets')

    results = run_dataset_centric(manifest, StudyConfig(threads=4))
    for result in results:
        LOGGER.info(f'{result.metric_name}: rho={result.display_rho} R2={result.r_squared}')
    LOGGER.info(f'Group summary: {group_summary(results)}')


def main_model_centric(work_dir: Path):
    # Twenty models, one shifted test set: which metric picks the best model?
    task = TaskSpec(k=10, dim=16, seed=0, n_train=1000, n_val=500, n_test=1000)
    spec = SuiteSpec(task=task, mode='model_centric', shifts=(ShiftSpec('gaussian_noise', 3),), n_models=20)
    manifest = generate_suite(spec, work_dir / 'models')

    for result in run_model_centric(manifest, StudyConfig(metrics=('conf_score', 'nuclear_norm', 'cot'))):
        LOGGER.info(f'{result.metric_name}: tau_w={result.display_tau_w} top-1 regret={result.top1_regret}')


if __name__ == '__main__':
    main_metrics()
    with tempfile.TemporaryDirectory() as tmp_dir:
        main_dataset_centric(Path(tmp_dir))
        main_model_centric(Path(tmp_dir))
