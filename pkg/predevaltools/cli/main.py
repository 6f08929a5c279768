"""
`predeval` command line.

Subcommands:
    metrics   score one prediction matrix
    evaluate  dataset-centric study over a manifest
    rank      model-centric study over a manifest
    synth     generate a synthetic suite (and optionally run the imbalance sweep)

Exit codes: 0 success, 2 configuration error, 3 data or parse error, 4 numerical failure.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from predevaltools import __version__
from predevaltools.cli.config import RunConfig, build_run_config
from predevaltools.core.exceptions import ConfigurationError, PredEvalError
from predevaltools.io.loaders import load_logit_csv, load_manifest, load_prediction_csv
from predevaltools.metrics.evaluator import MetricEvaluator, resolve_metric_names
from predevaltools.studies.runner import (
    SCHEMA_VERSION, build_report, dumps_report, load_validation, run_dataset_centric, run_model_centric,
    write_scatter_csv
)
from predevaltools.synthbench.shifts import SEVERITIES, SHIFT_KINDS, ShiftSpec
from predevaltools.synthbench.suite import SuiteSpec, generate_suite, run_imbalance_sweep
from predevaltools.synthbench.task import TaskSpec
from predevaltools.utils.logger import Logger

logger = logging.getLogger(__name__)

# argparse dests that map onto RunConfig keys
CONFIG_DESTS = (
    'metrics', 'energy_temperature', 'mano_eta', 'mano_p', 'cot_aggregation', 'cot_exact_limit',
    'cot_epsilon', 'prior', 'source_hist', 'val_predictions', 'val_labels', 'reconstruct_logits',
    'ground_truth', 'transforms', 'threads', 'log_level', 'out', 'scatter_csv',
)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON or TOML file of settings (overridden by env and flags).')
    common.add_argument('--log-level', dest='log_level', help='DEBUG, INFO, WARNING or ERROR (default: INFO).')
    common.add_argument('--metrics', help='Comma-separated metric names (default: all available).')
    common.add_argument('--energy-temperature', dest='energy_temperature', type=float,
                        help='AvgEnergy temperature T (default: 1.0).')
    common.add_argument('--mano-eta', dest='mano_eta', type=float, help='MaNo switch point eta (default: 5.0).')
    common.add_argument('--mano-p', dest='mano_p', type=int, help='MaNo norm order (default: 4).')
    common.add_argument('--cot-aggregation', dest='cot_aggregation', choices=['mean', 'max'],
                        help='Per-sample COT cost aggregation (default: mean).')
    common.add_argument('--cot-exact-limit', dest='cot_exact_limit', type=int,
                        help='Largest n solved exactly by COT (default: 2000).')
    common.add_argument('--cot-epsilon', dest='cot_epsilon', type=float,
                        help='Entropic regularization of the COT fallback (default: 0.01).')
    common.add_argument('--prior', help='CSV of k prior weights for COT and SoftmaxCorr (default: uniform).')
    common.add_argument('--source-hist', dest='source_hist',
                        help='CSV of k source-histogram weights for CTD (default: uniform).')
    common.add_argument('--val-predictions', dest='val_predictions', help='Validation predictions for ATC/DoC.')
    common.add_argument('--val-labels', dest='val_labels', help='Validation labels for ATC/DoC.')
    common.add_argument('--no-reconstruct-logits', dest='reconstruct_logits', action='store_const', const=False,
                        help='Fail instead of rebuilding logits from probabilities.')
    common.add_argument('--ground-truth', dest='ground_truth', choices=['accuracy', 'macro_f1'],
                        help='Ground-truth performance measure for studies (default: accuracy).')
    common.add_argument('--transform', dest='transforms', action='append', metavar='METRIC=probit|raw',
                        help='Override the probit/raw axis of a metric (repeatable).')
    common.add_argument('--threads', type=int, help='Worker threads (default: 1).')
    return common


def build_argparser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog='predeval',
        description='Label-free accuracy estimation and model ranking from prediction matrices.'
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    metrics = commands.add_parser('metrics', parents=[common], help='Score one prediction matrix.')
    metrics.add_argument('--predictions', required=True, help='Prediction CSV (n rows, k columns).')
    metrics.add_argument('--logits', help='Logit CSV matching the predictions.')
    metrics.add_argument('--out', help='Report path (default: stdout).')

    for name, text in (('evaluate', 'Dataset-centric study.'), ('rank', 'Model-centric study.')):
        study = commands.add_parser(name, parents=[common], help=text)
        study.add_argument('manifest', help='Study manifest JSON.')
        study.add_argument('--out', help='Report path (default: stdout).')
        study.add_argument('--scatter-csv', dest='scatter_csv', help='Write scatter points to this CSV.')

    synth = commands.add_parser('synth', parents=[common], help='Generate a synthetic suite.')
    synth.add_argument('--out', dest='suite_dir', required=True, help='Suite output directory.')
    synth.add_argument('--k', type=int, default=10, help='Classes (default: 10).')
    synth.add_argument('--dim', type=int, default=16, help='Feature dimension (default: 16).')
    synth.add_argument('--sep', type=float, default=3.0, help='Class separation (default: 3.0).')
    synth.add_argument('--seed', type=int, default=0, help='Root seed (default: 0).')
    synth.add_argument('--n-train', dest='n_train', type=int, default=2000)
    synth.add_argument('--n-val', dest='n_val', type=int, default=1000)
    synth.add_argument('--n-test', dest='n_test', type=int, default=2000)
    synth.add_argument('--epochs', type=int, default=300, help='Epochs of the dataset-centric model.')
    synth.add_argument('--models', type=int, default=20, help='Model pool size in model mode (default: 20).')
    synth.add_argument('--shift-kinds', dest='shift_kinds', nargs='+', choices=SHIFT_KINDS,
                       help='Shift kinds (default: all in dataset mode, gaussian_noise in model mode).')
    synth.add_argument('--severities', nargs='+',
                       help='Severities as integers or ranges like 1..5 (default: 1..5, or 3 in model mode).')
    synth.add_argument('--imbalance', type=float, help='Long-tail ratio m in (0, 1].')
    synth.add_argument('--mode', choices=['dataset', 'model'], default='dataset')
    synth.add_argument('--imbalance-sweep', dest='imbalance_sweep', action='store_true',
                       help='Run dataset-centric studies over imbalance ratios 0.1..0.8 and report them.')
    return parser


def parse_severities(tokens: Optional[Sequence[str]], default: Sequence[int]) -> List[int]:
    """
    Expand '1..5'-style ranges and plain integers.

    Raises:
        ConfigurationError: On malformed tokens.
    """
    if not tokens:
        return list(default)
    severities: List[int] = []
    try:
        for token in tokens:
            if '..' in token:
                low, high = token.split('..', 1)
                severities.extend(range(int(low), int(high) + 1))
            else:
                severities.append(int(token))
    except ValueError as e:
        raise ConfigurationError(f'invalid --severities: {e}') from e
    return severities


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding='utf-8')
    logger.info('Wrote %s', target)


def cmd_metrics(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    """Score one prediction matrix and return the JSON-ready MetricReport."""
    preds = load_prediction_csv(args.predictions)
    logits = load_logit_csv(args.logits) if args.logits else None
    validation = None
    if config.val_predictions and config.val_labels:
        validation = load_validation(Path(config.val_predictions), Path(config.val_labels))

    names = resolve_metric_names(config.metrics, validation is not None)
    evaluator = MetricEvaluator(names, config.evaluation_config())
    report = evaluator.evaluate(preds, logits, validation)
    return {
        'schema_version': SCHEMA_VERSION,
        'tool_version': __version__,
        'config': config.report_config(),
        'report': report.to_dict(),
    }


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    """Run the dataset-centric study of a manifest."""
    manifest = load_manifest(args.manifest)
    results = run_dataset_centric(manifest, config.study_config())
    if config.scatter_csv:
        write_scatter_csv(results, Path(config.scatter_csv))
    return build_report(manifest.mode, results, config.report_config())


def cmd_rank(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    """Run the model-centric study of a manifest, including per-metric rankings."""
    manifest = load_manifest(args.manifest)
    results = run_model_centric(manifest, config.study_config())
    if config.scatter_csv:
        write_scatter_csv(results, Path(config.scatter_csv))
    return build_report(manifest.mode, results, config.report_config())


def cmd_synth(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    """Generate a suite, or run the imbalance sweep when requested."""
    model_mode = args.mode == 'model'
    kinds = args.shift_kinds or (['gaussian_noise'] if model_mode else list(SHIFT_KINDS))
    severities = parse_severities(args.severities, [3] if model_mode else SEVERITIES)
    task = TaskSpec(
        k=args.k, dim=args.dim, class_separation=args.sep, seed=args.seed,
        n_train=args.n_train, n_val=args.n_val, n_test=args.n_test
    )
    spec = SuiteSpec(
        task=task,
        mode='model_centric' if model_mode else 'dataset_centric',
        shifts=tuple(ShiftSpec(kind, severity) for kind in kinds for severity in severities),  # type: ignore
        n_models=args.models,
        imbalance=args.imbalance,
        epochs=args.epochs,
        threads=config.threads,
    )

    if args.imbalance_sweep:
        rows = run_imbalance_sweep(spec, Path(args.suite_dir), study_config=config.study_config())
        report = {
            'schema_version': SCHEMA_VERSION,
            'tool_version': __version__,
            'mode': 'imbalance_sweep',
            'config': config.report_config(),
            'rows': [row.to_dict() for row in rows],
        }
        _emit(dumps_report(report), str(Path(args.suite_dir) / 'imbalance_sweep.json'))
        return report

    manifest = generate_suite(spec, Path(args.suite_dir))
    return {
        'schema_version': SCHEMA_VERSION,
        'tool_version': __version__,
        'mode': manifest.mode,
        'manifest': str(Path(args.suite_dir) / 'manifest.json'),
        'entries': len(manifest.entries),
    }


COMMANDS = {
    'metrics': cmd_metrics,
    'evaluate': cmd_evaluate,
    'rank': cmd_rank,
    'synth': cmd_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_argparser().parse_args(argv)
    cli_values = {dest: getattr(args, dest, None) for dest in CONFIG_DESTS}

    try:
        config = build_run_config(cli_values, args.config)
        Logger.get_instance(level=config.log_level)
        report = COMMANDS[args.command](args, config)
        _emit(dumps_report(report), config.out)
    except PredEvalError as e:
        Logger.get_instance().error('%s', e)
        return e.exit_code
    except OSError as e:
        Logger.get_instance().error('%s', e)
        return 3
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == '__main__':
    entry()
