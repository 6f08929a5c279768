"""
Run configuration, merged from defaults, a config file, the environment and CLI flags.

Precedence, lowest to highest: built-in defaults < `--config` file (JSON, or TOML when the
file name ends in .toml) < `PREDEVAL_<KEY>` environment variables < explicit flags.
"""
import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import tomli

from predevaltools.core.exceptions import ConfigurationError
from predevaltools.io.loaders import load_histogram_csv
from predevaltools.metrics.confidence import ConfidenceConfig
from predevaltools.metrics.dispersity import SourceHistogram
from predevaltools.metrics.evaluator import EvaluationConfig
from predevaltools.metrics.hybrid import CotConfig, PriorDistribution
from predevaltools.studies.runner import StudyConfig

ENV_PREFIX = 'PREDEVAL_'

# keys that change no reported number; kept out of the report's embedded config
OPERATIONAL_KEYS = ('threads', 'log_level', 'out', 'scatter_csv')


@dataclass(frozen=True)
class RunConfig:
    """
    Effective settings of one CLI run.

    Attributes:
        metrics (Tuple[str, ...]): Metrics to compute; empty selects the default set.
        energy_temperature (float): AvgEnergy temperature T.
        mano_eta (float): MaNo normalization switch point.
        mano_p (int): MaNo norm order.
        cot_aggregation (str): 'mean' or 'max'.
        cot_exact_limit (int): Largest n solved exactly by COT.
        cot_epsilon (float): Entropic regularization of the COT fallback.
        prior (Optional[str]): CSV of k prior weights for COT and SoftmaxCorr.
        source_hist (Optional[str]): CSV of k source-histogram weights for CTD.
        val_predictions (Optional[str]): Validation predictions for ATC and DoC.
        val_labels (Optional[str]): Validation labels for ATC and DoC.
        reconstruct_logits (bool): Rebuild logits from probabilities when none are given.
        ground_truth (str): 'accuracy' or 'macro_f1'.
        transforms (Dict[str, str]): metric -> 'probit' or 'raw' overrides.
        threads (int): Worker threads.
        log_level (str): Logging level name.
        out (Optional[str]): Report path; stdout when unset.
        scatter_csv (Optional[str]): Scatter CSV path for studies.
    """
    metrics: Tuple[str, ...] = ()
    energy_temperature: float = 1.0
    mano_eta: float = 5.0
    mano_p: int = 4
    cot_aggregation: str = 'mean'
    cot_exact_limit: int = 2000
    cot_epsilon: float = 1e-2
    prior: Optional[str] = None
    source_hist: Optional[str] = None
    val_predictions: Optional[str] = None
    val_labels: Optional[str] = None
    reconstruct_logits: bool = True
    ground_truth: str = 'accuracy'
    transforms: Dict[str, str] = field(default_factory=dict)
    threads: int = 1
    log_level: str = 'INFO'
    out: Optional[str] = None
    scatter_csv: Optional[str] = None

    def report_config(self) -> Dict[str, Any]:
        """The settings that affect reported numbers, JSON-ready."""
        values = asdict(self)
        for key in OPERATIONAL_KEYS:
            values.pop(key)
        values['metrics'] = list(self.metrics)
        values['transforms'] = dict(sorted(self.transforms.items()))
        return values

    def confidence_config(self) -> ConfidenceConfig:
        return ConfidenceConfig(self.energy_temperature, self.mano_eta, self.mano_p)

    def cot_config(self) -> CotConfig:
        return CotConfig(self.cot_aggregation, self.cot_exact_limit, self.cot_epsilon)  # type: ignore

    def evaluation_config(self) -> EvaluationConfig:
        """
        Build metric settings, reading the prior and source histogram files.

        Raises:
            DataError: If a histogram file is missing or invalid.
        """
        prior = PriorDistribution(load_histogram_csv(self.prior), 'file') if self.prior else None
        source = SourceHistogram(load_histogram_csv(self.source_hist), 'user_supplied') if self.source_hist else None
        return EvaluationConfig(
            confidence=self.confidence_config(),
            cot=self.cot_config(),
            prior=prior,
            source=source,
            reconstruct_logits=self.reconstruct_logits,
        )

    def study_config(self) -> StudyConfig:
        return StudyConfig(
            metrics=self.metrics,
            evaluation=self.evaluation_config(),
            ground_truth=self.ground_truth,  # type: ignore
            transforms=dict(self.transforms),  # type: ignore
            threads=self.threads,
            val_predictions=Path(self.val_predictions) if self.val_predictions else None,
            val_labels=Path(self.val_labels) if self.val_labels else None,
        )


def _to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f'not a boolean: {value!r}')


def _to_names(value: Any) -> Tuple[str, ...]:
    items = value.split(',') if isinstance(value, str) else list(value)
    return tuple(str(item).strip() for item in items if str(item).strip())


def _to_transforms(value: Any) -> Dict[str, str]:
    if isinstance(value, Mapping):
        return {str(k): str(v) for k, v in value.items()}
    pairs = value.split(',') if isinstance(value, str) else list(value)
    transforms = {}
    for pair in pairs:
        pair = str(pair).strip()
        if not pair:
            continue
        name, sep, transform = pair.partition('=')
        if not sep:
            raise ValueError(f'expected metric=probit|raw, got {pair!r}')
        transforms[name.strip()] = transform.strip()
    return transforms


def _to_optional_str(value: Any) -> Optional[str]:
    return None if value is None or str(value) == '' else str(value)


COERCERS: Dict[str, Callable[[Any], Any]] = {
    'metrics': _to_names,
    'energy_temperature': float,
    'mano_eta': float,
    'mano_p': int,
    'cot_aggregation': str,
    'cot_exact_limit': int,
    'cot_epsilon': float,
    'prior': _to_optional_str,
    'source_hist': _to_optional_str,
    'val_predictions': _to_optional_str,
    'val_labels': _to_optional_str,
    'reconstruct_logits': _to_bool,
    'ground_truth': str,
    'transforms': _to_transforms,
    'threads': int,
    'log_level': lambda v: str(v).upper(),
    'out': _to_optional_str,
    'scatter_csv': _to_optional_str,
}


def coerce_values(values: Mapping[str, Any], origin: str) -> Dict[str, Any]:
    """
    Convert raw layer values to RunConfig field types.

    Raises:
        ConfigurationError: On an unknown key or an unconvertible value, naming the origin.
    """
    known = {f.name for f in fields(RunConfig)}
    coerced = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigurationError(f'{origin}: unknown configuration key {key!r}')
        try:
            coerced[key] = COERCERS[key](value)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f'{origin}: invalid value for {key}: {e}') from e
    return coerced


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a JSON or TOML configuration file into a flat dictionary.

    Raises:
        ConfigurationError: If the file cannot be read or parsed, or is not a table/object.
    """
    config_path = Path(path)
    try:
        if config_path.suffix.lower() == '.toml':
            with open(config_path, 'rb') as handle:
                document = tomli.load(handle)
        else:
            document = json.loads(config_path.read_text(encoding='utf-8'))
    except OSError as e:
        raise ConfigurationError(f'cannot read config file {config_path}: {e}') from e
    except (tomli.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigurationError(f'cannot parse config file {config_path}: {e}') from e

    if not isinstance(document, dict):
        raise ConfigurationError(f'config file {config_path} must contain a table of settings')
    return document


def env_values(environ: Mapping[str, str] = os.environ) -> Dict[str, str]:
    """Collect `PREDEVAL_<KEY>` variables whose key names a RunConfig field."""
    known = {f.name for f in fields(RunConfig)}
    values = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower()
            if key in known:
                values[key] = value
    return values


def build_run_config(
    cli_values: Mapping[str, Any],
    config_path: Optional[str] = None,
    environ: Mapping[str, str] = os.environ,
) -> RunConfig:
    """
    Merge the configuration layers.

    Parameters:
        cli_values (Mapping[str, Any]): Flags the user actually gave (None values are ignored).
        config_path (Optional[str]): Optional JSON/TOML config file.
        environ (Mapping[str, str]): Environment to read overrides from.

    Raises:
        ConfigurationError: On unknown keys or invalid values in any layer.
    """
    config = RunConfig()
    if config_path:
        config = replace(config, **coerce_values(load_config_file(config_path), config_path))
    config = replace(config, **coerce_values(env_values(environ), 'environment'))
    explicit = {key: value for key, value in cli_values.items() if value is not None}
    config = replace(config, **coerce_values(explicit, 'command line'))

    if config.threads < 1:
        raise ConfigurationError(f'threads must be at least 1, got {config.threads}')
    if (config.val_predictions is None) != (config.val_labels is None):
        raise ConfigurationError('--val-predictions and --val-labels must be given together')
    if config.log_level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
        raise ConfigurationError(f'unknown log level {config.log_level!r}')
    return config
