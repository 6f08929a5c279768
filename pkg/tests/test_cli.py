import json
import tempfile
from pathlib import Path

import numpy as np
import pytest

from predevaltools import __version__
from predevaltools.cli.config import RunConfig, build_run_config, env_values
from predevaltools.cli.main import build_argparser, main, parse_severities
from predevaltools.core.exceptions import ConfigurationError
from predevaltools.io.loaders import save_labels_csv, save_prediction_csv
from tests.conftest import random_labels, random_predictions

SMALL_SYNTH = ['--k', '3', '--dim', '4', '--n-train', '120', '--n-val', '60', '--n-test', '90', '--epochs', '30']


@pytest.fixture
def temp_dir():
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture
def prediction_file(temp_dir):
    rng = np.random.default_rng(11)
    path = temp_dir / 'predictions.csv'
    save_prediction_csv(random_predictions(rng, 40, 4, sharpness=2.0), path)
    return path


class TestSeverityParsing:
    def test_ranges_and_integers(self):
        assert parse_severities(['1..3', '5'], [3]) == [1, 2, 3, 5]

    def test_default(self):
        assert parse_severities(None, [3]) == [3]

    def test_malformed(self):
        with pytest.raises(ConfigurationError, match='severities'):
            parse_severities(['two'], [3])


class TestRunConfig:
    def test_defaults(self):
        config = build_run_config({}, environ={})

        assert config == RunConfig()

    def test_layer_precedence(self, temp_dir):
        config_path = temp_dir / 'settings.toml'
        config_path.write_text('mano_eta = 2.0\nthreads = 2\nmetrics = ["conf_score", "im"]\n')
        environ = {'PREDEVAL_MANO_ETA': '3.0', 'PREDEVAL_COT_AGGREGATION': 'max', 'HOME': '/root'}

        config = build_run_config({'mano_eta': 4.0, 'threads': None}, str(config_path), environ)

        assert config.mano_eta == 4.0
        assert config.cot_aggregation == 'max'
        assert config.threads == 2
        assert config.metrics == ('conf_score', 'im')

    def test_json_file_and_transforms(self, temp_dir):
        config_path = temp_dir / 'settings.json'
        config_path.write_text(json.dumps({'transforms': {'nuclear_norm': 'raw'}, 'reconstruct_logits': 'false'}))

        config = build_run_config({'transforms': ['im=probit']}, str(config_path), {})

        assert config.transforms == {'im': 'probit'}
        assert config.reconstruct_logits is False

    def test_unknown_file_key(self, temp_dir):
        config_path = temp_dir / 'settings.json'
        config_path.write_text(json.dumps({'mano_etaa': 2.0}))

        with pytest.raises(ConfigurationError, match='mano_etaa'):
            build_run_config({}, str(config_path), {})

    def test_invalid_environment_value(self):
        with pytest.raises(ConfigurationError, match='environment'):
            build_run_config({}, environ={'PREDEVAL_THREADS': 'many'})

    def test_unparseable_file(self, temp_dir):
        config_path = temp_dir / 'settings.toml'
        config_path.write_text('mano_eta = = 2\n')

        with pytest.raises(ConfigurationError, match='cannot parse'):
            build_run_config({}, str(config_path), {})

    @pytest.mark.parametrize('cli_values', [{'threads': 0}, {'val_labels': 'y.csv'}, {'log_level': 'chatty'}])
    def test_invalid_combinations(self, cli_values):
        with pytest.raises(ConfigurationError):
            build_run_config(cli_values, environ={})

    def test_env_values_ignores_foreign_keys(self):
        assert env_values({'PREDEVAL_MANO_P': '2', 'PREDEVAL_NOT_A_KEY': 'x', 'PATH': '/bin'}) == {'mano_p': '2'}

    def test_report_config_omits_operational_keys(self):
        values = RunConfig(threads=4, out='report.json', transforms={'im': 'raw'}).report_config()

        assert 'threads' not in values
        assert 'out' not in values
        assert values['transforms'] == {'im': 'raw'}
        assert values['metrics'] == []


class TestMain:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exit_info:
            build_argparser().parse_args(['--version'])

        assert exit_info.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_metrics_report(self, prediction_file, capsys):
        code = main(['metrics', '--predictions', str(prediction_file)])

        document = json.loads(capsys.readouterr().out)
        assert code == 0
        assert document['tool_version'] == __version__
        assert document['report']['n'] == 40
        assert document['report']['logits_reconstructed'] is True
        assert 'atc' not in document['report']['metrics']
        assert document['report']['metrics']['ctd']['direction'] == -1

    def test_metrics_with_validation(self, temp_dir, prediction_file, capsys):
        rng = np.random.default_rng(3)
        save_prediction_csv(random_predictions(rng, 30, 4, sharpness=2.0), temp_dir / 'val.csv')
        save_labels_csv(random_labels(rng, 30, 4), temp_dir / 'val_labels.csv')

        code = main([
            'metrics', '--predictions', str(prediction_file), '--metrics', 'atc,doc',
            '--val-predictions', str(temp_dir / 'val.csv'), '--val-labels', str(temp_dir / 'val_labels.csv'),
        ])

        document = json.loads(capsys.readouterr().out)
        assert code == 0
        assert list(document['report']['metrics']) == ['atc', 'doc']

    def test_metrics_to_file(self, temp_dir, prediction_file, capsys):
        out = temp_dir / 'reports' / 'metrics.json'

        code = main(['metrics', '--predictions', str(prediction_file), '--metrics', 'im', '--out', str(out)])

        assert code == 0
        assert capsys.readouterr().out == ''
        assert json.loads(out.read_text())['report']['metrics']['im']['value'] >= 0.0

    def test_configuration_error_exit_code(self, prediction_file):
        assert main(['metrics', '--predictions', str(prediction_file), '--threads', '0']) == 2
        assert main(['metrics', '--predictions', str(prediction_file), '--metrics', 'accuracy_guess']) == 2

    def test_data_error_exit_code(self, temp_dir):
        assert main(['metrics', '--predictions', str(temp_dir / 'missing.csv')]) == 3

    def test_rank_rejects_dataset_manifest(self, temp_dir):
        assert main(['synth', '--out', str(temp_dir / 'suite'), *SMALL_SYNTH,
                     '--shift-kinds', 'gaussian_noise', '--severities', '1..3']) == 0

        assert main(['rank', str(temp_dir / 'suite' / 'manifest.json')]) == 2


class TestStudyCommands:
    def test_synth_summary(self, temp_dir, capsys):
        code = main(['synth', '--out', str(temp_dir / 'suite'), *SMALL_SYNTH,
                     '--shift-kinds', 'gaussian_noise', 'mean_shift', '--severities', '1', '5'])

        summary = json.loads(capsys.readouterr().out)
        assert code == 0
        assert summary['mode'] == 'dataset_centric'
        assert summary['entries'] == 4
        assert Path(summary['manifest']).exists()

    def test_evaluate_is_thread_independent(self, temp_dir):
        suite = temp_dir / 'suite'
        assert main(['synth', '--out', str(suite), *SMALL_SYNTH,
                     '--shift-kinds', 'gaussian_noise', 'feature_dropout', '--severities', '1..5']) == 0

        for threads in ('1', '8'):
            assert main(['evaluate', str(suite / 'manifest.json'), '--threads', threads,
                         '--out', str(temp_dir / f'report-{threads}.json'),
                         '--scatter-csv', str(temp_dir / f'scatter-{threads}.csv')]) == 0

        assert (temp_dir / 'report-1.json').read_bytes() == (temp_dir / 'report-8.json').read_bytes()
        assert (temp_dir / 'scatter-1.csv').read_bytes() == (temp_dir / 'scatter-8.csv').read_bytes()
        report = json.loads((temp_dir / 'report-1.json').read_text())
        assert report['mode'] == 'dataset_centric'
        assert {r['metric_name'] for r in report['results']} >= {'nuclear_norm', 'atc', 'doc'}

    def test_rank_is_thread_independent(self, temp_dir):
        suite = temp_dir / 'pool'
        assert main(['synth', '--out', str(suite), *SMALL_SYNTH, '--mode', 'model', '--models', '4']) == 0

        for threads in ('1', '8'):
            assert main(['rank', str(suite / 'manifest.json'), '--threads', threads,
                         '--metrics', 'conf_score,nuclear_norm,cot',
                         '--out', str(temp_dir / f'rank-{threads}.json')]) == 0

        assert (temp_dir / 'rank-1.json').read_bytes() == (temp_dir / 'rank-8.json').read_bytes()
        report = json.loads((temp_dir / 'rank-1.json').read_text())
        assert report['mode'] == 'model_centric'
        assert [r['metric_name'] for r in report['results']] == ['conf_score', 'nuclear_norm', 'cot']
