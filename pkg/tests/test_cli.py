import json
import logging

import pytest
from click.testing import CliRunner

from main import main


@pytest.fixture(autouse=True)
def reset_logger():
    yield
    logger = logging.getLogger('liectl')
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


@pytest.fixture
def liectl(tmp_path):
    runner = CliRunner()

    def invoke(*args, output_dir=None):
        out = output_dir or tmp_path
        return runner.invoke(main, ['--output-dir', str(out), '--log-file', ''] + list(args))
    return invoke


def read_json(path):
    with open(path, encoding='utf-8') as f:
        return json.load(f)


class TestExitCodes:
    def test_version(self, liectl):
        result = liectl('version')
        assert result.exit_code == 0
        assert 'liectl' in result.output

    def test_catalog(self, liectl):
        result = liectl('catalog')
        assert result.exit_code == 0
        assert 'unicycle' in result.output

    def test_singular_steady_state_is_numerical(self, liectl):
        assert liectl('linear', '--task', 'steady').exit_code == 3

    def test_zero_step_is_invalid(self, liectl):
        assert liectl('vdp', '--dt', '0').exit_code == 2

    def test_null_gain_in_run_document(self, liectl, tmp_path):
        doc = tmp_path / 'run.json'
        doc.write_text(json.dumps({'K': None}))
        assert liectl('--config', str(doc), 'operator').exit_code == 2

    def test_missing_run_document(self, liectl, tmp_path):
        assert liectl('--config', str(tmp_path / 'absent.json'), 'linear').exit_code == 2

    def test_delay_below_step(self, liectl):
        assert liectl('operator', '--tau', '0.001', '--dt', '0.01').exit_code == 2


class TestArtifacts:
    def test_rank(self, liectl, tmp_path):
        result = liectl('linear', '--task', 'rank')
        assert result.exit_code == 0
        report = read_json(tmp_path / 'linear_rank.json')
        assert report['rank'] == 2
        assert report['controllable'] is True
        assert report['meta']['command'] == 'linear'

    def test_minimum_energy_transfer(self, liectl, tmp_path):
        assert liectl('linear', '--task', 'minenergy').exit_code == 0
        assert read_json(tmp_path / 'linear_minenergy.json')['endpoint_error'] < 1e-3

    def test_run_document_params_key(self, liectl, tmp_path):
        doc = tmp_path / 'run.json'
        doc.write_text(json.dumps({'params': {'model': {'A': [[-1.0, 0.0], [0.0, -2.0]], 'B': [[1.0], [0.0]],
                                                        'C': [[1.0, 0.0]], 'D': [[0.0]]}}}))
        assert liectl('--config', str(doc), 'linear', '--task', 'rank').exit_code == 0
        assert read_json(tmp_path / 'linear_rank.json')['controllable'] is False

    def test_operator_outputs(self, liectl, tmp_path):
        assert liectl('operator', '--T', '5').exit_code == 0
        margin = read_json(tmp_path / 'operator_margin.json')
        assert margin['omega_c'] == 1.0
        lines = (tmp_path / 'operator_tracking.csv').read_text().splitlines()
        assert lines[0] == '# liectl operator seed=0 dt=0.01'
        assert lines[1] == 't,target,output,error,control'
        assert len(lines) == 2 + 501

    def test_feedbacklin(self, liectl, tmp_path):
        assert liectl('feedbacklin', '--T', '2').exit_code == 0
        report = read_json(tmp_path / 'feedbacklin_report.json')
        assert report['relative_degree'] == 2
        assert report['max_deviation'] < 1e-3

    def test_butterworth_cutoff(self, liectl, tmp_path):
        assert liectl('feedbacklin', '--T', '1', '--cutoff', '1').exit_code == 0
        beta = read_json(tmp_path / 'feedbacklin_report.json')['beta']
        assert beta == pytest.approx([2 ** 0.5, 1.0])

    def test_adaptive_short_run(self, liectl, tmp_path):
        assert liectl('adaptive', '--T', '2', '--dt', '0.01').exit_code == 0
        summary = read_json(tmp_path / 'adaptive_summary.json')
        assert summary['clamp_count'] == 0

    def test_unicycle_bracket(self, liectl, tmp_path):
        result = liectl('bracket', '--system', 'unicycle', '--depth', '1')
        assert result.exit_code == 0
        assert 'rank 3 of 3' in result.output
        report = read_json(tmp_path / 'bracket_tree.json')
        assert [n['label'] for n in report['nodes']] == ['g1', 'g2', '[g1,g2]']
        assert (tmp_path / 'bracket_maneuver.csv').exists()

    def test_bracket_depth_cap(self, liectl):
        assert liectl('bracket', '--depth', '4').exit_code == 2

    def test_sliding_events(self, liectl, tmp_path):
        assert liectl('sliding').exit_code == 0
        events = (tmp_path / 'sliding_events.csv').read_text().splitlines()
        assert events[2].endswith('enter-sliding')


class TestDeterminism:
    def test_tracer_reruns_are_identical(self, liectl, tmp_path):
        first, second = tmp_path / 'a', tmp_path / 'b'
        assert liectl('tracer', output_dir=first).exit_code == 0
        assert liectl('tracer', output_dir=second).exit_code == 0
        name = 'tracer_spring.csv'
        assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_langevin_seed(self, liectl, tmp_path):
        args = ['langevin', '--runs', '20', '--T', '2', '--t-start', '1']
        first, second = tmp_path / 'a', tmp_path / 'b'
        assert liectl('--seed', '5', *args, output_dir=first).exit_code == 0
        assert liectl('--seed', '5', *args, output_dir=second).exit_code == 0
        name = 'langevin_sample.csv'
        assert (first / name).read_bytes() == (second / name).read_bytes()
        assert read_json(first / 'langevin_summary.json')['meta']['seed'] == 5
