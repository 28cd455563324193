"""End-to-end tests of the command-line runner."""

import json

import pandas as pd
import pytest

import main as cli
from analysis import RunManager
from utils import DegenerateWeightsError, EssCollapseError


def run_cli(fixtures_dir, command, config, out, *extra):
    return cli.main([command, '--config', str(fixtures_dir / config), '--out', str(out), *extra])


def only_run_dir(out):
    runs = [p for p in out.iterdir() if p.is_dir()]
    assert len(runs) == 1
    return runs[0]


class TestExitCodes:

    @pytest.mark.parametrize("config,code,error", [
        ('infeasible.toml', cli.EXIT_INFEASIBLE, 'InfeasibleTargetError'),
        ('ess_collapse.toml', cli.EXIT_ESS_COLLAPSE, 'EssCollapseError'),
        ('nonconvergence.toml', cli.EXIT_NON_CONVERGENCE, 'NonConvergenceError'),
    ])
    def test_solver_failures_write_error_json(self, fixtures_dir, tmp_path, config, code, error):
        assert run_cli(fixtures_dir, 'solve', config, tmp_path) == code
        run_dir = only_run_dir(tmp_path)
        payload = json.loads((run_dir / 'error.json').read_text())
        assert payload['error'] == error
        assert payload['exit_code'] == code
        manifest = json.loads((run_dir / 'manifest.json').read_text())
        assert manifest['exit_code'] == code
        assert manifest['config']['command'] == 'solve'
        assert manifest['config_hash'].startswith(run_dir.name.split('_')[1])
        assert [o['path'] for o in manifest['outputs']] == ['error.json', 'run.log']
        assert RunManager(str(tmp_path)).verify_run(run_dir.name)['ok']

    @pytest.mark.parametrize("config", ['bad_config.toml', 'capacity.toml'])
    def test_rejected_config_creates_nothing(self, fixtures_dir, tmp_path, capsys, config):
        out = tmp_path / 'out'
        assert run_cli(fixtures_dir, 'solve', config, out) == cli.EXIT_BAD_CONFIG
        assert not out.exists()
        payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert payload['exit_code'] == cli.EXIT_BAD_CONFIG
        assert payload['error'] in ('ConfigError', 'CapacityError')

    def test_missing_config_file(self, tmp_path):
        assert cli.main(['solve', '--config', str(tmp_path / 'none.toml'), '--out', str(tmp_path)]) == 2

    def test_unexpected_failure(self, fixtures_dir, tmp_path, mocker):
        mocker.patch.object(cli.ExperimentRunner, 'run_solve', side_effect=RuntimeError('boom'))
        assert run_cli(fixtures_dir, 'solve', 'zero_target.toml', tmp_path) == cli.EXIT_FAILURE
        payload = json.loads((only_run_dir(tmp_path) / 'error.json').read_text())
        assert payload['error'] == 'RuntimeError'
        assert payload['message'] == 'boom'
        assert json.loads((only_run_dir(tmp_path) / 'manifest.json').read_text())['exit_code'] == cli.EXIT_FAILURE

    def test_exit_code_mapping(self):
        assert cli.exit_code_for(EssCollapseError(1.0, 10.0, [0j])) == cli.EXIT_ESS_COLLAPSE
        assert cli.exit_code_for(DegenerateWeightsError(0.0, 1.0)) == cli.EXIT_ESS_COLLAPSE
        assert cli.exit_code_for(KeyError('x')) == cli.EXIT_FAILURE


class TestSolve:

    def test_zero_target(self, fixtures_dir, tmp_path):
        assert run_cli(fixtures_dir, 'solve', 'zero_target.toml', tmp_path) == cli.EXIT_OK
        run_dir = only_run_dir(tmp_path)
        assert run_dir.name.startswith('solve_')
        solution = json.loads((run_dir / 'solution.json').read_text())['solutions'][0]
        assert solution['mu'] == [[0.0, 0.0]]
        assert solution['achieved_field'] == [[0.0, 0.0]]
        assert solution['log_z'] == 0.0

    def test_outputs_and_manifest(self, fixtures_dir, tmp_path):
        assert run_cli(fixtures_dir, 'solve', 'solve_small.toml', tmp_path) == cli.EXIT_OK
        run_dir = only_run_dir(tmp_path)
        manifest = json.loads((run_dir / 'manifest.json').read_text())
        paths = [o['path'] for o in manifest['outputs']]
        assert paths == ['density_matrix.json', 'density_matrix.csv', 'solution.json', 'run.log']
        assert manifest['exit_code'] == 0
        assert manifest['config_hash'].startswith(run_dir.name.split('_')[1])
        assert RunManager(str(tmp_path)).verify_run(run_dir.name)['ok']

        doc = json.loads((run_dir / 'solution.json').read_text())
        assert doc['commutator_defect']['unrestricted'] == pytest.approx(3.0)
        assert doc['solutions'][0]['residual_norm'] <= 1e-3
        rho = pd.read_csv(run_dir / 'density_matrix.csv')
        assert rho['re'][rho['row'] == rho['col']].sum() == pytest.approx(1.0)

    def test_reproducible_across_out_dirs_and_threads(self, fixtures_dir, tmp_path):
        first, second = tmp_path / 'a', tmp_path / 'b'
        assert run_cli(fixtures_dir, 'solve', 'solve_small.toml', first) == cli.EXIT_OK
        assert run_cli(fixtures_dir, 'solve', 'solve_small.toml', second, '--threads', '3') == cli.EXIT_OK
        run_a, run_b = only_run_dir(first), only_run_dir(second)
        assert run_a.name == run_b.name
        for name in ('solution.json', 'density_matrix.csv', 'density_matrix.json'):
            assert (run_a / name).read_bytes() == (run_b / name).read_bytes()

    def test_seed_override_changes_run(self, fixtures_dir, tmp_path):
        run_cli(fixtures_dir, 'solve', 'zero_target.toml', tmp_path)
        run_cli(fixtures_dir, 'solve', 'zero_target.toml', tmp_path, '--seed', '12')
        assert len([p for p in tmp_path.iterdir() if p.is_dir()]) == 2

    def test_rerun_replaces_error(self, fixtures_dir, tmp_path, mocker):
        mocker.patch.object(cli.ExperimentRunner, 'run_solve', side_effect=RuntimeError('boom'))
        run_cli(fixtures_dir, 'solve', 'zero_target.toml', tmp_path)
        mocker.stopall()
        assert run_cli(fixtures_dir, 'solve', 'zero_target.toml', tmp_path) == cli.EXIT_OK
        run_dir = only_run_dir(tmp_path)
        assert not (run_dir / 'error.json').exists()
        assert json.loads((run_dir / 'manifest.json').read_text())['exit_code'] == cli.EXIT_OK


class TestOtherCommands:

    def test_sample_independent_of_threads(self, fixtures_dir, tmp_path):
        one, many = tmp_path / 'one', tmp_path / 'many'
        assert run_cli(fixtures_dir, 'sample', 'sample_small.toml', one, '--threads', '1') == cli.EXIT_OK
        assert run_cli(fixtures_dir, 'sample', 'sample_small.toml', many, '--threads', '4') == cli.EXIT_OK
        csv_one = (only_run_dir(one) / 'samples.csv').read_bytes()
        assert csv_one == (only_run_dir(many) / 'samples.csv').read_bytes()

        frame = pd.read_csv(only_run_dir(one) / 'samples.csv')
        assert frame.shape == (1000, 7)
        summary = json.loads((only_run_dir(one) / 'sample_summary.json').read_text())
        assert summary['expected_squared_amplitude'] == pytest.approx(1 / 3)

    def test_compare_rows(self, fixtures_dir, tmp_path):
        assert run_cli(fixtures_dir, 'compare', 'compare_small.toml', tmp_path) == cli.EXIT_OK
        run_dir = only_run_dir(tmp_path)
        frame = pd.read_csv(run_dir / 'comparison.csv')
        assert sorted(zip(frame['target_index'], frame['cutoff'])) == [(0, 1), (0, 2), (1, 1), (1, 2)]
        sweep = pd.read_csv(run_dir / 'cutoff_sweep.csv')
        assert len(sweep) == 4
        reports = json.loads((run_dir / 'comparison.json').read_text())['reports']
        assert 'not comparable' in reports[0]['entropy_note']

    def test_compare_plots(self, fixtures_dir, tmp_path, mocker):
        visualizer = mocker.patch('main.RunVisualizer')
        visualizer.return_value.create_all_plots.return_value = []
        assert run_cli(fixtures_dir, 'compare', 'compare_plots.toml', tmp_path) == cli.EXIT_OK
        visualizer.assert_called_once_with(str(only_run_dir(tmp_path)))

    def test_foliation_at_zero(self, fixtures_dir, tmp_path):
        assert run_cli(fixtures_dir, 'foliation', 'foliation_small.toml', tmp_path) == cli.EXIT_OK
        run_dir = only_run_dir(tmp_path)
        points = pd.read_csv(run_dir / 'surface_points.csv')
        assert len(points) >= 3
        assert (points['source'] == 'coherent').sum() == 1
        report = json.loads((run_dir / 'foliation.json').read_text())['reports'][0]
        assert report['coherent_minimizes_photon_number']
        assert report['constructed_log_weights_equal']
        assert RunManager(str(tmp_path)).verify_run(run_dir.name)['ok']


def test_parser_requires_config():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(['solve'])
