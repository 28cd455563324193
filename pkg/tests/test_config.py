"""Tests for experiment configuration loading and validation."""

import json

import pytest

from utils import ConfigError, ExperimentConfig, SolverConfig, load_experiment_config, load_system_config
from utils.config import read_config_file


def solve_raw(**overrides):
    raw = {
        'space': {'modes': 1, 'cutoff': 2},
        'sampling': {'seed': 1, 'count': 1000},
        'target': {'fields': [[0.2]]},
    }
    raw.update(overrides)
    return raw


class TestFromDict:

    def test_minimal_solve(self):
        config = ExperimentConfig.from_dict(solve_raw(), 'solve')
        assert config.targets == ((0.2 + 0j,),)
        assert config.solver.tolerance == 1e-3
        assert config.output.directory == 'runs'
        assert config.compare.cutoffs == [2, 4]

    def test_complex_pairs(self):
        raw = solve_raw(space={'modes': 2, 'cutoff': 2}, target={'fields': [[0.1, [0.0, -0.3]]]})
        config = ExperimentConfig.from_dict(raw, 'solve')
        assert config.targets == ((0.1 + 0j, -0.3j),)

    def test_scalar_target_for_one_mode(self):
        config = ExperimentConfig.from_dict(solve_raw(target={'fields': [0.4, [[0.1, 0.1]]]}), 'solve')
        assert config.targets == ((0.4 + 0j,), (0.1 + 0.1j,))

    @pytest.mark.parametrize("raw,message", [
        (solve_raw(extra={}), "Unknown config section"),
        (solve_raw(solver={'tolerence': 1e-3}), "Unknown key"),
        (solve_raw(space={'modes': 1}), "Missing required key 'space.cutoff'"),
        (solve_raw(sampling={'seed': -1, 'count': 10}), "unsigned 64-bit"),
        (solve_raw(sampling={'seed': 1, 'count': 10.5}), "must be an integer"),
        (solve_raw(sampling={'seed': True, 'count': 10}), "must be an integer"),
        (solve_raw(solver={'ess_threshold': 1.5}), "ess_threshold"),
        (solve_raw(target={'fields': []}), "at least one target"),
        (solve_raw(target={'fields': [[0.1, 0.2]]}), "1 per-mode"),
        (solve_raw(target={'fields': [["x"]]}), "must be a number"),
        (solve_raw(compare={'cutoffs': [-1]}), "non-negative"),
    ])
    def test_rejections(self, raw, message):
        with pytest.raises(ConfigError, match=message):
            ExperimentConfig.from_dict(raw, 'solve')

    def test_missing_section(self):
        raw = solve_raw()
        del raw['target']
        with pytest.raises(ConfigError, match=r"Missing required section \[target\]"):
            ExperimentConfig.from_dict(raw, 'solve')

    def test_sample_needs_space_or_dimension(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({'sampling': {'seed': 0, 'count': 5}}, 'sample')
        config = ExperimentConfig.from_dict({'sampling': {'seed': 0, 'count': 5}, 'sample': {'dimension': 3}},
                                            'sample')
        assert config.space is None

    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(solve_raw(), 'serve')


class TestOverridesAndHash:

    def test_overrides(self):
        config = ExperimentConfig.from_dict(solve_raw(), 'solve').with_overrides(seed=9, threads=4, out='elsewhere')
        assert config.sampling.seed == 9
        assert config.sampling.threads == 4
        assert config.output.directory == 'elsewhere'
        assert config.solver_config().seed == 9

    def test_bad_override(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(solve_raw(), 'solve').with_overrides(seed=2 ** 64)

    def test_hash_ignores_threads_and_directory(self):
        base = ExperimentConfig.from_dict(solve_raw(), 'solve')
        assert base.config_hash() == base.with_overrides(threads=8, out='x').config_hash()
        assert base.config_hash() != base.with_overrides(seed=2).config_hash()

    def test_hash_tracks_plot_setting(self):
        base = ExperimentConfig.from_dict(solve_raw(), 'solve')
        with_plots = ExperimentConfig.from_dict(solve_raw(output={'plots': True}), 'solve')
        assert base.config_hash() != with_plots.config_hash()
        assert with_plots.snapshot()['output']['plots'] is True

    def test_snapshot_is_json(self):
        snap = ExperimentConfig.from_dict(solve_raw(), 'solve').snapshot()
        assert json.loads(json.dumps(snap))['targets'] == [[[0.2, 0.0]]]


class TestSolverConfig:

    def test_defaults(self):
        cfg = SolverConfig()
        assert cfg.ess_floor(1000) == pytest.approx(10.0)

    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            SolverConfig(max_iters=0)


class TestFiles:

    def test_formats_agree(self, tmp_path):
        raw = solve_raw()
        (tmp_path / 'c.json').write_text(json.dumps(raw))
        (tmp_path / 'c.yaml').write_text(
            "space: {modes: 1, cutoff: 2}\nsampling: {seed: 1, count: 1000}\ntarget: {fields: [[0.2]]}\n")
        (tmp_path / 'c.toml').write_text(
            "[space]\nmodes = 1\ncutoff = 2\n[sampling]\nseed = 1\ncount = 1000\n[target]\nfields = [[0.2]]\n")
        hashes = {load_experiment_config(str(tmp_path / name), 'solve').config_hash()
                  for name in ('c.json', 'c.yaml', 'c.toml')}
        assert len(hashes) == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            read_config_file(str(tmp_path / 'nope.toml'))

    def test_bad_syntax(self, tmp_path):
        path = tmp_path / 'bad.toml'
        path.write_text("[space\nmodes = 1\n")
        with pytest.raises(ConfigError, match="Invalid config syntax"):
            read_config_file(str(path))

    def test_unsupported_suffix(self, tmp_path):
        path = tmp_path / 'c.ini'
        path.write_text("x")
        with pytest.raises(ConfigError, match="Unsupported"):
            read_config_file(str(path))

    def test_example_configs_validate(self, fixtures_dir):
        config_dir = fixtures_dir.parent.parent / 'config'
        for command in ('solve', 'compare', 'foliation', 'sample'):
            load_experiment_config(str(config_dir / f'{command}.toml'), command)
        load_experiment_config(str(config_dir / 'solve.yaml'), 'solve')
        load_experiment_config(str(config_dir / 'sample.json'), 'sample')

    def test_system_config(self, fixtures_dir, tmp_path):
        settings = load_system_config(str(fixtures_dir.parent.parent / 'config'))
        assert settings['logging']['level'] == 'INFO'
        assert load_system_config(str(tmp_path)) == {}
