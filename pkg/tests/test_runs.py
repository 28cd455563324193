"""Tests for run manifests and the run manager."""

import json

import pytest

from analysis import RunManager, RunManifest, file_sha256, write_manifest


def make_run(runs_dir, name, finished_at='2026-01-01T00:00:00', files=None, exit_code=0):
    run_dir = runs_dir / name
    run_dir.mkdir(parents=True)
    paths = []
    for file_name, text in (files or {'result.json': '{"x": 1}\n', 'run.log': 'log\n'}).items():
        path = run_dir / file_name
        path.write_text(text)
        paths.append(path)
    manifest = RunManifest(command='solve', config_hash='ab' * 32, config={'command': 'solve'},
                           artifact_version='0.1.0', started_at=finished_at,
                           finished_at=finished_at, exit_code=exit_code)
    manifest.add_outputs(run_dir, paths)
    write_manifest(run_dir, manifest)
    return run_dir


class TestManifest:

    def test_outputs_recorded_in_order(self, tmp_path):
        run_dir = make_run(tmp_path, 'solve_1')
        doc = json.loads((run_dir / 'manifest.json').read_text())
        assert [o['path'] for o in doc['outputs']] == ['result.json', 'run.log']
        assert doc['outputs'][0]['sha256'] == file_sha256(run_dir / 'result.json')
        assert doc['outputs'][0]['bytes'] == len('{"x": 1}\n')
        assert not (run_dir / 'manifest.json.tmp').exists()


class TestRunManager:

    def test_verify_ok(self, tmp_path):
        make_run(tmp_path, 'solve_1')
        assert RunManager(str(tmp_path)).verify_run('solve_1') == {'ok': True, 'missing': [], 'mismatched': []}

    def test_verify_detects_tampering(self, tmp_path):
        run_dir = make_run(tmp_path, 'solve_1')
        (run_dir / 'result.json').write_text('{"x": 2}\n')
        (run_dir / 'run.log').unlink()
        result = RunManager(str(tmp_path)).verify_run(str(run_dir))
        assert not result['ok']
        assert result['mismatched'] == ['result.json']
        assert result['missing'] == ['run.log']

    def test_verify_without_manifest(self, tmp_path):
        (tmp_path / 'solve_x').mkdir()
        assert RunManager(str(tmp_path)).verify_run('solve_x')['missing'] == ['manifest.json']

    def test_list_runs(self, tmp_path):
        make_run(tmp_path, 'solve_1')
        failed = tmp_path / 'solve_2'
        failed.mkdir()
        (failed / 'error.json').write_text('{}')
        runs = RunManager(str(tmp_path)).list_runs()
        assert [(r['name'], r['complete'], r['failed']) for r in runs] == [
            ('solve_1', True, False),
            ('solve_2', False, True),
        ]
        assert runs[0]['outputs'] == 2

    def test_failed_run_with_manifest(self, tmp_path):
        make_run(tmp_path, 'solve_1', finished_at='2026-02-01T00:00:00')
        make_run(tmp_path, 'solve_2', finished_at='2026-03-01T00:00:00', exit_code=3,
                 files={'error.json': '{"exit_code": 3}\n', 'run.log': 'log\n'})
        manager = RunManager(str(tmp_path))
        runs = manager.list_runs()
        assert [(r['complete'], r['failed'], r['exit_code']) for r in runs] == [(True, False, 0), (True, True, 3)]
        assert manager.verify_run('solve_2')['ok']
        assert manager.get_latest_run() == str(tmp_path / 'solve_1')

    def test_latest_run(self, tmp_path):
        make_run(tmp_path, 'solve_a', finished_at='2026-02-01T00:00:00')
        newest = make_run(tmp_path, 'solve_b', finished_at='2026-03-01T00:00:00')
        assert RunManager(str(tmp_path)).get_latest_run() == str(newest)

    def test_missing_runs_dir(self, tmp_path):
        manager = RunManager(str(tmp_path / 'none'))
        assert manager.list_runs() == []
        assert manager.get_latest_run() is None

    def test_load_outputs(self, tmp_path):
        make_run(tmp_path, 'solve_1', files={'t.csv': 'a,b\n1,2\n', 'r.json': '{"k": 3}'})
        manager = RunManager(str(tmp_path))
        assert manager.load_json('solve_1', 'r.json') == {'k': 3}
        assert manager.load_table('solve_1', 't.csv')['b'].tolist() == [2]
        assert manager.load_json('solve_1', 'missing.json') is None
