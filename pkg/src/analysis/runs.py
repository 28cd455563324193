"""
Run Management Module
Run manifests, and listing, loading and verifying run directories.
"""

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def file_sha256(path: Path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """
    Record of one run: what was asked for and what was written.

    Attributes:
        command: Subcommand name
        config_hash: SHA-256 of the normalized config (threads and output directory excluded)
        config: Normalized config snapshot
        artifact_version: Package version that produced the run
        started_at / finished_at: ISO timestamps
        exit_code: Process exit code
        outputs: One entry per output file with its relative path, size and hash
    """

    command: str
    config_hash: str
    config: Dict[str, Any]
    artifact_version: str
    started_at: str
    finished_at: str = ""
    exit_code: int = 0
    outputs: List[Dict[str, Any]] = field(default_factory=list)

    def add_outputs(self, run_dir: Path, paths: Sequence[Path]):
        """Hash every output file, in the order written."""
        for path in paths:
            path = Path(path)
            self.outputs.append({
                'path': path.relative_to(run_dir).as_posix(),
                'bytes': path.stat().st_size,
                'sha256': file_sha256(path),
            })


def write_manifest(run_dir: Path, manifest: RunManifest) -> Path:
    """
    Write the manifest atomically: a temporary file renamed into place.

    Args:
        run_dir: Run directory
        manifest: Completed manifest

    Returns:
        Path to manifest.json
    """
    target = Path(run_dir) / MANIFEST_NAME
    tmp = target.with_suffix('.json.tmp')
    with open(tmp, 'w') as f:
        json.dump(asdict(manifest), f, indent=2, sort_keys=True)
        f.write('\n')
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, target)
    logger.info(f"Manifest written: {target}")
    return target


class RunManager:
    """
    Manage run directories.

    List runs, load their manifests and results, and verify output hashes.
    """

    def __init__(self, runs_dir: str = "runs"):
        """
        Initialize run manager.

        Args:
            runs_dir: Base directory containing run folders
        """
        self.runs_dir = Path(runs_dir)
        if not self.runs_dir.exists():
            logger.warning(f"Runs directory does not exist: {self.runs_dir}")

    def _resolve(self, run_name: str) -> Path:
        path = Path(run_name)
        return path if path.is_absolute() else self.runs_dir / run_name

    def list_runs(self) -> List[Dict[str, Any]]:
        """
        List every run directory, flagging runs without a manifest or with a nonzero exit code.

        Returns:
            List of run info dictionaries sorted by name
        """
        runs = []
        if not self.runs_dir.exists():
            return runs

        for run_path in sorted(self.runs_dir.iterdir()):
            if not run_path.is_dir():
                continue
            manifest = self.load_manifest(str(run_path))
            info = {
                'path': str(run_path),
                'name': run_path.name,
                'complete': manifest is not None,
                'failed': (manifest.get('exit_code', 0) != 0 if manifest is not None
                           else (run_path / 'error.json').exists()),
            }
            if manifest is not None:
                info['command'] = manifest.get('command')
                info['finished_at'] = manifest.get('finished_at', '')
                info['exit_code'] = manifest.get('exit_code')
                info['outputs'] = len(manifest.get('outputs', []))
            runs.append(info)
        return runs

    def load_manifest(self, run_name: str) -> Optional[Dict[str, Any]]:
        """
        Load a run's manifest.

        Args:
            run_name: Run folder name or full path

        Returns:
            Manifest dictionary, or None if missing or unreadable
        """
        manifest_path = self._resolve(run_name) / MANIFEST_NAME
        if not manifest_path.exists():
            return None
        try:
            with open(manifest_path, 'r') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            logger.error(f"Failed to load manifest for {run_name}: {e}")
            return None

    def load_json(self, run_name: str, file_name: str) -> Optional[Dict[str, Any]]:
        """Load one JSON output of a run."""
        path = self._resolve(run_name) / file_name
        if not path.exists():
            logger.error(f"Run output not found: {path}")
            return None
        with open(path, 'r') as f:
            return json.load(f)

    def load_table(self, run_name: str, file_name: str) -> Optional[pd.DataFrame]:
        """Load one CSV output of a run."""
        path = self._resolve(run_name) / file_name
        if not path.exists():
            logger.error(f"Run output not found: {path}")
            return None
        data = pd.read_csv(path)
        logger.info(f"Loaded {file_name} from {run_name}: {len(data)} rows")
        return data

    def verify_run(self, run_name: str) -> Dict[str, Any]:
        """
        Recompute the hash of every manifest output.

        Args:
            run_name: Run folder name or full path

        Returns:
            Dictionary with 'ok' and the lists of missing and mismatched files
        """
        run_path = self._resolve(run_name)
        manifest = self.load_manifest(run_name)
        if manifest is None:
            return {'ok': False, 'missing': [MANIFEST_NAME], 'mismatched': []}

        missing, mismatched = [], []
        for entry in manifest.get('outputs', []):
            path = run_path / entry['path']
            if not path.exists():
                missing.append(entry['path'])
            elif file_sha256(path) != entry['sha256']:
                mismatched.append(entry['path'])
        return {'ok': not missing and not mismatched, 'missing': missing, 'mismatched': mismatched}

    def get_latest_run(self) -> Optional[str]:
        """
        Get the most recently finished successful run.

        Returns:
            Path to latest run directory, or None if no runs
        """
        runs = [r for r in self.list_runs() if r['complete'] and not r['failed']]
        if not runs:
            return None
        runs.sort(key=lambda r: r.get('finished_at', ''), reverse=True)
        return runs[0]['path']

    def print_run_list(self):
        """Print formatted list of all runs."""
        runs = self.list_runs()

        if not runs:
            print("No runs found.")
            return

        print("\n" + "=" * 80)
        print("AVAILABLE RUNS")
        print("=" * 80)

        for i, run in enumerate(runs, 1):
            print(f"\n{i}. {run['name']}")
            if run['complete']:
                if run['failed']:
                    print("   Failed (see error.json)")
                print(f"   Command: {run['command']}")
                print(f"   Finished: {run['finished_at']}")
                print(f"   Exit code: {run['exit_code']}")
                print(f"   Outputs: {run['outputs']}")
            elif run['failed']:
                print("   Failed (see error.json)")
            else:
                print("   Incomplete: no manifest")

        print("\n" + "=" * 80)
