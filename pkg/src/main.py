"""
Experiment Runner
Validates an experiment config, runs one subcommand and writes a run
directory holding the results, run.log and a manifest.

Usage:
    python src/main.py solve --config config/solve.toml [--out runs] [--seed N] [--threads N]
    python src/main.py compare|foliation|sample --config <path> ...
"""

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from analysis import RunManifest, RunVisualizer, compare_constructions, write_manifest
from ensemble import (
    cutoff_sweep,
    density_matrix_mc,
    foliation_probe,
    solve_chemical_potential,
    von_neumann_entropy,
)
from hilbert import build_basis, commutator_defect, ladder_matrices, sample_uniform
from utils import (
    CapacityError,
    ConfigError,
    DegenerateWeightsError,
    ExperimentConfig,
    FieldEnsembleError,
    InfeasibleTargetError,
    NonConvergenceError,
    ResultExporter,
    load_experiment_config,
    load_system_config,
    to_serializable,
)
from utils.config import COMMANDS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_ESS_COLLAPSE = 4
EXIT_NON_CONVERGENCE = 5

# Checked in order; EssCollapseError is a DegenerateWeightsError.
EXIT_CODES = (
    (ConfigError, EXIT_BAD_CONFIG),
    (CapacityError, EXIT_BAD_CONFIG),
    (InfeasibleTargetError, EXIT_INFEASIBLE),
    (DegenerateWeightsError, EXIT_ESS_COLLAPSE),
    (NonConvergenceError, EXIT_NON_CONVERGENCE),
)

DEFAULT_CONFIG_DIR = Path(__file__).parent.parent / "config"
RUN_LOG = "run.log"


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code."""
    for error_type, code in EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return EXIT_FAILURE


def error_payload(error: BaseException, exit_code: int) -> Dict[str, Any]:
    """Machine-readable description of a failed run."""
    details = error.details() if isinstance(error, FieldEnsembleError) else {}
    return {
        'error': type(error).__name__,
        'exit_code': exit_code,
        'message': str(error),
        'details': details,
    }


def _pairs(values) -> List[List[float]]:
    return [[float(complex(z).real), float(complex(z).imag)] for z in values]


class ExperimentRunner:
    """
    Run one subcommand against a validated experiment config.

    The config is validated (and the Fock space sized) before any directory
    is created. Outputs go to `<output.directory>/<command>_<hash12>`, the
    manifest last.
    """

    def __init__(self, config: ExperimentConfig, config_dir: str = str(DEFAULT_CONFIG_DIR)):
        """
        Initialize experiment runner.

        Args:
            config: Validated experiment configuration
            config_dir: Directory containing system_config.json
        """
        self.config = config
        self.config_dir = Path(config_dir)
        self.system_config = load_system_config(str(self.config_dir))
        self.version = self.system_config.get('system', {}).get('version', '0.0.0')

        self.run_dir: Optional[Path] = None
        self.exporter: Optional[ResultExporter] = None
        self._handlers: List[logging.Handler] = []
        self._file_handler: Optional[logging.FileHandler] = None

        self._commands: Dict[str, Callable[[], None]] = {
            'solve': self.run_solve,
            'compare': self.run_compare,
            'foliation': self.run_foliation,
            'sample': self.run_sample,
        }

        self._setup_logging()

    def _setup_logging(self):
        """Configure the console handler from system_config.json."""
        log_config = self.system_config.get('logging', {})
        self.log_level = getattr(logging, log_config.get('level', 'INFO'))
        self.formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        if log_config.get('console_output', True):
            console = logging.StreamHandler()
            console.setLevel(self.log_level)
            console.setFormatter(self.formatter)
            logging.getLogger().addHandler(console)
            self._handlers.append(console)

        logging.getLogger().setLevel(self.log_level)

    def _attach_run_log(self):
        """Write run.log inside the run directory."""
        if not self.system_config.get('logging', {}).get('file_output', True):
            return
        file_handler = logging.FileHandler(self.run_dir / RUN_LOG, mode='w')
        file_handler.setLevel(self.log_level)
        file_handler.setFormatter(self.formatter)
        logging.getLogger().addHandler(file_handler)
        self._handlers.append(file_handler)
        self._file_handler = file_handler

    def _close_run_log(self):
        if self._file_handler is not None:
            logging.getLogger().removeHandler(self._file_handler)
            self._file_handler.close()
            self._handlers.remove(self._file_handler)
            self._file_handler = None

    def close(self):
        """Detach every handler this runner installed."""
        self._close_run_log()
        for handler in self._handlers:
            logging.getLogger().removeHandler(handler)
            handler.close()
        self._handlers.clear()

    def preflight(self):
        """
        Size every Fock space the command needs.

        Raises:
            ConfigError: If a space is too small to sample
            CapacityError: If a space exceeds space.max_dimension
        """
        command = self.config.command
        if command == 'sample' and self.config.sample.dimension:
            return
        space = self.config.space
        cutoffs = self.config.compare.cutoffs if command == 'compare' else [space.cutoff]
        for cutoff in cutoffs:
            dimension = build_basis(space.modes, cutoff, space.max_dimension).dimension
            if dimension < 2:
                raise ConfigError(f"Fock space with {space.modes} mode(s) and cutoff {cutoff} "
                                  f"has dimension {dimension}; need at least 2")

    @property
    def run_name(self) -> str:
        return f"{self.config.command}_{self.config.config_hash()[:12]}"

    def create_run_dir(self) -> Path:
        """
        Create (or reuse) the run directory and clear any previous verdict.

        Returns:
            Path to the run directory
        """
        self.run_dir = Path(self.config.output.directory) / self.run_name
        if self.run_dir.exists():
            logger.info(f"Reusing run directory: {self.run_dir}")
        self.run_dir.mkdir(parents=True, exist_ok=True)
        for stale in ('manifest.json', 'error.json'):
            (self.run_dir / stale).unlink(missing_ok=True)

        self.exporter = ResultExporter(self.run_dir)
        self._attach_run_log()
        logger.info(f"Created run: {self.run_dir}")
        return self.run_dir

    def run(self) -> int:
        """
        Execute the configured command.

        Returns:
            Process exit code
        """
        started_at = datetime.now().isoformat(timespec='seconds')
        self.create_run_dir()

        try:
            self._commands[self.config.command]()
        except Exception as e:
            code = exit_code_for(e)
            if isinstance(e, FieldEnsembleError):
                logger.error(f"{type(e).__name__}: {e}")
            else:
                logger.exception(f"Unexpected failure: {e}")
            self.exporter.write_json('error.json', error_payload(e, code))
            self._write_manifest(started_at, code)
            return code

        if self.config.output.plots:
            plots = RunVisualizer(str(self.run_dir)).create_all_plots()
            self.exporter.written.extend(Path(p).resolve() for p in plots)

        self._write_manifest(started_at, EXIT_OK)
        return EXIT_OK

    def _write_manifest(self, started_at: str, exit_code: int):
        """Close run.log and record every output, error.json included, in the manifest."""
        log_path = self.run_dir / RUN_LOG
        self._close_run_log()

        manifest = RunManifest(
            command=self.config.command,
            config_hash=self.config.config_hash(),
            config=self.config.snapshot(),
            artifact_version=self.version,
            started_at=started_at,
        )
        outputs = list(self.exporter.written)
        if log_path.exists():
            outputs.append(log_path.resolve())
        manifest.add_outputs(self.run_dir.resolve(), outputs)
        manifest.finished_at = datetime.now().isoformat(timespec='seconds')
        manifest.exit_code = exit_code
        write_manifest(self.run_dir, manifest)

    def _space(self, cutoff: Optional[int] = None):
        space_cfg = self.config.space
        space = build_basis(space_cfg.modes, space_cfg.cutoff if cutoff is None else cutoff,
                            space_cfg.max_dimension)
        return space, ladder_matrices(space)

    def run_solve(self):
        """Solve every target; write solution.json and one density matrix per target."""
        cfg = self.config.solver_config()
        space, ops = self._space()
        batch = sample_uniform(space.dimension, cfg.seed, cfg.count, workers=cfg.threads,
                               chunk_size=cfg.chunk_size)
        logger.info(f"Sampled {batch.count} points in dimension {space.dimension}")

        single = len(self.config.targets) == 1
        solutions = []
        for i, target in enumerate(self.config.targets):
            sol = solve_chemical_potential(target, cfg, batch, ops)
            rho = density_matrix_mc(sol.gibbs(ops).weighted(batch), cfg.ess_threshold,
                                    cfg.jackknife_blocks)
            stem = 'density_matrix' if single else f'density_matrix_{i}'
            self.exporter.write_density_matrix(stem, rho.rho, rho.stderr)

            entry = sol.to_dict()
            entry['density_matrix'] = f'{stem}.json'
            entry['von_neumann_entropy'] = von_neumann_entropy(rho)
            entry['mean_photon_number'] = float(np.real(rho.expectation(ops.total_number_operator())))
            solutions.append(entry)
            logger.info(f"Target {i}: mu = {np.round(sol.mu.mu, 6).tolist()}, entropy {sol.entropy:.6f}")

        defect = commutator_defect(ops, 0, 0)
        self.exporter.write_json('solution.json', {
            'space': {'modes': space.num_modes, 'cutoff': space.cutoff, 'dimension': space.dimension},
            'commutator_defect': {'restricted': defect.restricted, 'unrestricted': defect.unrestricted},
            'entropy_note': 'entropy is differential (relative to the uniform measure); '
                            'von_neumann_entropy is of the ensemble density matrix',
            'solutions': solutions,
        })

    def run_compare(self):
        """Compare both constructions per target and cutoff; sweep the operator state."""
        cfg = self.config.solver_config()
        space_cfg = self.config.space
        cutoffs = self.config.compare.cutoffs

        reports, rows, sweep_rows = [], [], []
        for i, target in enumerate(self.config.targets):
            report = compare_constructions(target, cfg, space_cfg.modes, cutoffs, space_cfg.max_dimension)
            reports.append(report.to_dict())
            rows.extend({'target_index': i, **row} for row in report.flat_rows())

            op_mu = report.rows[0].operator_mu
            for point in cutoff_sweep(op_mu, space_cfg.modes, cutoffs, space_cfg.max_dimension):
                sweep_row = {
                    'target_index': i,
                    'cutoff': point.cutoff,
                    'dimension': point.dimension,
                    'log_q': point.log_q,
                    'entropy': point.entropy,
                    'mean_photon_number': point.mean_photon_number,
                }
                for m, z in enumerate(point.field):
                    sweep_row[f'field_re_{m}'] = z.real
                    sweep_row[f'field_im_{m}'] = z.imag
                sweep_rows.append(sweep_row)

        self.exporter.write_json('comparison.json', {'reports': reports})
        self.exporter.write_frame('comparison.csv', rows)
        self.exporter.write_frame('cutoff_sweep.csv', sweep_rows)

    def run_foliation(self):
        """Probe the level surface of every target field."""
        space, ops = self._space()
        fol = self.config.foliation
        sampling = self.config.sampling

        reports, rows = [], []
        for i, target in enumerate(self.config.targets):
            report = foliation_probe(target, space, ops, count=fol.count, seed=sampling.seed,
                                     acceptance=fol.acceptance, test_mus=fol.test_mus,
                                     workers=sampling.threads)
            reports.append(report.to_dict())
            for point in report.points:
                row = {
                    'target_index': i,
                    'index': point.index,
                    'source': point.source,
                    'field_residual': point.field_residual,
                    'photon_number': point.photon_number,
                    'eigen_residual': point.eigen_residual,
                }
                for k, z in enumerate(point.representative):
                    row[f're_{k}'] = z.real
                    row[f'im_{k}'] = z.imag
                rows.append(row)
            logger.info(f"Target {i}: {len(report.points)} surface points, "
                        f"{len(report.failures)} rejected starts")

        self.exporter.write_json('foliation.json', {'reports': reports})
        self.exporter.write_frame('surface_points.csv', rows)

    def run_sample(self):
        """Dump a Fubini-Study-uniform batch as CSV and .npy, with a moment summary."""
        sampling = self.config.sampling
        d = self.config.sample.dimension or self._space()[0].dimension
        batch = sample_uniform(d, sampling.seed, sampling.count, workers=sampling.threads,
                               chunk_size=sampling.chunk_size)

        self.exporter.write_points('samples.csv', batch.points)
        self.exporter.write_points('samples.npy', batch.points)

        weights = np.abs(batch.points) ** 2
        self.exporter.write_json('sample_summary.json', {
            'dimension': d,
            'seed': batch.seed,
            'count': batch.count,
            'chunk_size': sampling.chunk_size,
            'mean_squared_amplitude': weights.mean(axis=0),
            'expected_squared_amplitude': 1.0 / d,
            'mean_representative': _pairs(batch.points.mean(axis=0)),
        })


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment."""
    parser = argparse.ArgumentParser(
        prog='fockmaxent',
        description='Maximum-entropy ensembles on projective Fock space'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)
    helps = {
        'solve': 'Solve for the chemical potential of each target field',
        'compare': 'Compare the ensemble and operator-exponential states across cutoffs',
        'foliation': 'Probe the level surfaces of the expectation map',
        'sample': 'Dump Fubini-Study-uniform samples',
    }
    for command in COMMANDS:
        sub = subparsers.add_parser(command, help=helps[command])
        sub.add_argument('--config', required=True, help='Experiment config (.toml, .json or .yaml)')
        sub.add_argument('--out', help='Output directory (overrides output.directory)')
        sub.add_argument('--seed', type=int, help='Unsigned 64-bit seed (overrides sampling.seed)')
        sub.add_argument('--threads', type=int, help='Worker threads (overrides sampling.threads)')
    return parser


def main(argv: Optional[List[str]] = None, config_dir: str = str(DEFAULT_CONFIG_DIR)) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)

    print("=" * 60)
    print(f"Fock-Space Max-Entropy Toolkit: {args.command}")
    print("=" * 60)

    try:
        config = load_experiment_config(args.config, args.command)
        config = config.with_overrides(seed=args.seed, threads=args.threads, out=args.out)
        runner = ExperimentRunner(config, config_dir)
    except (ConfigError, CapacityError) as e:
        return _reject(e)

    try:
        runner.preflight()
    except (ConfigError, CapacityError) as e:
        runner.close()
        return _reject(e)

    try:
        code = runner.run()
    finally:
        runner.close()

    if code == EXIT_OK:
        print("\nRun complete!")
    else:
        print(f"\nRun failed with exit code {code} (see error.json)")
    print(f"Results in: {runner.run_dir}")
    return code


def _reject(e: FieldEnsembleError) -> int:
    """Report a config rejection on stderr; no directory has been created."""
    payload = error_payload(e, EXIT_BAD_CONFIG)
    print(json.dumps(to_serializable(payload), sort_keys=True), file=sys.stderr)
    return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
