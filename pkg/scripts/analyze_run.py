#!/usr/bin/env python3
"""
Run Analysis Script

Summarizes a run directory and generates:
- A verification of every output hash against the manifest
- A printed summary of the command's results
- All plots the run's outputs support
"""

import sys
import logging
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from analysis import RunManager, RunVisualizer

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def _complex(pair):
    return complex(pair[0], pair[1])


def print_solution(manager: RunManager, run_path: Path):
    doc = manager.load_json(str(run_path), 'solution.json')
    space = doc['space']
    print(f"  Space: {space['modes']} mode(s), cutoff {space['cutoff']}, dimension {space['dimension']}")
    print(f"  Commutator defect (unrestricted): {doc['commutator_defect']['unrestricted']:.3f}")
    for i, sol in enumerate(doc['solutions']):
        mu = [_complex(p) for p in sol['mu']]
        print(f"\n  Target {i}: {[_complex(p) for p in sol['target_field']]}")
        print(f"    mu: {[f'{z:.6f}' for z in mu]}")
        print(f"    Residual: {sol['residual_norm']:.3e} after {sol['iterations']} iterations")
        print(f"    log Z: {sol['log_z']:.6f} +/- {sol['log_z_stderr']:.2e}")
        print(f"    Differential entropy: {sol['entropy']:.6f}")
        print(f"    Von Neumann entropy: {sol['von_neumann_entropy']:.6f}")
        print(f"    ESS: {sol['mc_diagnostics']['ess']:.0f} of {sol['mc_diagnostics']['batch_count']}")


def print_comparison(manager: RunManager, run_path: Path):
    table = manager.load_table(str(run_path), 'comparison.csv')
    columns = ['target_index', 'cutoff', 'dimension', 'mu_difference', 'trace_distance',
               'trace_distance_stderr', 'fidelity', 'log_z', 'log_q']
    print(table[columns].to_string(index=False))


def print_foliation(manager: RunManager, run_path: Path):
    doc = manager.load_json(str(run_path), 'foliation.json')
    for i, report in enumerate(doc['reports']):
        photons = [p['photon_number'] for p in report['points']]
        print(f"\n  Target {i}: {len(report['points'])} surface points, {len(report['failures'])} rejected")
        print(f"    Photon numbers: min {min(photons):.4f}, max {max(photons):.4f}")
        print(f"    Coherent point minimal: {report['coherent_minimizes_photon_number']}")
        print(f"    Log weights constant: {report['log_weights_constant']}")
        print(f"    Constructed log weights equal: {report['constructed_log_weights_equal']}")


def print_sample(manager: RunManager, run_path: Path):
    doc = manager.load_json(str(run_path), 'sample_summary.json')
    print(f"  Dimension {doc['dimension']}, {doc['count']} points, seed {doc['seed']}")
    print(f"  Mean |x_k|^2: {[f'{v:.4f}' for v in doc['mean_squared_amplitude']]} "
          f"(expected {doc['expected_squared_amplitude']:.4f})")


SUMMARIES = {
    'solve': print_solution,
    'compare': print_comparison,
    'foliation': print_foliation,
    'sample': print_sample,
}


def analyze_run(run_dir: str, manager: RunManager) -> bool:
    """
    Verify, summarize and plot one run.

    Args:
        run_dir: Path to run directory
        manager: Run manager for the parent directory
    """
    run_path = Path(run_dir)

    if not run_path.exists():
        print(f"Error: Run directory not found: {run_dir}")
        return False

    manifest = manager.load_manifest(str(run_path))
    if manifest is None:
        print(f"Error: No manifest in run: {run_path}")
        return False

    print("\n" + "=" * 80)
    print(f"ANALYZING RUN: {run_path.name}")
    print("=" * 80)

    # 1. Verification
    print("\n[1/3] Verifying Outputs...")
    print("-" * 80)
    result = manager.verify_run(str(run_path))
    print(f"  {len(manifest['outputs'])} outputs, config hash {manifest['config_hash'][:12]}")
    if not result['ok']:
        for path in result['missing']:
            print(f"  MISSING: {path}")
        for path in result['mismatched']:
            print(f"  MODIFIED: {path}")
        return False
    print("  All hashes match")

    if manifest.get('exit_code', 0) != 0:
        error = manager.load_json(str(run_path), 'error.json') or {}
        print(f"\nRun failed: {error.get('error')} (exit {manifest['exit_code']}): {error.get('message')}")
        return False

    # 2. Summary
    print(f"\n[2/3] Summary ({manifest['command']})")
    print("-" * 80)
    try:
        SUMMARIES[manifest['command']](manager, run_path)
    except (KeyError, TypeError) as e:
        logger.error(f"Summary failed: {e}")
        return False

    # 3. Visualizations
    print("\n[3/3] Generating Visualizations...")
    print("-" * 80)
    plots = RunVisualizer(str(run_path)).create_all_plots()
    print(f"Created {len(plots)} plots")

    print("\n" + "=" * 80)
    print("ANALYSIS COMPLETE!")
    print("=" * 80)
    print(f"\nPlots saved to: {run_path / 'plots'}")
    print()
    return True


def main():
    """Main entry point."""
    runs_dir = "runs"
    if len(sys.argv) < 2:
        # No run specified - list available runs
        print("Usage: python analyze_run.py <run_directory>")
        manager = RunManager(runs_dir)
        manager.print_run_list()

        latest = manager.get_latest_run()
        if latest:
            response = input(f"\nAnalyze latest run? (y/n): ")
            if response.lower() == 'y':
                return 0 if analyze_run(latest, manager) else 1
        return 1

    run_dir = Path(sys.argv[1])
    manager = RunManager(str(run_dir.parent))
    return 0 if analyze_run(str(run_dir), manager) else 1


if __name__ == "__main__":
    sys.exit(main())
