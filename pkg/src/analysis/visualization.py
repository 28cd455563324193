"""
Run Visualization Module
Create plots from the files a run directory holds.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

logger = logging.getLogger(__name__)

# Set style
sns.set_style("darkgrid")
plt.rcParams['figure.figsize'] = (12, 6)
plt.rcParams['font.size'] = 10


class RunVisualizer:
    """
    Create visualizations from run outputs.

    Generates sample moment histograms, cutoff sweeps, foliation photon
    numbers and solver residual histories, whichever the run produced.
    """

    def __init__(self, run_dir: str):
        """
        Initialize visualizer.

        Args:
            run_dir: Path to a run directory
        """
        self.run_dir = Path(run_dir)
        if not self.run_dir.is_dir():
            raise FileNotFoundError(f"Run directory not found: {self.run_dir}")
        self.plots_dir = self.run_dir / "plots"

    def _load_json(self, name: str) -> Optional[dict]:
        path = self.run_dir / name
        if not path.exists():
            return None
        with open(path, 'r') as f:
            return json.load(f)

    def _save(self, fig, name: str) -> str:
        self.plots_dir.mkdir(exist_ok=True)
        output_path = self.plots_dir / name
        fig.savefig(output_path, dpi=150, bbox_inches='tight')
        logger.info(f"Saved plot: {output_path}")
        plt.close(fig)
        return str(output_path)

    def plot_sample_moments(self) -> Optional[str]:
        """
        Histogram of |component_k|^2 for sampled points; each has mean 1/d.

        Returns:
            Path to saved plot, or None if the run has no samples.csv
        """
        path = self.run_dir / "samples.csv"
        if not path.exists():
            return None
        data = pd.read_csv(path)
        dims = sum(1 for col in data.columns if col.startswith('re_'))
        weights = pd.DataFrame({
            f'|x_{k}|^2': data[f're_{k}'] ** 2 + data[f'im_{k}'] ** 2 for k in range(dims)
        }).melt(var_name='component', value_name='weight')

        fig, ax = plt.subplots(figsize=(10, 6))
        sns.histplot(data=weights, x='weight', hue='component', stat='density',
                     element='step', common_norm=False, ax=ax)
        ax.axvline(x=1.0 / dims, color='r', linestyle='--', alpha=0.6, label='1/d')
        ax.set_xlabel('Squared amplitude', fontsize=12)
        ax.set_title('Fubini-Study Sample Components', fontsize=14, fontweight='bold')
        return self._save(fig, "sample_moments.png")

    def plot_cutoff_sweep(self) -> Optional[str]:
        """
        Trace distance, fidelity and log Q against the cutoff.

        Returns:
            Path to saved plot, or None if the run has no comparison.csv
        """
        path = self.run_dir / "comparison.csv"
        if not path.exists():
            return None
        data = pd.read_csv(path)

        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(14, 6))
        for target, group in data.groupby('target_index'):
            ax1.errorbar(group['cutoff'], group['trace_distance'], yerr=group['trace_distance_stderr'],
                         fmt='o-', capsize=4, label=f'Trace distance (target {target})')
            ax1.errorbar(group['cutoff'], 1.0 - group['fidelity'], yerr=group['fidelity_stderr'],
                         fmt='s--', capsize=4, label=f'1 - fidelity (target {target})')
        ax1.set_xlabel('Cutoff N', fontsize=12)
        ax1.set_ylabel('Distance', fontsize=12)
        ax1.set_title('Ensemble vs Operator State', fontsize=14, fontweight='bold')
        ax1.legend()

        for target, group in data.groupby('target_index'):
            ax2.plot(group['cutoff'], group['log_q'], 'o-', label=f'log Q (target {target})')
            ax2.plot(group['cutoff'], group['log_z'], 's--', label=f'log Z (target {target})')
        ax2.set_xlabel('Cutoff N', fontsize=12)
        ax2.set_title('Normalizers vs Cutoff', fontsize=14, fontweight='bold')
        ax2.legend()

        plt.tight_layout()
        return self._save(fig, "cutoff_sweep.png")

    def plot_foliation(self) -> Optional[str]:
        """
        Mean photon numbers of level-surface points, coherent point marked.

        Returns:
            Path to saved plot, or None if the run has no foliation.json
        """
        doc = self._load_json("foliation.json")
        if doc is None:
            return None
        points = pd.concat(
            [pd.DataFrame(r['points']).assign(target=i) for i, r in enumerate(doc['reports'])],
            ignore_index=True
        )

        fig, ax = plt.subplots(figsize=(10, 6))
        sns.stripplot(data=points, x='source', y='photon_number', hue='target', ax=ax, alpha=0.7)
        coherent = points.loc[points['source'] == 'coherent', 'photon_number']
        for value in coherent:
            ax.axhline(y=float(value), color='r', linestyle='--', alpha=0.6)
        ax.set_ylabel('Mean photon number', fontsize=12)
        ax.set_title('Level Surface Photon Numbers', fontsize=14, fontweight='bold')
        return self._save(fig, "foliation_photon_numbers.png")

    def plot_residual_history(self) -> Optional[str]:
        """
        Solver residual per iteration on a log scale.

        Returns:
            Path to saved plot, or None if the run has no solution.json
        """
        solution = self._load_json("solution.json")
        if solution is None:
            return None

        fig, ax = plt.subplots(figsize=(10, 6))
        for i, sol in enumerate(solution.get('solutions', [])):
            history = np.asarray(sol['mc_diagnostics']['residual_history'], dtype=float)
            ax.semilogy(np.arange(history.size), np.maximum(history, 1e-300), 'o-', label=f'target {i}')
        ax.set_xlabel('Iteration', fontsize=12)
        ax.set_ylabel('|achieved - target|', fontsize=12)
        ax.set_title('Dual Solver Residual', fontsize=14, fontweight='bold')
        ax.legend()
        return self._save(fig, "residual_history.png")

    def create_all_plots(self) -> List[str]:
        """Generate every plot the run's outputs support."""
        plots_created = []
        for plot in (self.plot_sample_moments, self.plot_cutoff_sweep,
                     self.plot_foliation, self.plot_residual_history):
            try:
                path = plot()
                if path:
                    plots_created.append(path)
            except Exception as e:
                logger.warning(f"{plot.__name__} failed: {e}")

        logger.info(f"Created {len(plots_created)} plots in {self.plots_dir}")
        return plots_created
