"""
Analysis modules for the Fock-space max-entropy toolkit.

Provides the construction comparison, run management and visualization tools.
"""

from .comparison import ComparisonReport, ComparisonRow, compare_constructions
from .runs import RunManager, RunManifest, write_manifest, file_sha256
from .visualization import RunVisualizer

__all__ = [
    'ComparisonReport',
    'ComparisonRow',
    'compare_constructions',
    'RunManager',
    'RunManifest',
    'write_manifest',
    'file_sha256',
    'RunVisualizer',
]
