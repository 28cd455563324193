"""
Data Export Utilities
Write run results to JSON and CSV.

Complex numbers are written as [re, im] pairs, density matrices as nested
arrays of such pairs, and every CSV float with 17 significant digits so
values round-trip exactly.
"""

import json
import logging
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = '%.17g'
DENSITY_MATRIX_FORMAT = 'density-matrix/v1'


def to_serializable(obj: Any) -> Any:
    """
    Convert numpy values, complex numbers and dataclasses into plain JSON types.

    Args:
        obj: Nested structure

    Returns:
        Structure made of dicts, lists, str, int, float, bool and None
    """
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_serializable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_serializable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_serializable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_serializable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def density_matrix_to_json(rho: np.ndarray, stderr: Optional[np.ndarray] = None) -> Dict[str, Any]:
    """Nested [re, im] representation of a density matrix and its optional errors."""
    rho = np.asarray(rho, dtype=complex)
    doc: Dict[str, Any] = {
        'format': DENSITY_MATRIX_FORMAT,
        'dimension': int(rho.shape[0]),
        'rho': [[[float(z.real), float(z.imag)] for z in row] for row in rho],
    }
    if stderr is not None:
        doc['stderr'] = [[float(v) for v in row] for row in np.asarray(stderr, dtype=float)]
    return doc


def density_matrix_from_json(doc: Dict[str, Any]) -> np.ndarray:
    """Inverse of density_matrix_to_json."""
    if doc.get('format') != DENSITY_MATRIX_FORMAT:
        raise ValueError(f"Unsupported density matrix format: {doc.get('format')!r}")
    pairs = np.asarray(doc['rho'], dtype=float)
    return pairs[..., 0] + 1j * pairs[..., 1]


def density_matrix_frame(rho: np.ndarray, stderr: Optional[np.ndarray] = None) -> pd.DataFrame:
    """One row per entry: row, col, re, im (and stderr)."""
    rho = np.asarray(rho, dtype=complex)
    rows, cols = np.indices(rho.shape)
    data = {
        'row': rows.ravel(),
        'col': cols.ravel(),
        're': rho.real.ravel(),
        'im': rho.imag.ravel(),
    }
    if stderr is not None:
        data['stderr'] = np.asarray(stderr, dtype=float).ravel()
    return pd.DataFrame(data)


def points_frame(points: np.ndarray) -> pd.DataFrame:
    """Index column followed by interleaved real/imaginary components."""
    points = np.asarray(points, dtype=complex)
    data: Dict[str, Any] = {'index': np.arange(points.shape[0])}
    for k in range(points.shape[1]):
        data[f're_{k}'] = points[:, k].real
        data[f'im_{k}'] = points[:, k].imag
    return pd.DataFrame(data)


class ResultExporter:
    """
    Write result files into one run directory and remember what was written.

    Every path passed in is relative to the run directory; nothing is
    written outside it.
    """

    def __init__(self, run_dir: Union[str, Path]):
        """
        Initialize result exporter.

        Args:
            run_dir: Existing run directory
        """
        self.run_dir = Path(run_dir)
        self.written: List[Path] = []

    def _path(self, name: str) -> Path:
        path = (self.run_dir / name).resolve()
        if self.run_dir.resolve() not in path.parents:
            raise ValueError(f"Refusing to write outside the run directory: {name}")
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _record(self, path: Path) -> Path:
        if path not in self.written:
            self.written.append(path)
        logger.info(f"Wrote {path.name}")
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        """
        Write a JSON document with sorted keys.

        Args:
            name: File name inside the run directory
            payload: Any structure accepted by to_serializable

        Returns:
            Path written
        """
        path = self._path(name)
        with open(path, 'w') as f:
            json.dump(to_serializable(payload), f, indent=2, sort_keys=True, allow_nan=False)
            f.write('\n')
        return self._record(path)

    def write_frame(self, name: str, rows: Union[pd.DataFrame, Sequence[Dict[str, Any]]]) -> Path:
        """Write rows as CSV in full double precision."""
        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
        path = self._path(name)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        return self._record(path)

    def write_density_matrix(self, stem: str, rho: np.ndarray,
                             stderr: Optional[np.ndarray] = None) -> List[Path]:
        """Write <stem>.json and <stem>.csv."""
        return [
            self.write_json(f'{stem}.json', density_matrix_to_json(rho, stderr)),
            self.write_frame(f'{stem}.csv', density_matrix_frame(rho, stderr)),
        ]

    def write_points(self, name: str, points: np.ndarray) -> Path:
        """Write sampled points as CSV (.csv) or numpy binary (.npy)."""
        path = self._path(name)
        if path.suffix == '.npy':
            np.save(path, np.asarray(points, dtype=complex))
        else:
            points_frame(points).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        return self._record(path)
