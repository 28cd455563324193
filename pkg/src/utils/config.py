"""
Configuration Module
Load and validate experiment configurations (TOML, JSON or YAML) and system settings.

Every experiment config is validated in full before any computation runs;
unknown sections or keys are rejected.
"""

import hashlib
import json
import logging
import sys
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

logger = logging.getLogger(__name__)

COMMANDS = ('solve', 'compare', 'foliation', 'sample')
MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by the ensemble and operator-state solvers."""

    tolerance: float = 1e-3
    max_iters: int = 50
    mu_cap: float = 50.0
    ess_threshold: float = 0.01
    ridge: float = 1e-10
    condition_cap: float = 1e8
    jackknife_blocks: int = 20
    line_search_steps: int = 30
    operator_tolerance: float = 1e-8
    fd_step: float = 1e-5
    seed: int = 0
    count: int = 100_000
    threads: int = 1
    chunk_size: int = 4096

    def __post_init__(self):
        _check(self.tolerance > 0, "solver.tolerance must be positive")
        _check(self.max_iters >= 1, "solver.max_iters must be >= 1")
        _check(self.mu_cap > 0, "solver.mu_cap must be positive")
        _check(0 < self.ess_threshold <= 1, "solver.ess_threshold must be a fraction in (0, 1]")
        _check(self.ridge >= 0, "solver.ridge must be non-negative")
        _check(self.condition_cap > 1, "solver.condition_cap must exceed 1")
        _check(self.jackknife_blocks >= 2, "solver.jackknife_blocks must be >= 2")
        _check(self.line_search_steps >= 1, "solver.line_search_steps must be >= 1")
        _check(self.operator_tolerance > 0, "solver.operator_tolerance must be positive")
        _check(self.fd_step > 0, "solver.fd_step must be positive")
        _check(0 <= self.seed <= MAX_SEED, "seed must be an unsigned 64-bit integer")
        _check(self.count >= 1, "sampling.count must be >= 1")
        _check(self.threads >= 1, "sampling.threads must be >= 1")
        _check(self.chunk_size >= 1, "sampling.chunk_size must be >= 1")

    def ess_floor(self, count: int) -> float:
        """Absolute ESS threshold for a batch of `count` points."""
        return self.ess_threshold * count


@dataclass(frozen=True)
class SpaceSection:
    modes: int
    cutoff: int
    max_dimension: int = 5000

    def __post_init__(self):
        _check(self.modes >= 1, "space.modes must be >= 1")
        _check(self.cutoff >= 0, "space.cutoff must be >= 0")
        _check(self.max_dimension >= 1, "space.max_dimension must be >= 1")


@dataclass(frozen=True)
class SamplingSection:
    seed: int
    count: int
    threads: int = 1
    chunk_size: int = 4096

    def __post_init__(self):
        _check(0 <= self.seed <= MAX_SEED, "sampling.seed must be an unsigned 64-bit integer")
        _check(self.count >= 1, "sampling.count must be >= 1")
        _check(self.threads >= 1, "sampling.threads must be >= 1")
        _check(self.chunk_size >= 1, "sampling.chunk_size must be >= 1")


@dataclass(frozen=True)
class SolverSection:
    tolerance: float = 1e-3
    max_iters: int = 50
    mu_cap: float = 50.0
    ess_threshold: float = 0.01
    ridge: float = 1e-10
    condition_cap: float = 1e8
    jackknife_blocks: int = 20
    line_search_steps: int = 30
    operator_tolerance: float = 1e-8
    fd_step: float = 1e-5


@dataclass(frozen=True)
class TargetSection:
    fields: list


@dataclass(frozen=True)
class CompareSection:
    cutoffs: list = field(default_factory=list)


@dataclass(frozen=True)
class FoliationSection:
    count: int = 50
    test_mus: int = 5
    acceptance: float = 1e-8

    def __post_init__(self):
        _check(self.count >= 1, "foliation.count must be >= 1")
        _check(self.test_mus >= 1, "foliation.test_mus must be >= 1")
        _check(self.acceptance > 0, "foliation.acceptance must be positive")


@dataclass(frozen=True)
class SampleSection:
    dimension: int = 0

    def __post_init__(self):
        _check(self.dimension == 0 or self.dimension >= 2, "sample.dimension must be >= 2")


@dataclass(frozen=True)
class OutputSection:
    directory: str = "runs"
    plots: bool = False


SECTIONS = {
    'space': SpaceSection,
    'sampling': SamplingSection,
    'solver': SolverSection,
    'target': TargetSection,
    'compare': CompareSection,
    'foliation': FoliationSection,
    'sample': SampleSection,
    'output': OutputSection,
}

REQUIRED_SECTIONS = {
    'solve': ('space', 'sampling', 'target'),
    'compare': ('space', 'sampling', 'target'),
    'foliation': ('space', 'sampling', 'target'),
    'sample': ('sampling',),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated configuration for one CLI run.

    Attributes mirror the config file sections; `targets` holds the parsed
    complex target fields.
    """

    command: str
    space: Optional[SpaceSection]
    sampling: SamplingSection
    solver: SolverSection
    targets: Tuple[Tuple[complex, ...], ...]
    compare: CompareSection
    foliation: FoliationSection
    sample: SampleSection
    output: OutputSection
    raw: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any], command: str) -> 'ExperimentConfig':
        """
        Validate a raw config mapping for the given subcommand.

        Args:
            raw: Parsed config file contents
            command: One of solve, compare, foliation, sample

        Returns:
            ExperimentConfig

        Raises:
            ConfigError: On unknown sections/keys, missing keys, bad types or values
        """
        if command not in COMMANDS:
            raise ConfigError(f"Unknown command '{command}'")
        if not isinstance(raw, dict):
            raise ConfigError("Config root must be a mapping of sections")

        unknown = sorted(set(raw) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"Unknown config section(s): {', '.join(unknown)}")
        for name in REQUIRED_SECTIONS[command]:
            if name not in raw:
                raise ConfigError(f"Missing required section [{name}] for '{command}'")
        if command == 'sample' and 'space' not in raw and 'dimension' not in raw.get('sample', {}):
            raise ConfigError("'sample' needs either [space] or sample.dimension")

        sections = {name: _build_section(name, raw.get(name, {})) for name in SECTIONS
                    if name in raw or _has_defaults(SECTIONS[name])}

        SolverConfig(**asdict(sections['solver']))

        space = sections.get('space')
        targets: Tuple[Tuple[complex, ...], ...] = ()
        if 'target' in sections:
            targets = _parse_targets(sections['target'].fields, space.modes if space else 1)

        compare = sections['compare']
        if space is not None:
            cutoffs = compare.cutoffs or [space.cutoff, space.cutoff + 2]
            for c in cutoffs:
                _check(isinstance(c, int) and not isinstance(c, bool) and c >= 0,
                       "compare.cutoffs must be non-negative integers")
            compare = CompareSection(cutoffs=list(cutoffs))

        return cls(
            command=command,
            space=space,
            sampling=sections['sampling'],
            solver=sections['solver'],
            targets=targets,
            compare=compare,
            foliation=sections['foliation'],
            sample=sections['sample'],
            output=sections['output'],
            raw=raw,
        )

    def with_overrides(self, seed: Optional[int] = None, threads: Optional[int] = None,
                       out: Optional[str] = None) -> 'ExperimentConfig':
        """Apply CLI overrides and re-validate the touched sections."""
        sampling = self.sampling
        if seed is not None:
            sampling = replace(sampling, seed=seed)
        if threads is not None:
            sampling = replace(sampling, threads=threads)
        output = replace(self.output, directory=out) if out is not None else self.output
        return replace(self, sampling=sampling, output=output)

    def solver_config(self) -> SolverConfig:
        """Merge solver and sampling sections into a SolverConfig."""
        return SolverConfig(
            seed=self.sampling.seed,
            count=self.sampling.count,
            threads=self.sampling.threads,
            chunk_size=self.sampling.chunk_size,
            **asdict(self.solver),
        )

    def snapshot(self) -> Dict[str, Any]:
        """Normalized, JSON-serializable view of the validated config."""
        snap = {
            'command': self.command,
            'sampling': asdict(self.sampling),
            'solver': asdict(self.solver),
            'targets': [[[z.real, z.imag] for z in t] for t in self.targets],
            'compare': asdict(self.compare),
            'foliation': asdict(self.foliation),
            'sample': asdict(self.sample),
            'output': asdict(self.output),
        }
        if self.space is not None:
            snap['space'] = asdict(self.space)
        return snap

    def config_hash(self) -> str:
        """SHA-256 of the snapshot, ignoring settings that never change the run's outputs."""
        snap = self.snapshot()
        snap['sampling'] = {k: v for k, v in snap['sampling'].items() if k != 'threads'}
        # Only the directory is result-neutral; plots add files to the run.
        snap['output'] = {'plots': self.output.plots}
        payload = json.dumps(snap, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def _check(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def _has_defaults(section_cls) -> bool:
    return all(f.default is not MISSING or f.default_factory is not MISSING
               for f in fields(section_cls))


def _build_section(name: str, values: Any):
    section_cls = SECTIONS[name]
    if not isinstance(values, dict):
        raise ConfigError(f"Section [{name}] must be a table")

    known = {f.name: f for f in fields(section_cls)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"Unknown key(s) in [{name}]: {', '.join(unknown)}")

    kwargs = {}
    for key, spec in known.items():
        if key not in values:
            if spec.default is MISSING and spec.default_factory is MISSING:
                raise ConfigError(f"Missing required key '{name}.{key}'")
            continue
        kwargs[key] = _coerce(f"{name}.{key}", values[key], spec.type)
    return section_cls(**kwargs)


def _coerce(key: str, value: Any, expected: type) -> Any:
    if expected is bool:
        _check(isinstance(value, bool), f"'{key}' must be a boolean")
        return value
    if expected is int:
        _check(isinstance(value, int) and not isinstance(value, bool), f"'{key}' must be an integer")
        return value
    if expected is float:
        _check(isinstance(value, (int, float)) and not isinstance(value, bool), f"'{key}' must be a number")
        _check(np.isfinite(value), f"'{key}' must be finite")
        return float(value)
    if expected is str:
        _check(isinstance(value, str), f"'{key}' must be a string")
        return value
    _check(isinstance(value, list), f"'{key}' must be a list")
    return value


def _parse_component(value: Any) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        z = complex(value)
    elif (isinstance(value, list) and len(value) == 2
          and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        z = complex(value[0], value[1])
    else:
        raise ConfigError(f"Field component {value!r} must be a number or a [re, im] pair")
    _check(np.isfinite(z.real) and np.isfinite(z.imag), "target field components must be finite")
    return z


def _parse_targets(entries: List[Any], modes: int) -> Tuple[Tuple[complex, ...], ...]:
    _check(len(entries) > 0, "target.fields must list at least one target")
    targets = []
    for entry in entries:
        if modes == 1 and not isinstance(entry, list):
            targets.append((_parse_component(entry),))
            continue
        _check(isinstance(entry, list) and len(entry) == modes,
               f"each target must list {modes} per-mode value(s)")
        targets.append(tuple(_parse_component(v) for v in entry))
    return tuple(targets)


def read_config_file(path: str) -> Dict[str, Any]:
    """
    Parse a TOML, JSON or YAML config file into a dictionary.

    Args:
        path: Config file path; format chosen by suffix

    Returns:
        Raw configuration mapping

    Raises:
        ConfigError: If the file is missing or malformed
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"Configuration file not found: {config_path}")

    suffix = config_path.suffix.lower()
    try:
        if suffix == '.toml':
            with open(config_path, 'rb') as f:
                return tomllib.load(f)
        if suffix == '.json':
            with open(config_path, 'r') as f:
                return json.load(f)
        if suffix in ('.yaml', '.yml'):
            with open(config_path, 'r') as f:
                return yaml.safe_load(f) or {}
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Invalid config syntax in {config_path.name}: {e}") from e
    raise ConfigError(f"Unsupported config format '{suffix}' (use .toml, .json or .yaml)")


def load_experiment_config(path: str, command: str) -> ExperimentConfig:
    """Read and validate an experiment config for one subcommand."""
    config = ExperimentConfig.from_dict(read_config_file(path), command)
    logger.debug(f"Loaded {command} config from {path}")
    return config


def load_system_config(config_dir: str = "config") -> Dict[str, Any]:
    """
    Load system-level settings (version, logging, output defaults).

    Args:
        config_dir: Directory containing system_config.json

    Returns:
        Settings dictionary (empty if the file is missing or invalid)
    """
    config_path = Path(config_dir) / "system_config.json"
    try:
        with open(config_path, 'r') as f:
            return json.load(f)
    except FileNotFoundError:
        logger.warning(f"System configuration not found: {config_path}")
        return {}
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in {config_path.name}: {e}")
        return {}
