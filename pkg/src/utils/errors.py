"""
Error Types
Exception hierarchy shared by the Fock-space, ensemble and CLI layers.

Library code raises these; only the CLI maps them to exit codes.
"""

from typing import Any, Dict, List, Optional


class FieldEnsembleError(Exception):
    """Base class for every error raised by this package."""

    def details(self) -> Dict[str, Any]:
        """Machine-readable context for error reports."""
        return {}


class ConfigError(FieldEnsembleError):
    """Experiment configuration failed schema validation."""


class CapacityError(FieldEnsembleError):
    """Truncated Fock space would exceed the configured dimension cap."""

    def __init__(self, dimension: int, max_dimension: int):
        self.dimension = dimension
        self.max_dimension = max_dimension
        super().__init__(
            f"Fock space dimension {dimension} exceeds cap {max_dimension}"
        )

    def details(self) -> Dict[str, Any]:
        return {'dimension': self.dimension, 'max_dimension': self.max_dimension}


class DimensionMismatchError(FieldEnsembleError, ValueError):
    """Two objects living on different spaces were combined."""


class DegenerateWeightsError(FieldEnsembleError):
    """Importance weights are too concentrated for a reliable estimate."""

    def __init__(self, ess: float, threshold: float, message: Optional[str] = None):
        self.ess = ess
        self.threshold = threshold
        super().__init__(
            message or f"Effective sample size {ess:.2f} below threshold {threshold:.2f}"
        )

    def details(self) -> Dict[str, Any]:
        return {'ess': self.ess, 'ess_threshold': self.threshold}


class EssCollapseError(DegenerateWeightsError):
    """ESS collapsed while the dual solver was iterating."""

    def __init__(self, ess: float, threshold: float, mu: List[complex]):
        self.mu = [complex(m) for m in mu]
        super().__init__(
            ess, threshold,
            f"ESS collapsed to {ess:.2f} (threshold {threshold:.2f}) at mu={self.mu}"
        )

    def details(self) -> Dict[str, Any]:
        info = super().details()
        info['mu'] = [[m.real, m.imag] for m in self.mu]
        return info


class InfeasibleTargetError(FieldEnsembleError):
    """Target field lies outside the achievable set of expectations."""

    def __init__(self, target_norm: float, bound: float, reason: str = ""):
        self.target_norm = target_norm
        self.bound = bound
        suffix = f" ({reason})" if reason else ""
        super().__init__(
            f"Target field norm {target_norm:.6g} is not achievable; "
            f"estimated achievable bound {bound:.6g}{suffix}"
        )

    def details(self) -> Dict[str, Any]:
        return {'target_norm': self.target_norm, 'achievable_bound': self.bound}


class NonConvergenceError(FieldEnsembleError):
    """Iterative solver ran out of iterations."""

    def __init__(self, iterations: int, residual_history: List[float]):
        self.iterations = iterations
        self.residual_history = [float(r) for r in residual_history]
        last = self.residual_history[-1] if self.residual_history else float('nan')
        super().__init__(
            f"No convergence after {iterations} iterations (last residual {last:.3e})"
        )

    def details(self) -> Dict[str, Any]:
        return {'iterations': self.iterations, 'residual_history': self.residual_history}


class ProjectionError(FieldEnsembleError):
    """No random start could be projected onto a level surface."""


class ConstraintViolationError(FieldEnsembleError):
    """Alternative density is not normalized or misses the field constraint."""

    def __init__(self, quantity: str, discrepancy: float, allowed: float):
        self.quantity = quantity
        self.discrepancy = discrepancy
        self.allowed = allowed
        super().__init__(
            f"Alternative density rejected: {quantity} off by {discrepancy:.3e} (allowed {allowed:.3e})"
        )

    def details(self) -> Dict[str, Any]:
        return {'quantity': self.quantity, 'discrepancy': self.discrepancy, 'allowed': self.allowed}
