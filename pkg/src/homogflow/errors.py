"""Exception types shared across the toolkit."""


class HomogflowError(Exception):
    """Base class for all toolkit errors."""


class GeometryError(HomogflowError):
    """Invalid cell geometry (containment margin, empty block, ...)."""


class MeshError(HomogflowError):
    """Mesh generation produced an invalid triangulation."""


class PairingError(HomogflowError):
    """Periodic face matching failed for a boundary node."""


class TopologyError(HomogflowError):
    """Interface bookkeeping is inconsistent (orphan duplicate, missing pair)."""


class ConstraintError(HomogflowError):
    """Conflicting or malformed constraints on a degree of freedom."""


class CoefficientError(HomogflowError):
    """Coefficient field violates ellipticity/positivity where sampled."""


class SolverError(HomogflowError):
    """Linear solve failed; carries the final residual when available."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConfigError(HomogflowError):
    """Configuration file is invalid; names the offending field when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DependencyError(HomogflowError):
    """A pipeline stage is missing a prerequisite artifact."""


class ConvergenceError(HomogflowError):
    """A convergence study violated a required monotonicity check."""
