"""Exception types shared across the package."""


class SpaceformError(Exception):
    """Base class for package errors."""


class PreconditionError(SpaceformError, ValueError):
    """An operation precondition (type invariant, argument range) is violated."""


class DomainError(SpaceformError, ValueError):
    """A hypothesis of a bound/counting formula fails; message names the inequality."""


class DegenerateMetricError(SpaceformError, ValueError):
    """Randers data lost positivity (drift norm >= 1 at a sample point)."""


class ResolutionError(SpaceformError, ValueError):
    """Sampling or loop resolution below the documented minimum."""


class ConvergenceError(SpaceformError, RuntimeError):
    """An iterative solver ran out of budget; diagnostics attached."""


class ConfigError(SpaceformError, ValueError):
    """Experiment config file is malformed or contains unknown keys."""


class ArtifactIOError(SpaceformError, OSError):
    """A report artifact could not be written."""
