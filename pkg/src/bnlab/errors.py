"""Exception types shared across the package."""


class InvalidStateError(ValueError):
    """A state violates physical admissibility (positivity / volume-fraction bounds).

    Carries the offending field name and, for grid states, the cell index.
    """

    def __init__(self, message, field=None, index=None):
        super().__init__(message)
        self.field = field
        self.index = index


class GuardError(ValueError):
    """Input lies outside the invertibility guard of the normal-form chart."""


class ChartError(RuntimeError):
    """The chart inversion iteration failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SymmetrizeError(RuntimeError):
    """A symmetrizer prefactor lost positivity (guard breach)."""


class CflError(RuntimeError):
    """Requested time step violates the CFL bound.

    ``required_dt`` is the largest admissible step at the current state.
    """

    def __init__(self, message, required_dt=None):
        super().__init__(message)
        self.required_dt = required_dt


class SourceStepError(RuntimeError):
    """The implicit relaxation solve failed after all retries."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""
