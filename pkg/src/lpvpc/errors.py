"""Exception types raised across the toolkit."""


class DimensionError(ValueError):
    """Operands have incompatible shapes or scheduling dimensions."""


class FactorizationError(ValueError):
    """A supplied factorization f = fA*x + fB*u does not hold on samples.

    Carries the worst offending sample in ``worst_sample`` when available.
    """

    def __init__(self, message, worst_sample=None):
        super().__init__(message)
        self.worst_sample = worst_sample


class UnsupportedModelError(ValueError):
    """The model falls outside the supported structure (e.g. MIMO companion)."""


class PersistencyError(RuntimeError):
    """The data dictionary fails the required persistence-of-excitation rank.

    The failing report is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InconsistencyError(RuntimeError):
    """Measured window cannot be explained by the dictionary at the given scheduling."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EquilibriumError(RuntimeError):
    """No forced equilibrium consistent with the data at the requested setpoint."""


class ConfigError(ValueError):
    """Invalid or inconsistent controller/experiment configuration."""
