"""Exception types shared across the package."""


class EtmcError(Exception):
    """Base class for package-specific failures."""


class ConfigError(EtmcError):
    """A run configuration could not be parsed or validated."""


class DivergentSeriesError(EtmcError):
    """A matrix geometric series does not converge (spectral radius >= 1)."""

    def __init__(self, rho, b=None):
        self.rho = rho
        self.b = b
        if b is None:
            msg = f"divergent series: spectral radius {rho:.6g} >= 1"
        else:
            msg = (f"divergent series at weight b={b!r}: "
                   f"spectral radius of the weighted kernel is {rho:.6g} >= 1")
        super().__init__(msg)


class NumericalFailureError(EtmcError):
    """An iterative routine did not converge or a residual check failed."""

    def __init__(self, message, iterations=None):
        self.iterations = iterations
        if iterations is not None:
            message = f"numerical failure after {iterations} iterations: {message}"
        else:
            message = f"numerical failure: {message}"
        super().__init__(message)


class InconsistentReceptionError(EtmcError):
    """A reception was reported on a timestep with no transmission."""

    def __init__(self):
        super().__init__("inconsistent reception: r=1 requires t=1")


class FeasibilityError(EtmcError):
    """A certification premise does not hold for the given configuration."""


class BracketNotFoundError(EtmcError):
    """Root bracketing for the sufficient-bound search failed."""
