"""Exception types shared across the package."""


class InvlabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(InvlabError):
    """Invalid configuration (bad parameters, malformed config file)."""


class ResolutionError(InvlabError):
    """Grid resolution insufficient for the requested construction."""

    def __init__(self, message: str, required_n: int | None = None):
        super().__init__(message)
        self.required_n = required_n


class SolverDivergenceError(InvlabError):
    """Time integration blew past the growth guard."""


class NumericsError(InvlabError):
    """Non-finite values or violated numerical invariants."""


class QuadratureError(InvlabError):
    """Quadrature refinement failed to converge in strict mode."""


class FormatError(InvlabError):
    """Malformed field snapshot file."""
