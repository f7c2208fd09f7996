"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ConvergenceError(ArithmeticError):
    """A series, continued fraction or quadrature failed to converge."""


class MomentDivergenceError(ArithmeticError):
    """A requested moment of a summand law does not exist."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""
