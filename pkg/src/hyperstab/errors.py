"""Exception hierarchy. CLI exit codes hang off ``exit_code``."""


class HyperstabError(Exception):
    exit_code = 1


class ConfigError(HyperstabError, ValueError):
    """Invalid configuration or violated constant inequality."""

    exit_code = 2


class HypothesisError(ConfigError):
    """A contraction hypothesis on the model (block bounds, invertibility) fails."""


class ChartError(HyperstabError, ValueError):
    """A tangent vector or displacement leaves the exponential chart."""

    exit_code = 3


class ConvergenceError(HyperstabError, RuntimeError):
    """Iteration budget exhausted before reaching tolerance."""

    exit_code = 3

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class DivergenceError(ConvergenceError):
    """Contraction ratio stayed near one; carries the ratio trace."""


class DecayError(HyperstabError, RuntimeError):
    """A right-inverse series component failed to decay."""

    exit_code = 4


class InputError(HyperstabError, ValueError):
    """Malformed input file."""

    exit_code = 5
