"""Numerical structural-stability toolkit for hyperbolic maps of S^1 and T^2.

Invariant splittings by graph transform, the series right inverse of
``1 - f_#`` on vector fields, and a contraction solver producing conjugacies
``g = h f h^-1`` with measured Hoelder and d_f-Lipschitz regularity.
"""

from hyperstab.errors import (
    ChartError,
    ConfigError,
    ConvergenceError,
    DecayError,
    DivergenceError,
    HypothesisError,
    HyperstabError,
    InputError,
)

__version__ = "0.1.0"

__all__ = [
    "ChartError",
    "ConfigError",
    "ConvergenceError",
    "DecayError",
    "DivergenceError",
    "HypothesisError",
    "HyperstabError",
    "InputError",
]
