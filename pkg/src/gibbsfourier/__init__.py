"""Numerical toolkit for Fourier decay of Gibbs measures of Markov maps."""

from .errors import (
    BudgetError,
    ConfigError,
    DegenerateError,
    DomainError,
    GibbsFourierError,
    IdentityError,
    StructuralError,
    UnsupportedError,
)
from .symbolic import MarkovSystem, Word, cantor, gauss, get_system, lueroth

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "ConfigError",
    "DegenerateError",
    "DomainError",
    "GibbsFourierError",
    "IdentityError",
    "MarkovSystem",
    "StructuralError",
    "UnsupportedError",
    "Word",
    "cantor",
    "gauss",
    "get_system",
    "lueroth",
]
