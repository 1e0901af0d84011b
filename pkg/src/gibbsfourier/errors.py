"""Exception hierarchy shared by all modules."""


class GibbsFourierError(Exception):
    """Base class for library errors."""


class DomainError(GibbsFourierError, ValueError):
    """An argument lies outside the domain of an operation."""


class StructuralError(GibbsFourierError, ValueError):
    """Arity or shape mismatch between composite arguments."""


class BudgetError(GibbsFourierError, RuntimeError):
    """An enumeration would exceed the configured budget."""


class DegenerateError(GibbsFourierError, RuntimeError):
    """A construction produced an empty or otherwise unusable object."""


class IdentityError(GibbsFourierError, AssertionError):
    """An exact identity failed; this always indicates a bug."""


class UnsupportedError(GibbsFourierError, NotImplementedError):
    """Operation not available for the given system."""


class ConfigError(GibbsFourierError, ValueError):
    """Invalid run configuration."""
