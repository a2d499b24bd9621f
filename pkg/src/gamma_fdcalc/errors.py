"""Exception hierarchy shared by every module of the package."""


class FdCalcError(Exception):
    """Base class for all library errors."""


class DuplicatePoint(FdCalcError, ValueError):
    """A point was adjoined to a configuration that already contains it."""


class MissingPoint(FdCalcError, ValueError):
    """A point was removed from a configuration that does not contain it."""


class ArityMismatch(FdCalcError, ValueError):
    """A kernel was evaluated with the wrong number of arguments."""


class SupportExceedsWindow(FdCalcError, ValueError):
    """A declared support is not covered by the quadrature window."""


class OverlappingSupports(FdCalcError, ValueError):
    """Two weighted configurations that must be disjoint share a point."""


class DomainError(FdCalcError, ValueError):
    """An argument lies outside the domain of the requested function."""


class IndexOutOfRange(FdCalcError, IndexError):
    """An operator index exceeds the admissible range."""


class DuplicateProbe(FdCalcError, ValueError):
    """Probe points for coefficient extraction are not pairwise distinct."""


class ProbeLookupError(FdCalcError, KeyError):
    """A tabulated kernel was evaluated off its probe table."""


class ParameterOrder(FdCalcError, ValueError):
    """The Poisson intensity exceeds the norm parameter."""


class TruncationError(FdCalcError, ValueError):
    """A Fock vector would exceed the supported truncation degree."""


class ConfigError(FdCalcError, ValueError):
    """Invalid command-line or file configuration."""
