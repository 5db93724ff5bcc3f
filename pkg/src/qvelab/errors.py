"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Malformed model configuration, table file, or CLI request."""


class SolverError(RuntimeError):
    """Eigensolver failed to converge or produced an unusable solution."""


class SpectrumSizeError(SolverError):
    """A full dense spectrum was requested above the dense-size cap."""


class DegenerateGroundError(SolverError):
    """Spectral sums are undefined because the ground state is degenerate."""


class RouteMismatchError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


class TableDomainError(ValueError):
    """A table (or bounded-domain source) was queried outside its span."""


class ModelDomainError(ValueError):
    """A closed-form model was evaluated outside its stability domain."""


class BracketError(ValueError):
    """A root bracket does not enclose a sign change."""
