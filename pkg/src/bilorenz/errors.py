"""Exception hierarchy shared by all bilorenz modules."""


class BilorenzError(Exception):
    """Base class for all package errors."""


class ParameterError(BilorenzError, ValueError):
    """Invalid distribution/copula parameters, rejected at construction time."""


class DomainError(BilorenzError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class GridError(BilorenzError, ValueError):
    """Malformed grid data (non-monotone CDF values, negative density, ...)."""


class SingularCopulaError(BilorenzError):
    """Raised when a density is requested from a singular (extremal) copula.

    The comonotonic and countermonotonic copulas carry no density; their
    iteration dynamics are closed-form and live in :mod:`bilorenz.bounds`.
    """


class MomentError(BilorenzError):
    """A required cross-moment integral is non-finite or non-positive."""


class NumericalCollapseError(BilorenzError):
    """Density mass collapsed below the floor on too much of the grid."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


class MultipleCrossingsError(BilorenzError):
    """A marginal CDF crossed the diagonal more than once."""


class DegenerateDensityError(BilorenzError):
    """Too many floor-clipped entries for a meaningful classification."""


class ConfigError(BilorenzError):
    """Bad run configuration; carries file/line context when available."""

    def __init__(self, message: str, path=None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
            if line is not None:
                loc += f"{line}:"
            loc += " "
        super().__init__(loc + message)
        self.path = path
        self.line = line
