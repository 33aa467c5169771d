"""Exception types shared across the package."""


class TemperedError(Exception):
    """Base class for all package errors."""


class NoSolution(TemperedError, ValueError):
    """The effective-ridge equation has no positive root."""


class NonConvergence(TemperedError, ArithmeticError):
    """An iterative solver ran out of iterations before reaching tolerance."""


class DegenerateE0(TemperedError, ArithmeticError):
    """sum(L_i^2) reached n, so the overfitting coefficient is undefined."""


class Unclassified(TemperedError, ValueError):
    """A spectrum matches none of the regime rules."""


class SingularMatrix(TemperedError, ArithmeticError):
    """A kernel system could not be factorized."""


class DuplicateX(TemperedError, ValueError):
    """Repeated abscissae passed to a 1-D interpolator."""


class BadMagic(TemperedError, ValueError):
    """IDX file header carries an unexpected magic number."""


class CountMismatch(TemperedError, ValueError):
    """Image and label files disagree on the number of items."""


class TruncatedFile(TemperedError, ValueError):
    """IDX payload is shorter than its header promises."""


class EmptyResult(TemperedError, ValueError):
    """An operation dropped every sample."""


class IncompleteGrid(TemperedError, ValueError):
    """Records do not cover a rectangular (noise, n) grid."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"missing cells (noise, n): {self.missing}")


class NoSpectrum(TemperedError, ValueError):
    """A method has no spectral model to compare against."""


class ConfigError(TemperedError, ValueError):
    """Experiment configuration is invalid."""
