"""Exception hierarchy shared by all modules."""


class PsiSeriesError(Exception):
    """Base class for every error raised by hhpsi."""


class InvalidParameterError(PsiSeriesError, ValueError):
    """Model parameters violate a precondition (zero C, D or lambda, ...)."""


class RegimeError(PsiSeriesError, ValueError):
    """The requested operation does not exist in this lambda-regime."""


class DegenerateLeadingCoefficientError(RegimeError):
    """Leading coefficient of x vanishes (lambda = -1/2)."""


class InternalConsistencyError(PsiSeriesError, ArithmeticError):
    """A recursion matrix is singular where no resonance was predicted."""


class CompatibilityError(PsiSeriesError, ArithmeticError):
    """The compatibility condition at a resonance fails."""

    def __init__(self, message, index=None, residual=None):
        super().__init__(message)
        self.index = index
        self.residual = residual


class InvalidResummationError(PsiSeriesError, ValueError):
    """A resummed coefficient carries an exponent with negative real part."""


class OutOfRangeError(PsiSeriesError, ValueError):
    """Grade too small for the integral representation."""


class DivergentIntegralError(PsiSeriesError, ArithmeticError):
    """An exponential integral from -infinity does not converge."""


class CertificateError(PsiSeriesError):
    """A sampled bound check failed; ``witness`` holds (gamma, z, lhs, rhs)."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ParseError(PsiSeriesError, ValueError):
    """Malformed literal; ``offset`` is the byte offset of the problem."""

    def __init__(self, message, text, offset):
        super().__init__(f"{message} at byte {offset} in {text!r}")
        self.text = text
        self.offset = offset


class ConvergenceWarning(UserWarning):
    """Series evaluated at or beyond its certified radius."""
