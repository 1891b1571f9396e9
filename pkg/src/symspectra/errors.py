"""Exception hierarchy shared by all symspectra modules."""


class SymSpectraError(Exception):
    """Base class for all errors raised by this package."""


class MalformedCoefficients(SymSpectraError):
    """Piecewise coefficients do not cover the system interval or are inconsistent."""


class QuadratureFailure(SymSpectraError):
    """Quadrature error estimate did not drop below tolerance after max refinement."""


class StepSizeUnderflow(SymSpectraError):
    """Adaptive ODE stepping stalled (step size underflow or solver failure)."""


class NotInMaximalRelation(SymSpectraError):
    """A (y, f) pair failed the membership residual check for the maximal relation."""


class SingularBoundaryMatrix(SymSpectraError):
    """Boundary linear system is singular: lambda is an eigenvalue or the pair degenerates."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class SingularConstraintSystem(SymSpectraError):
    """Two-point constraint system for the Weyl solutions is singular at this lambda."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class SingularPencil(SymSpectraError):
    """C0(lambda) - C1(lambda) M(lambda) is not invertible."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class RootFindingFailure(SymSpectraError):
    """Eigenvalue bracketing/refinement failed to isolate a root."""


class ExtrapolationDivergence(SymSpectraError):
    """Limit extrapolation did not stabilise (a jump sits at or near an endpoint)."""


class NotPSD(SymSpectraError):
    """An extracted jump matrix has an eigenvalue below the PSD tolerance."""


class UnboundedElement(SymSpectraError):
    """Element of the discrete weighted sequence space has a divergent moment."""


class UnsupportedWeightStructure(SymSpectraError):
    """Weight kernel varies inside a single coefficient piece."""


class ParseError(SymSpectraError):
    """Malformed input file; message carries the offending field."""


class UnknownCommand(SymSpectraError):
    """CLI dispatch received an unknown command."""
