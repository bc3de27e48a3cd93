"""Exception hierarchy shared by all szkit modules."""


class SzkitError(Exception):
    """Base class for every error raised by szkit."""


class InvalidMatrix(SzkitError, ValueError):
    pass


class DimensionMismatch(SzkitError, ValueError):
    pass


class DegenerateHessian(SzkitError):
    pass


class FormulaInapplicable(SzkitError):
    pass


class DegeneratePath(SzkitError):
    pass


class ResolutionTooCoarse(SzkitError):
    """Sampling is too coarse to resolve a crossing, winding or quadrature."""


class NotALoop(SzkitError):
    pass


class EmptyWindow(SzkitError):
    pass


class OutsideInjectivity(SzkitError):
    pass


class DiameterExceedsInjectivity(SzkitError):
    pass


class NoConvergence(SzkitError):
    pass


class IntegrationFailure(SzkitError):
    pass


class NotACriticalPoint(SzkitError):
    pass


class NoAdmissibleEpsilon(SzkitError):
    pass


class Unbounded(SzkitError):
    pass


class InvalidMargin(SzkitError, ValueError):
    pass


class PreconditionUnverified(SzkitError):
    pass


class NoGap(SzkitError):
    """Only one critical value, so there is no positive energy gap."""
