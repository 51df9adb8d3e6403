"""Exception hierarchy shared by every hyperreal module."""


class HyperRealError(Exception):
    """Base class for all errors raised by hyperreal."""


class DimensionMismatchError(HyperRealError, ValueError):
    pass


class NotHermitianError(HyperRealError, ValueError):
    pass


class NumericError(HyperRealError, ArithmeticError):
    """An eigen or singular value solver did not converge."""


class SingularShiftError(HyperRealError, ArithmeticError):
    """-1 lies in the spectrum, so I + M cannot be inverted."""


class SingularIplusDError(SingularShiftError):
    """The feedthrough D has -1 as an eigenvalue."""


IplusDSingular = SingularIplusDError


class SingularDError(HyperRealError, ArithmeticError):
    pass


class PoleAtEvaluationPointError(HyperRealError, ArithmeticError):
    pass


class ZeroInversionError(HyperRealError, ZeroDivisionError):
    pass


class DegreeOverflowError(HyperRealError, ValueError):
    pass


class ImproperFunctionError(HyperRealError, ValueError):
    pass


class InvalidEtaError(HyperRealError, ValueError):
    pass


class UnstablePolesError(HyperRealError):
    def __init__(self, message: str, pole: complex | None = None):
        super().__init__(message)
        self.pole = pole


class InnerNotSPError(HyperRealError, ValueError):
    pass


class NoCertificateError(HyperRealError):
    def __init__(self, message: str, eta_star: float | None = None, gap: float | None = None):
        super().__init__(message)
        self.eta_star = eta_star
        self.gap = gap


class HamiltonianImaginaryAxisError(HyperRealError):
    pass


class NonpositiveSectorError(HyperRealError, ValueError):
    pass


class IllPosedLoopError(HyperRealError, ValueError):
    pass


class InvalidComponentError(HyperRealError, ValueError):
    pass
