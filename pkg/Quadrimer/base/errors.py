class QuadrimerError(RuntimeError):
    """Base class of all numerical failures reported by the library."""


class InvalidParametersError(QuadrimerError):
    pass


class NonFiniteStateError(QuadrimerError):
    pass


class BrokenPhaseError(QuadrimerError):
    """The linear problem is in the broken PT phase where the requested object is undefined."""


class FamilyDoesNotExistError(QuadrimerError):
    pass


class ConvergenceError(QuadrimerError):
    pass


class DegeneratePointError(QuadrimerError):
    """Jacobian is singular beyond the gauge direction."""


class SpuriousRootError(QuadrimerError):
    """A root of a reduced system that does not solve the full stationary equations."""


class StepUnderflowError(QuadrimerError):
    pass


class TraceSupportError(QuadrimerError):
    pass


class FileFormatError(QuadrimerError):
    pass
