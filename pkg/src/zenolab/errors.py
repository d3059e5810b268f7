"""Exception hierarchy shared by all zenolab modules."""


class ZenoError(Exception):
    """Base class for zenolab errors."""


class InvalidParameter(ZenoError, ValueError):
    pass


class Divergent(ZenoError, ArithmeticError):
    """An integral property (such as the integrated coupling) is infinite."""


class Unsupported(ZenoError):
    """The requested quantity does not exist for this spectrum or filter."""


class ZeroDensity(ZenoError, ArithmeticError):
    """The coupling spectrum vanishes at the level frequency."""


class OutOfRegime(ZenoError, ValueError):
    """An asymptotic formula was requested outside its validity window."""


class OutOfBand(ZenoError, ValueError):
    pass


class StepTooCoarse(ZenoError, ValueError):
    pass


class QuadratureFailure(ZenoError, ArithmeticError):
    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class FilterMassWarning(UserWarning):
    """Filter mass at negative frequency was dropped from an overlap integral."""


class RegimeWarning(UserWarning):
    """Parameters sit outside the validity window of an approximation."""
