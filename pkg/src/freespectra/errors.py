"""Exception hierarchy. Every library error derives from FreeSpectraError."""


class FreeSpectraError(Exception):
    pass


class InputError(FreeSpectraError, ValueError):
    """Malformed or inconsistent user input."""


class VariableMismatch(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class InvalidParameter(InputError):
    pass


class NotAModuleError(FreeSpectraError):
    """A product left the span of the given basis."""


class DependentBasisError(InputError):
    pass


class OutsideDomainError(FreeSpectraError):
    """A resolvent needed for evaluation is singular."""


class UnboundedDirection(FreeSpectraError):
    def __init__(self, msg, direction=None):
        super().__init__(msg)
        self.direction = direction


class DegenerateProbe(FreeSpectraError):
    pass


class NotExtractable(FreeSpectraError):
    pass


class InvalidCertificate(FreeSpectraError):
    pass
