"""Exception hierarchy shared by every simulator layer."""


class SimError(Exception):
    """Base class for all simulator errors."""


class UnknownInstruction(SimError):
    pass


class IllegalRegisterGroup(SimError):
    pass


class UnsupportedSew(SimError):
    pass


class OutOfBoundsAccess(SimError):
    pass


class MisalignedAccess(SimError):
    pass


class AsmError(SimError):
    """Raised by the assembler with a line number in the message."""


class SimulationHang(SimError):
    pass


class ConfigInvalid(SimError):
    pass


class UnsupportedShape(SimError):
    pass


class FunctionalMismatch(SimError):
    pass


class RooflineViolation(SimError):
    pass


class MissingTableEntry(SimError):
    pass
