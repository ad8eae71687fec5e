"""Exception hierarchy shared by every toposq module."""


class ToposqError(Exception):
    """Base class for all library errors."""


# operator kernel

class NotHermitian(ToposqError):
    pass


class NotProjection(ToposqError):
    pass


class NotUnitVector(ToposqError):
    pass


class NotDensity(ToposqError):
    pass


class DimensionMismatch(ToposqError):
    pass


class NonCommuting(ToposqError):
    def __init__(self, i, j, message=None):
        self.pair = (i, j)
        super().__init__(message or f"generators {i} and {j} do not commute")


# contexts / presheaf

class TrivialContext(ToposqError):
    pass


class DuplicateId(ToposqError):
    pass


class UnknownContext(ToposqError):
    pass


class NotBelow(ToposqError):
    pass


class NotInContext(ToposqError):
    pass


class PresheafMismatch(ToposqError):
    pass


class NotRestrictionClosed(ToposqError):
    pass


# states and measures

class NotPure(ToposqError):
    pass


class BadThreshold(ToposqError):
    pass


class CapacityError(ToposqError):
    pass


class Underdetermined(ToposqError):
    pass


class InconsistentData(ToposqError):
    pass


# scenario and model documents

class ParseError(ToposqError):
    pass


class SchemaVersionError(ToposqError):
    pass


class ValidationError(ToposqError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class IntegrityError(ToposqError):
    pass


class UnknownPreset(ToposqError):
    pass


class UnknownState(ToposqError):
    pass


class UnknownProposition(ToposqError):
    pass
