"""Exception hierarchy shared by every lprkit module."""

from __future__ import annotations


class LprError(Exception):
    """Base class for all lprkit errors."""


# plate grammar
class MalformedPlate(LprError, ValueError):
    pass


class UnknownStateCode(LprError, ValueError):
    pass


class EmptyRegistry(LprError, ValueError):
    pass


# rendering / augmentation
class GlyphMissing(LprError, KeyError):
    pass


class ParameterOutOfRange(LprError, ValueError):
    pass


# dataset
class ParseError(LprError, ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class SchemaViolation(LprError, ValueError):
    def __init__(self, invariant: str, detail: str = "", lineno: int | None = None):
        self.invariant = invariant
        self.lineno = lineno
        msg = invariant if not detail else f"{invariant}: {detail}"
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)


# metrics
class EmptyInput(LprError, ValueError):
    pass


class DegenerateBox(LprError, ValueError):
    pass


# decoding
class ModelContractViolation(LprError, ValueError):
    pass


class UnnormalizedRow(LprError, ValueError):
    pass


class IndivisibleShape(LprError, ValueError):
    pass


# schedules
class StepOutOfRange(LprError, IndexError):
    pass


class ShapeMismatch(LprError, ValueError):
    pass


# cli
class ConfigError(LprError, ValueError):
    def __init__(self, key: str, detail: str):
        self.key = key
        super().__init__(f"{key}: {detail}")


class ArtifactIOError(LprError, OSError):
    def __init__(self, path: str, detail: str):
        self.path = path
        super().__init__(f"{path}: {detail}")
