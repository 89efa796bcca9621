"""Exception hierarchy shared by every edgesim module."""

from __future__ import annotations


class EdgeError(Exception):
    """Base class for all simulator errors."""


# -- encoding -----------------------------------------------------------------

class EncodingError(EdgeError):
    pass


class UnencodableImmediate(EncodingError):
    pass


class TooManyTargets(EncodingError):
    pass


class InvalidOpcode(EncodingError):
    pass


class InvalidTargetKind(EncodingError):
    pass


class InvalidInstruction(EncodingError):
    """Field combination that the ISA does not allow (wrong target kind for
    the opcode class, bad broadcast listener, reserved predicate code...)."""


# -- block structure ----------------------------------------------------------

class BlockError(EdgeError):
    pass


class BlockTooLarge(BlockError):
    pass


class TargetOutOfRange(BlockError):
    pass


class SlotConflict(BlockError):
    pass


class DanglingLabel(BlockError):
    pass


class UnreachableSlot(BlockError):
    pass


class ParseError(EdgeError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class BlockFileError(EdgeError):
    pass


# -- execution ----------------------------------------------------------------

class ExecutionError(EdgeError):
    pass


class Deadlock(ExecutionError):
    pass


class DoubleDelivery(ExecutionError):
    pass


class MultipleBranches(ExecutionError):
    pass


class RegisterWriteConflict(ExecutionError):
    pass


class UnalignedAddress(ExecutionError):
    pass


class UnknownLabel(ExecutionError):
    pass


class BlockLimitExceeded(ExecutionError):
    pass


class CycleLimitExceeded(ExecutionError):
    pass


# -- internal model assertions -------------------------------------------------

class ModelAssertion(EdgeError):
    """A microarchitectural invariant was violated (simulator bug)."""


class LSQOrderViolation(ModelAssertion):
    pass


class DoubleDecode(ModelAssertion):
    pass


class UnknownConfiguration(EdgeError):
    pass
