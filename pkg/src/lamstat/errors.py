"""Exception types raised across lamstat.

Every error derives from ``LamstatError`` (itself a ``ValueError``) so callers
can catch input problems in one place. Errors that point at a position carry
it as ``.index`` (1-based, matching the sequence notation used throughout).
"""

from __future__ import annotations


class LamstatError(ValueError):
    index: int | None = None

    def __init__(self, message: str = "", index: int | None = None):
        self.index = index
        if index is not None:
            message = f"{message} (at {index})" if message else f"at {index}"
        super().__init__(message or self.__class__.__name__)

    @property
    def code(self) -> str:
        return self.__class__.__name__


# schedules
class FirstNotOne(LamstatError):
    pass


class Decreasing(LamstatError):
    pass


class JumpTooBig(LamstatError):
    pass


class NonPositive(LamstatError):
    pass


class NotFinite(LamstatError):
    pass


class OutOfRange(LamstatError):
    pass


class FirstNotZero(LamstatError):
    pass


class NotIncreasing(LamstatError):
    pass


# summability / quasicauchy
class NonPositiveEpsilon(LamstatError):
    pass


class CutsExceedPrefix(LamstatError):
    pass


class PrefixTooShort(LamstatError):
    pass


class EmptyPrefix(LamstatError):
    pass


# generators
class NonBitValue(LamstatError):
    pass


class CapExceeded(LamstatError):
    pass


# probe
class DomainTooSmall(LamstatError):
    pass


class DomainViolation(LamstatError):
    pass


class UnknownFunction(LamstatError):
    pass


# file parsing
class Malformed(LamstatError):
    pass


class NonContiguousIndex(LamstatError):
    pass


class EmptyFile(LamstatError):
    pass
