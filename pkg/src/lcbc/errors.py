"""Exception hierarchy. Every domain error derives from LcbcError so the CLI
can map it to exit code 1."""


class LcbcError(Exception):
    """Base class for precondition and domain failures."""


class NonPrime(LcbcError):
    pass


class DegreeZero(LcbcError):
    pass


class FieldTooLarge(LcbcError):
    pass


class DivideByZero(LcbcError, ZeroDivisionError):
    pass


class CtxMismatch(LcbcError):
    pass


class NoEmbedding(LcbcError):
    pass


class RowMismatch(LcbcError):
    pass


class NotSquare(LcbcError):
    pass


class Singular(LcbcError):
    pass


class BadDims(LcbcError):
    pass


class DimMismatch(LcbcError):
    pass


class BadK(LcbcError):
    pass


class KTooSmall(LcbcError):
    pass


class UndefinedGain(LcbcError):
    pass


class BadParams(LcbcError):
    pass


class SearchExhausted(LcbcError):
    pass


class EnFailed(LcbcError):
    pass


class NTooSmall(LcbcError):
    pass


class MemoryGuard(LcbcError):
    pass


class RankDeficient(LcbcError):
    pass


class BadRegime(LcbcError):
    pass


class BadSubset(LcbcError):
    pass


class ConfigError(LcbcError):
    pass


class FormatError(LcbcError):
    pass
