"""Exception hierarchy. Every error raised on purpose derives from PasvError."""


class PasvError(Exception):
    """Base class for all library errors."""


# poset
class CycleDetected(PasvError, ValueError):
    pass


class IndexOutOfRange(PasvError, IndexError):
    pass


class EmptySet(PasvError, ValueError):
    pass


class ExtensionCountExceedsCap(PasvError, RuntimeError):
    pass


class NotGloballyMaximal(PasvError, ValueError):
    pass


class EmptySubset(PasvError, ValueError):
    pass


class SubsetNotInLayer(PasvError, ValueError):
    pass


class SamePlayer(PasvError, ValueError):
    pass


# order model / sampler
class NotLinearExtension(PasvError, ValueError):
    pass


class NotMaximalInSet(PasvError, ValueError):
    pass


class InfeasibleSet(PasvError, ValueError):
    pass


class ComparablePair(PasvError, ValueError):
    pass


class InvalidInit(PasvError, ValueError):
    pass


class InvalidWeights(PasvError, ValueError):
    pass


# utility
class MissingSubset(PasvError, KeyError):
    pass


class BadCopyMap(PasvError, ValueError):
    pass


class ProcessFailure(PasvError, RuntimeError):
    pass


class ProtocolViolation(PasvError, RuntimeError):
    pass


class UtilityTimeout(PasvError, TimeoutError):
    pass


class KTooLarge(PasvError, ValueError):
    pass


class DimensionMismatch(PasvError, ValueError):
    pass


# valuation
class EmptySamples(PasvError, ValueError):
    pass


class IncompleteGrouping(PasvError, ValueError):
    pass
