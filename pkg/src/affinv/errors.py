"""Exception hierarchy shared by all modules."""


class AffinvError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AffinvError, ValueError):
    """Bad input: maps to CLI exit code 1."""


class NotPrime(ValidationError):
    pass


class ZeroDivisor(AffinvError, ZeroDivisionError):
    pass


class BadDenominator(AffinvError, ZeroDivisionError):
    pass


class ZeroSlope(AffinvError, ValueError):
    pass


class ArithmeticOverflow(AffinvError, OverflowError):
    """A vectorised fixed-width kernel was asked to handle a modulus it cannot hold exactly."""


class AmbiguousFloor(AffinvError, ArithmeticError):
    pass


class InvalidOverride(ValidationError):
    pass


class InvalidParameters(ValidationError):
    pass


class InvalidShift(ValidationError):
    pass


class EvenFamily(AffinvError, ValueError):
    pass


class CollisionDetected(AffinvError, ArithmeticError):
    pass


class ExhaustedRetries(AffinvError, RuntimeError):
    pass


class ZeroDilation(ValidationError):
    pass


class MismatchedModulus(ValidationError):
    pass


class AccuracyViolation(AffinvError, ArithmeticError):
    pass


class DegenerateSpectrum(AffinvError, ValueError):
    pass


class EmptyInterval(AffinvError, ValueError):
    pass


class ChainViolation(AffinvError, AssertionError):
    pass


class BadParity(ValidationError):
    pass


class SearchSpaceTooLarge(ValidationError):
    pass


class FormatError(ValidationError):
    """Malformed serialized artifact (bitset blob, record)."""
