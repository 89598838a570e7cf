"""Exception hierarchy shared across the package."""


class BlinkTrackError(Exception):
    """Base class for all package errors."""


class InputError(BlinkTrackError, ValueError):
    """Malformed or inconsistent user input (files, configs, arguments)."""


class FrameOrderError(BlinkTrackError, ValueError):
    """A frame or p-state arrived out of order, duplicated, or with a gap."""


class DictionaryError(InputError):
    """A blink dictionary violates its invariants or cannot be generated."""


class DegenerateFitError(BlinkTrackError, ArithmeticError):
    """The regression system is rank deficient."""


class InvariantViolation(BlinkTrackError, RuntimeError):
    """An internal structural invariant was broken."""
