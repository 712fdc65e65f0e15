"""Exception types raised across the package."""


class InvctlError(Exception):
    """Base class for every error this package raises on purpose."""


class EmptyInput(InvctlError, ValueError):
    pass


class BadWav(InvctlError, ValueError):
    pass


class TooShort(InvctlError, ValueError):
    pass


class ShapeMismatch(InvctlError, ValueError):
    pass


class ZeroDenominator(InvctlError, ZeroDivisionError):
    pass


class IndexOutOfRange(InvctlError, IndexError):
    pass


class FormatError(InvctlError, ValueError):
    """A binary dataset or checkpoint file could not be decoded."""


class BadMagic(FormatError):
    pass


class BadVersion(FormatError):
    pass


class TruncatedFile(FormatError):
    pass
