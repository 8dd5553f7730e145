"""Exception types raised by lnelab."""


class LneLabError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(LneLabError, ValueError):
    """Malformed expression text. ``position`` is the 0-based character offset."""

    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
            if text is not None:
                message += f"\n  {text}\n  {' ' * position}^"
        super().__init__(message)


class DocumentError(LneLabError, ValueError):
    """A set, radius or fixture document is structurally invalid."""


class DimensionError(LneLabError, ValueError):
    pass


class RadiusDomainError(LneLabError, ValueError):
    """The radius function is negative (or undefined) at a point of the set."""


class ConvergenceError(LneLabError, RuntimeError):
    pass


class EmptyCloudError(LneLabError, RuntimeError):
    """Sampling produced no points (the region misses the annulus at this resolution)."""


class EmptyLinkError(EmptyCloudError):
    pass


class StationaryPointError(LneLabError, RuntimeError):
    """Projected gradient of the radius function vanished during a descent."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message)


class IsolatedApexError(LneLabError, ValueError):
    pass


class UnknownFixtureError(LneLabError, KeyError):
    pass
