"""Error types raised across the simulator.

Each exception names the violated contract; subclassing the closest builtin
keeps ``except ValueError``-style handling working for callers that do not
care about the distinction.
"""


class GridTooCoarse(RuntimeError):
    """Quadrature grid cannot resolve a mode to the requested tolerance."""


class IndexOutOfRange(IndexError):
    """Basis or symbol index outside 0..d-1."""


class DimensionMismatch(ValueError):
    """State, basis, or device dimensions disagree."""


class UnsupportedDimension(ValueError):
    """Requested construction is not available in this dimension."""


class WrongFrame(ValueError):
    """State is tagged with the wrong physical frame for this operation."""


class ConfigInvalid(ValueError):
    """Session configuration violates an invariant."""


class ParseError(ValueError):
    """Config file or flag could not be parsed."""


class ValidationError(ValueError):
    """Parsed config value violates an invariant."""
