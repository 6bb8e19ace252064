"""Exception hierarchy shared by all agswap modules."""

from __future__ import annotations


class AgswapError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatch(AgswapError):
    """Embedding matrices / vectors with incompatible dimensions."""


class InvalidWidth(AgswapError):
    """Exchange vector width below the minimum of 2."""


class IndexOutOfBounds(AgswapError):
    """Group index outside the 1..w column range."""


class LengthMismatch(AgswapError):
    """Feature vectors of different lengths."""


class BiasUnresolvable(AgswapError):
    """The update direction requires flipping a side that has no bits left."""


class WidthTooLarge(AgswapError):
    """Exhaustive search requested beyond the enumeration guard."""


class OracleFailure(AgswapError):
    """Generation/scoring call failed (transport, service error, degenerate output).

    `trace` carries the partial iteration trace when the failure interrupted
    a running search; `attempts` / `detail` carry retry metadata for remote calls.
    """

    def __init__(self, message: str, *, trace=None, attempts: int = 0, detail: str = ""):
        super().__init__(message)
        self.trace = trace
        self.attempts = attempts
        self.detail = detail


class ProtocolError(AgswapError):
    """Remote response violates the wire schema or its declared invariants."""


class UnknownCategory(AgswapError):
    """Category not present in the taxonomy's base set."""


class NoPathToRoot(AgswapError):
    """Hypernym walk dead-ended before reaching the root."""


class ConflictingLists(AgswapError):
    """Curation keep and delete lists overlap."""


class InsufficientHyponyms(AgswapError):
    """Fewer than the required subclasses exist under a superclass."""


class InvalidTaxonomy(AgswapError):
    """Graph or manifest failed structural validation (cycle, orphan leaf, ...)."""
