"""Exception hierarchy shared by all modules."""


class GibbsTripleError(Exception):
    """Base class for all library errors."""


class BadShape(GibbsTripleError):
    """Input array or table has the wrong shape or dtype."""


class NotPrimitive(GibbsTripleError):
    """Adjacency matrix is reducible or periodic."""


class Inadmissible(GibbsTripleError):
    """Word contains a transition forbidden by the adjacency matrix."""


class ShapeMismatch(GibbsTripleError):
    """Function values are not indexed by the expected cylinder level."""


class NoConvergence(GibbsTripleError):
    """Iterative solver exhausted its iteration budget."""


class NonNegativeValue(GibbsTripleError):
    """Potential normalization produced a positive value."""


class BadDimension(GibbsTripleError):
    """Rotation dimension outside the valid range."""


class SingleChild(GibbsTripleError):
    """Word has a single child, so it carries no mean-zero basis element."""


class IndexOutOfRange(GibbsTripleError):
    """Basis element index outside 1..alpha(x)-1."""


class TooDeep(GibbsTripleError):
    """Requested cylinder depth exceeds the enumeration budget."""


class BudgetExceeded(GibbsTripleError):
    """Tree enumeration exceeded the configured node budget."""


class ThresholdOutOfRange(GibbsTripleError):
    """Counting threshold outside (0, 1)."""


class LevelMismatch(GibbsTripleError):
    """States are represented at different cylinder levels."""


class NotNormalized(GibbsTripleError):
    """Normalized potential is unavailable or not strictly negative."""


class NoAscent(GibbsTripleError):
    """Optimizer found no ascent direction from any restart."""


class Degenerate(GibbsTripleError):
    """Input sequence carries no scale information."""


class ConfigError(GibbsTripleError):
    """Invalid or incomplete experiment configuration."""


class ComputeError(GibbsTripleError):
    """A task failed while computing its outputs."""
