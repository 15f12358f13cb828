"""Exception types raised across the package.

Every error that callers are expected to catch programmatically gets its
own class here, so experiment drivers can distinguish "bad input" from
"numerical failure" without string matching.
"""


class PdhlError(Exception):
    """Base class for all package-specific errors."""


# ---------------------------------------------------------------------------
# geometry


class EtaOutOfRange(PdhlError):
    """Relative hole size eta is outside the admissible interval (0, 1/2)."""


class OffsetOutOfRange(PdhlError):
    """A hole-center offset leaves the open cube (-1/4, 1/4)^d."""


class ShapeTooLarge(PdhlError):
    """A hole shape's circumradius exceeds the 1/8 cap of the reference cell."""


# ---------------------------------------------------------------------------
# discretization


class UnresolvedHoles(PdhlError):
    """The grid is too coarse to give every hole at least four nodes across."""


class InvalidExponent(PdhlError):
    """Lebesgue exponent p < 1 requested."""


# ---------------------------------------------------------------------------
# linear solvers


class NotConverged(PdhlError):
    """Iteration budget exhausted before the tolerance was met.

    Attributes
    ----------
    x : ndarray
        Best iterate at abort time.
    report : SolveReport
        Iteration count and final residual.
    """

    def __init__(self, message, x=None, report=None):
        super().__init__(message)
        self.x = x
        self.report = report


# ---------------------------------------------------------------------------
# correctors / exterior profiles


class TruncationTooSmall(PdhlError):
    """Truncation radius below 8x the shape circumradius."""


class UnresolvedShape(PdhlError):
    """Grid too coarse to resolve the hole shape in an exterior solve."""


class MissingProfile(PdhlError):
    """No HoleProfile supplied for a shape present in the domain."""


# ---------------------------------------------------------------------------
# intermediate problems


class ShapeMismatch(PdhlError):
    """Field arrays passed together do not share a common grid shape."""


# ---------------------------------------------------------------------------
# constants laboratory


class InvalidArguments(PdhlError):
    """Arguments outside a formula's stated range (e.g. phi_p with R <= 2)."""


class EmptyTrials(PdhlError):
    """estimate_constant called with an explicitly empty trial list."""


class TooFewPoints(PdhlError):
    """Exponent fit attempted on fewer than three points."""


class NonpositiveData(PdhlError):
    """Exponent fit attempted on data with nonpositive x or y values."""


# ---------------------------------------------------------------------------
# harness


class ConfigInvalid(PdhlError):
    """Experiment configuration file failed validation."""


class OutputUnwritable(PdhlError):
    """Output directory cannot be created or written."""
