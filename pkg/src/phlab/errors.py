"""Exception taxonomy shared by all phlab modules."""


class PhlabError(Exception):
    """Base class for all phlab errors."""


class SingularMatrix(PhlabError):
    """A matrix that must be invertible is numerically singular."""


class DimensionMismatch(PhlabError):
    """Block dimensions of two objects disagree, or a block is trivial."""


class DegenerateGaps(PhlabError):
    """The spectral gaps of a certificate are not strictly positive."""


class HolderInfeasible(PhlabError):
    """No admissible Holder exponent exists for the given data."""


class BunchingInfeasible(PhlabError):
    """The bunching inequality fails for every admissible exponent."""


class Infeasible(PhlabError):
    """An exponent-selection interval is empty."""


class NoAdmissibleDelta(PhlabError):
    """No dyadic radius satisfies the center-spread inequality."""


class DivergentSeries(PhlabError):
    """A series constant was requested with a non-negative rate."""


class OrderingViolated(PhlabError):
    """Partial-hyperbolicity ordering fails at a sample point."""


class NoConvergence(PhlabError):
    """A fixed-point iteration failed to converge."""


class SlopeBlowup(PhlabError):
    """A transformed graph violates the 1/3 slope budget."""


class SolveFailure(PhlabError):
    """A nodewise graph solve failed."""


class NoContraction(PhlabError):
    """Graph-transform iterates stopped contracting."""


class NoIntersection(PhlabError):
    """A leaf/leaf or leaf/line intersection left its search box."""


class AmbiguousIntersection(PhlabError):
    """Two distinct intersection solutions found inside the box."""


class NotCauchy(PhlabError):
    """Projectivized iterates failed the expected Cauchy rate."""


class DistortionViolation(PhlabError):
    """A distortion ratio left its proven interval by more than 10%."""


class InsufficientScales(PhlabError):
    """Fewer than the required number of dyadic scales produced pairs."""


class DegenerateSpectrum(PhlabError):
    """Consecutive Lyapunov exponent estimates are too close."""


class ChartFailure(PhlabError):
    """No admissible chart scale was found at a point."""


class PropertyFailure(PhlabError):
    """A rescaled-chart property failed; message names the item."""


class BudgetExceeded(PhlabError):
    """A globalized map exceeds its Lipschitz budget."""


class ConfigInvalid(PhlabError):
    """An experiment configuration failed validation."""


class MissingArtifacts(PhlabError):
    """A report was requested for artifacts that do not exist."""
