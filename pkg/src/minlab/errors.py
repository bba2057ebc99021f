"""Exception hierarchy shared by every minlab module."""


class MinlabError(Exception):
    """Base class for all library errors."""


class OutOfChart(MinlabError):
    """A point lies outside the coordinate chart of the base manifold."""


class DegenerateConfiguration(MinlabError):
    """Point pairs do not determine an isometry (too few or collinear)."""


class GridTooSmall(MinlabError):
    pass


class OddOrderZero(MinlabError):
    """The Hopf coefficient has a zero of odd order inside the domain."""


class ZeroDilatation(MinlabError):
    """Both h_w and h_wbar vanish on an open set (constant map)."""


class ZeroModulus(MinlabError):
    pass


class PeriodDefect(MinlabError):
    """Re(eta) has a non-zero period around some grid cell."""


class DegenerateMetric(MinlabError):
    pass


class LoopDefectExceeded(MinlabError):
    """The associate march is not path independent to the requested tolerance."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class ChartExit(MinlabError):
    """The marched horizontal map left the chart of the base manifold."""

    def __init__(self, message, partial=None, location=None):
        super().__init__(message)
        self.partial = partial
        self.location = location


class QuadratureFailure(MinlabError):
    pass


class ZeroSpeed(MinlabError):
    pass


class BranchAmbiguity(MinlabError):
    pass


class InconclusiveTail(MinlabError):
    pass


class BundleFormatError(MinlabError):
    """A JSON bundle or config file is malformed."""
