"""Exception types raised across vvlab."""


class VVLabError(Exception):
    pass


class NonZeroMean(VVLabError, ValueError):
    """Inversion or homogeneous norm requested on a field with a nonzero mean."""


class GridMismatch(VVLabError, ValueError):
    pass


class DegenerateBlock(VVLabError, ValueError):
    """The Littlewood-Paley block under audit is numerically zero."""


class NotDivergenceFree(VVLabError, ValueError):
    pass


class CflViolation(VVLabError, RuntimeError):
    pass


class Diverged(VVLabError, RuntimeError):
    pass


class InsufficientSamples(VVLabError, ValueError):
    pass


class MissingMonitor(VVLabError, KeyError):
    pass


class EmptyBand(VVLabError, ValueError):
    pass


class InsufficientPoints(VVLabError, ValueError):
    pass
