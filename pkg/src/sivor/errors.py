"""Exception types raised across the package."""


class SivorError(Exception):
    """Base class for every error raised by this package."""


class NonConvex(SivorError):
    pass


class OriginOutside(SivorError):
    pass


class ParallelSides(SivorError):
    pass


class Degenerate(SivorError):
    pass


class Unbounded(SivorError):
    pass


class GPViolation(Degenerate):
    """Two sites span a direction parallel to a side of the gauge polygon."""


class DuplicateSites(SivorError):
    pass


class SeedNotConflicting(SivorError):
    pass


class DummyDeletion(SivorError):
    pass


class InconsistentConflictIndex(SivorError):
    pass


class TauTooSmall(SivorError):
    pass


class DifferentClusters(SivorError):
    pass


class MissingClusterRootRep(SivorError):
    pass


class KTooLarge(SivorError):
    pass


class OutsideFrame(SivorError):
    pass


class PointOutsideFrame(OutsideFrame):
    pass


class MTooLarge(SivorError):
    pass


class BadEpsilon(SivorError):
    pass


class UnknownPreset(SivorError):
    pass


class UnknownSuite(SivorError):
    pass
