"""Exception hierarchy shared by all hyplab modules."""


class LabError(Exception):
    """Base class for every error raised by hyplab."""


class DegenerateBoundaryPair(LabError, ValueError):
    pass


class CoincidentPoints(LabError, ValueError):
    pass


class DisksOverlap(LabError, ValueError):
    pass


class DegenerateDisk(LabError, ValueError):
    pass


class BudgetExceeded(LabError, RuntimeError):
    pass


class OutOfRange(LabError, ValueError):
    pass


class InsufficientDepth(LabError, ValueError):
    pass


class EmptyCatalog(LabError, ValueError):
    pass


class EmptyAnnulus(LabError, ValueError):
    pass


class ShadowTooNarrow(LabError, ValueError):
    pass


class ConfigError(LabError, ValueError):
    pass


class ElementaryGroupWarning(UserWarning):
    """Issued for groups whose limit set is finite."""
