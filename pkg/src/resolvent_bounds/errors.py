"""Exception hierarchy.

Bad input raises ``ValueError``; anything numerical that fails at run time
derives from :class:`NumericalError` and may carry the parameter-space
location where it happened.
"""

from __future__ import annotations


class NumericalError(RuntimeError):
    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


class RootFindingError(NumericalError):
    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class SingularDerivativeError(NumericalError):
    pass


class TrackingError(NumericalError):
    pass


class CriticalIsolationError(NumericalError):
    pass


class AmbiguousClusteringError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    pass
