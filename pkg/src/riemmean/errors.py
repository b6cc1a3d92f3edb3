"""Exception hierarchy shared across the package.

All domain failures derive from :class:`RiemmeanError` so callers (and the
CLI) can distinguish them from programming errors.  The short names used in
CLI error reporting are the class names without the ``Error`` suffix.
"""


class RiemmeanError(Exception):
    """Base class for all domain errors raised by this package."""

    @property
    def short_name(self) -> str:
        name = type(self).__name__
        return name[:-5] if name.endswith("Error") else name


class InvalidInputError(RiemmeanError):
    """An argument violates a documented precondition (bad shape, wrong
    manifold, non-symmetric matrix, ...)."""


class CutLocusError(RiemmeanError):
    """A point lies in (or too close to) the cut locus of a base point, so
    the minimal geodesic / logarithm is not uniquely defined."""


class MaxIterExceededError(RiemmeanError):
    """An iterative solver hit its iteration cap without converging."""


class NoConvergenceError(RiemmeanError):
    """Every started solve failed; no usable minimizer was produced."""


class DegenerateSpectrumError(RiemmeanError):
    """An SPD matrix has a (near-)repeated eigenvalue, so its
    eigendecomposition fiber is not a finite group orbit."""


class RadiusTooLargeError(RiemmeanError):
    """A requested ball radius exceeds the injectivity radius needed for an
    even covering."""


class LiftAmbiguousError(RiemmeanError):
    """Two fiber points landed in one covering ball; indicates inconsistent
    radius/displacement data."""


class UnsupportedManifoldError(RiemmeanError):
    """The requested operation is not implemented for this manifold kind."""
