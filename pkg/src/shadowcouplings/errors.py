"""Exception types shared across the package."""


class CouplingError(Exception):
    """Base class for all domain errors raised by this package."""


class ZeroMass(CouplingError):
    """Operation requires strictly positive total mass."""


class OutOfRange(CouplingError):
    """Quantile level or window outside [0, mass]."""


class MassMismatch(CouplingError):
    """Two measures were expected to carry the same total mass."""


class BarycenterMismatch(CouplingError):
    """Two measures were expected to share their barycenter."""


class NegativeMass(CouplingError):
    """A subtraction produced mass below -tolerance."""


class NotDominated(CouplingError):
    """Source measure is not dominated by the target in the required order."""


class NotInConvexOrder(CouplingError):
    """Marginals are not in convex order; no martingale coupling exists."""


class OutsideHull(CouplingError):
    """Point lies outside [inf T, sup T] of the closed set."""


class EmptySet(CouplingError):
    """Closed set is empty where a nonempty one is required."""


class OrderViolation(CouplingError):
    """Arguments violate a required ordering (e.g. nested slice edges)."""


class BoundaryMismatch(CouplingError):
    """Cost breakpoint p does not coincide with a slab boundary."""


class MaxStepsExceeded(CouplingError):
    """Too many simulated paths failed to hit the barrier within the cap."""
