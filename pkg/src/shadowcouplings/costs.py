"""Cost functions on (u, x, y) for lifted transport problems.

Three kinds are supported:

* ``cpq``: indicator-in-u times distance-to-strike, 1_{u <= p} |y - q|.
  Its integral against a lifted coupling only sees the y-mass released
  before level p, which is what makes it certify the shadow-marginal
  property boundary by boundary.
* ``separable``: phi(u) * psi(y) with phi nonincreasing and psi convex;
  the canonical choice is (1 - u) * sqrt(1 + y^2).
* ``plain``: a u-independent cost c(x, y).

Slab weights integrate the u-factor exactly over each slab, so slab-level
costs agree with the continuum integral for piecewise-constant couplings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _simpson(f, a: float, b: float) -> float:
    return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))


@dataclass(frozen=True)
class CostSpec:
    kind: str
    p: float = None
    q: float = None
    u_factor: object = None
    y_factor: object = None
    u_integral: object = None  # exact integral of u_factor over [a, b]
    xy: object = None

    @classmethod
    def cpq(cls, p: float, q: float) -> "CostSpec":
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p={p} outside [0,1]")
        return cls(kind="cpq", p=float(p), q=float(q))

    @classmethod
    def separable(cls, u_factor, y_factor, u_integral=None) -> "CostSpec":
        return cls(
            kind="separable",
            u_factor=u_factor,
            y_factor=y_factor,
            u_integral=u_integral,
        )

    @classmethod
    def plain(cls, xy) -> "CostSpec":
        return cls(kind="plain", xy=xy)

    def slab_mean(self, u0: float, u1: float, x: float, y: float) -> float:
        """Average of the cost over u in the slab (u0, u1), at fixed (x, y)."""
        du = u1 - u0
        if self.kind == "cpq":
            overlap = max(0.0, min(u1, self.p) - u0)
            return overlap / du * abs(y - self.q)
        if self.kind == "separable":
            if self.u_integral is not None:
                phi = self.u_integral(u0, u1)
            else:
                phi = _simpson(self.u_factor, u0, u1)
            return phi / du * self.y_factor(y)
        if self.kind == "plain":
            return self.xy(x, y)
        raise ValueError(f"unknown cost kind {self.kind}")

    def validate_shape(self, us, ys):
        """Check monotonicity/convexity of the factors on the given grids."""
        if self.kind == "separable":
            vals = [self.u_factor(u) for u in sorted(us)]
            if any(b > a + 1e-12 for a, b in zip(vals[:-1], vals[1:])):
                raise ValueError("u_factor must be nonincreasing")
            ys = sorted(ys)
            f = [self.y_factor(y) for y in ys]
            for i in range(1, len(ys) - 1):
                lam = (ys[i] - ys[i - 1]) / (ys[i + 1] - ys[i - 1])
                chord = (1 - lam) * f[i - 1] + lam * f[i + 1]
                if f[i] > chord + 1e-9 * (1 + abs(chord)):
                    raise ValueError("y_factor must be convex on the atom set")


def sunset_cost() -> CostSpec:
    """The canonical strictly-decreasing-times-strictly-convex cost
    (1 - u) * sqrt(1 + y^2), with its exact slab integral."""
    return CostSpec.separable(
        u_factor=lambda u: 1.0 - u,
        y_factor=lambda y: float(np.sqrt(1.0 + y * y)),
        u_integral=lambda a, b: (b - a) * (1.0 - 0.5 * (a + b)),
    )


def curtain_xy_cost() -> CostSpec:
    """exp(-x) * sqrt(1 + y^2): strictly decreasing in x, strictly convex in
    y; its minimizer over martingale couplings is the left-curtain coupling."""
    return CostSpec.plain(lambda x, y: float(np.exp(-x) * np.sqrt(1.0 + y * y)))
