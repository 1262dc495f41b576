"""Parametrizations of a probability measure over the unit interval.

A :class:`Lift` couples Lebesgue measure on [0,1] with a probability
measure mu, stored as a piecewise-constant family of conditionals: pieces
(u_lo, u_hi, conditional) partition [0,1] (half-open on the right; the
measure-zero boundary convention never affects outputs) and each
conditional is a probability measure.  Integrating the conditionals over u
recovers mu.

Four canonical constructions are provided: the quantile lift (atoms
revealed left to right), its mirror image, the product lift (all of mu at
every u) and the middle lift (centered windows growing around the
barycenter), driving the left-curtain, right-curtain, sunset and
middle-curtain couplings respectively.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import MassMismatch
from .measure import EPS, DiscreteMeasure, add, scale, w1


@dataclass(frozen=True)
class Lift:
    """Piecewise-constant coupling of Lebesgue on [0,1] with a measure."""

    pieces: tuple  # of (u_lo, u_hi, DiscreteMeasure with mass 1)

    def __post_init__(self):
        u = 0.0
        for u0, u1, cond in self.pieces:
            if not (abs(u0 - u) <= 1e-12 and u1 > u0):
                raise ValueError(f"pieces do not tile [0,1]: gap at {u0} (expected {u})")
            if abs(cond.mass - 1.0) > 1e-9:
                raise MassMismatch(f"conditional on ({u0},{u1}) has mass {cond.mass}")
            u = u1
        if self.pieces and abs(u - 1.0) > 1e-9:
            raise ValueError(f"pieces end at {u}, not 1")

    def boundaries(self) -> list:
        return [p[0] for p in self.pieces] + [1.0]

    def marginal(self) -> DiscreteMeasure:
        """Integral of the conditionals over u (recovers mu)."""
        out = DiscreteMeasure.empty()
        for u0, u1, cond in self.pieces:
            out = add(out, scale(cond, u1 - u0))
        return out

    def prefix(self, u: float) -> DiscreteMeasure:
        """Mass revealed up to level u: integral of conditionals over [0, u]."""
        if u < -1e-12 or u > 1.0 + 1e-12:
            raise ValueError(f"prefix level {u} outside [0,1]")
        out = DiscreteMeasure.empty()
        for u0, u1, cond in self.pieces:
            if u <= u0:
                break
            out = add(out, scale(cond, min(u, u1) - u0))
        return out

    def conditional_at(self, u: float) -> DiscreteMeasure:
        """Conditional of the piece containing u (pieces are [u_lo, u_hi))."""
        for u0, u1, cond in self.pieces:
            if u0 <= u < u1 or (u1 == 1.0 and u == 1.0):
                return cond
        raise ValueError(f"u={u} outside [0,1]")

    def refine(self, k: int) -> "Lift":
        """Split every piece into k equal sub-pieces with the same conditional."""
        if k < 1:
            raise ValueError("refinement factor must be >= 1")
        if k == 1:
            return self
        out = []
        for u0, u1, cond in self.pieces:
            edges = np.linspace(u0, u1, k + 1)
            out += [(float(a), float(b), cond) for a, b in zip(edges[:-1], edges[1:])]
        return Lift(tuple(out))

    def split_at(self, levels) -> "Lift":
        """Insert piece boundaries at the given u levels (conditionals kept)."""
        levels = sorted(u for u in levels if 0.0 < u < 1.0)
        out = []
        for u0, u1, cond in self.pieces:
            cuts = [u for u in levels if u0 + 1e-12 < u < u1 - 1e-12]
            edges = [u0] + cuts + [u1]
            out += [(a, b, cond) for a, b in zip(edges[:-1], edges[1:])]
        return Lift(tuple(out))

    # -- JSON ----------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "pieces": [
                {"u0": u0, "u1": u1, "conditional": cond.to_json_dict()}
                for u0, u1, cond in self.pieces
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "Lift":
        return cls(
            tuple(
                (p["u0"], p["u1"], DiscreteMeasure.from_json_dict(p["conditional"]))
                for p in d["pieces"]
            )
        )

    @classmethod
    def from_json(cls, s: str) -> "Lift":
        return cls.from_json_dict(json.loads(s))


def _require_probability(m: DiscreteMeasure):
    if abs(m.mass - 1.0) > 1e-9:
        raise MassMismatch(f"lift requires a probability measure, mass is {m.mass}")


def lift_quantile(m: DiscreteMeasure) -> Lift:
    """Atoms revealed in increasing position: piece k is (c_{k-1}, c_k, delta_{x_k})."""
    _require_probability(m)
    pieces, u = [], 0.0
    for x, w in m.atoms():
        pieces.append((u, u + w, DiscreteMeasure.point(x)))
        u += w
    pieces[-1] = (pieces[-1][0], 1.0, pieces[-1][2])
    return Lift(tuple(pieces))


def lift_reverse_quantile(m: DiscreteMeasure) -> Lift:
    """Atoms revealed in decreasing position (mirror of lift_quantile)."""
    _require_probability(m)
    pieces, u = [], 0.0
    for x, w in m.atoms()[::-1]:
        pieces.append((u, u + w, DiscreteMeasure.point(x)))
        u += w
    pieces[-1] = (pieces[-1][0], 1.0, pieces[-1][2])
    return Lift(tuple(pieces))


def lift_product(m: DiscreteMeasure) -> Lift:
    """Independent coupling: a single piece (0, 1, m)."""
    _require_probability(m)
    return Lift(((0.0, 1.0, m),))


def lift_middle(m: DiscreteMeasure) -> Lift:
    """Centered windows: prefix(u) is the mass-u quantile window of m whose
    barycenter is the barycenter of m.

    The window grows symmetrically in barycenter (not in mass): while its
    edges sit on atoms f < g the conditional is a*delta_f + b*delta_g with
    a*f + b*g = barycenter and a + b = 1.  Pieces are the maximal
    u-intervals on which the edge pair (f, g) is constant; the breakpoints
    are found exactly by consuming the edge atoms at rates (a, b).
    """
    _require_probability(m)
    xs, ws = m.xs, m.ws
    bary = m.barycenter
    if m.n_atoms == 1:
        return Lift(((0.0, 1.0, DiscreteMeasure.point(float(xs[0]))),))

    pieces = []
    u = 0.0
    k = int(np.argmin(np.abs(xs - bary)))
    if abs(xs[k] - bary) < EPS:
        # an atom sits at the barycenter: consume it alone first
        li, ri = k - 1, k + 1
        left_avail = ws[li] if li >= 0 else 0.0
        right_avail = ws[ri] if ri < len(xs) else 0.0
        du = min(float(ws[k]), 1.0 - u)
        pieces.append((u, u + du, DiscreteMeasure.point(float(xs[k]))))
        u += du
    else:
        # barycenter strictly between atoms i and i+1
        li = int(np.searchsorted(xs, bary)) - 1
        ri = li + 1
        left_avail = float(ws[li])
        right_avail = float(ws[ri])

    while u < 1.0 - 1e-12:
        f, g = float(xs[li]), float(xs[ri])
        a = (g - bary) / (g - f)
        b = (bary - f) / (g - f)
        du = min(left_avail / a if a > 0 else np.inf,
                 right_avail / b if b > 0 else np.inf,
                 1.0 - u)
        cond = DiscreteMeasure([(f, a), (g, b)])
        pieces.append((u, u + du, cond))
        left_avail -= du * a
        right_avail -= du * b
        u += du
        if u >= 1.0 - 1e-12:
            break
        if left_avail <= 1e-12:
            li -= 1
            if li < 0:
                raise MassMismatch("ran out of mass left of the barycenter")
            left_avail = float(ws[li])
        if right_avail <= 1e-12:
            ri += 1
            if ri >= len(xs):
                raise MassMismatch("ran out of mass right of the barycenter")
            right_avail = float(ws[ri])
    pieces[-1] = (pieces[-1][0], 1.0, pieces[-1][2])
    return Lift(tuple(pieces))


CANONICAL_LIFTS = {
    "left-curtain": lift_quantile,
    "right-curtain": lift_reverse_quantile,
    "sunset": lift_product,
    "middle": lift_middle,
}


def canonical_lift(name: str, m: DiscreteMeasure) -> Lift:
    try:
        return CANONICAL_LIFTS[name](m)
    except KeyError:
        raise ValueError(
            f"unknown lift preset {name!r}; choose from {sorted(CANONICAL_LIFTS)}"
        ) from None


def validate(l: Lift, m: DiscreteMeasure, tol: float = EPS) -> bool:
    """Marginal property: the u-integral of the conditionals equals m."""
    marg = l.marginal()
    if abs(marg.mass - m.mass) > tol * (1 + m.mass):
        return False
    return w1(marg, m) <= tol * (1 + m.mass)
