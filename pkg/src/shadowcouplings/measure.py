"""Finitely-atomic measures on the real line.

A :class:`DiscreteMeasure` is a finite list of weighted atoms, kept sorted
with strictly increasing positions.  It carries the quantile function, the
potential function t -> integral |x - t| dm, Wasserstein-1 distance and the
four order relations used throughout the package (convex, convex-positive,
stochastic and diatomic order).

All values are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import (
    BarycenterMismatch,
    MassMismatch,
    NegativeMass,
    OutOfRange,
    ZeroMass,
)

# Global tolerance for mass/position equality.  Atoms closer than EPS are
# merged; masses within EPS of zero are treated as deleted where the
# operation says so.
EPS = 1e-9


def _leq_tol(a: float, b: float, tol: float = EPS) -> bool:
    """a <= b up to slack tol * (1 + magnitude)."""
    return a - b <= tol * (1.0 + max(abs(a), abs(b)))


def _close(a: float, b: float, tol: float = EPS) -> bool:
    return abs(a - b) <= tol * (1.0 + max(abs(a), abs(b)))


def _merged_position(group_x, group_w):
    if len(group_x) == 1:
        return group_x[0]
    return sum(x * w for x, w in zip(group_x, group_w)) / sum(group_w)


class DiscreteMeasure:
    """Finite positive measure sum_i w_i * delta_{x_i} on the real line.

    Atoms are canonicalized on construction: sorted by position, positions
    closer than EPS merged at their mass-weighted average, zero masses
    dropped.  Negative masses are rejected.
    """

    __slots__ = ("xs", "ws", "_cum", "_xcum")

    def __init__(self, atoms=()):
        xs, ws = [], []
        for x, w in atoms:
            if w < -EPS:
                raise NegativeMass(f"negative atom mass {w} at {x}")
            if w <= 0.0:
                continue
            xs.append(float(x))
            ws.append(float(w))
        xs = np.asarray(xs, dtype=float)
        ws = np.asarray(ws, dtype=float)
        order = np.argsort(xs, kind="stable")
        xs, ws = xs[order], ws[order]
        # merge chains of atoms with consecutive gaps < EPS; positions of
        # singleton groups are kept bit-exact
        if xs.size > 1 and (np.diff(xs) < EPS).any():
            mx, mw = [], []
            group_x, group_w = [xs[0]], [ws[0]]
            for x, w in zip(xs[1:], ws[1:]):
                if x - group_x[-1] < EPS:
                    group_x.append(x)
                    group_w.append(w)
                else:
                    mx.append(_merged_position(group_x, group_w))
                    mw.append(sum(group_w))
                    group_x, group_w = [x], [w]
            mx.append(_merged_position(group_x, group_w))
            mw.append(sum(group_w))
            xs = np.asarray(mx)
            ws = np.asarray(mw)
        self.xs = xs
        self.ws = ws
        self.xs.setflags(write=False)
        self.ws.setflags(write=False)
        self._cum = None
        self._xcum = None

    @classmethod
    def from_arrays(cls, xs, ws) -> "DiscreteMeasure":
        return cls(zip(xs, ws))

    @classmethod
    def point(cls, x: float, w: float = 1.0) -> "DiscreteMeasure":
        return cls([(x, w)])

    @classmethod
    def empty(cls) -> "DiscreteMeasure":
        return cls(())

    # -- cached prefix sums over atoms ------------------------------------

    @property
    def cum(self) -> np.ndarray:
        """Cumulative masses c_k = w_1 + ... + w_k."""
        if self._cum is None:
            self._cum = np.cumsum(self.ws)
        return self._cum

    @property
    def xcum(self) -> np.ndarray:
        """Cumulative first moments sum_{i<=k} x_i w_i."""
        if self._xcum is None:
            self._xcum = np.cumsum(self.xs * self.ws)
        return self._xcum

    # -- basic functionals --------------------------------------------------

    @property
    def n_atoms(self) -> int:
        return int(self.xs.size)

    @property
    def is_empty(self) -> bool:
        return self.xs.size == 0

    @property
    def mass(self) -> float:
        return float(self.ws.sum())

    @property
    def first_moment(self) -> float:
        return float((self.xs * self.ws).sum())

    @property
    def barycenter(self) -> float:
        m = self.mass
        if m <= EPS:
            raise ZeroMass("barycenter of a (near) zero-mass measure")
        return self.first_moment / m

    def second_moment(self) -> float:
        return float((self.xs * self.xs * self.ws).sum())

    def potential(self, t: float) -> float:
        """integral |x - t| dm; convex and piecewise linear in t."""
        return float((self.ws * np.abs(self.xs - t)).sum())

    def call_value(self, t: float) -> float:
        """integral (x - t)^+ dm."""
        return float((self.ws * np.maximum(self.xs - t, 0.0)).sum())

    def put_value(self, t: float) -> float:
        """integral (t - x)^+ dm."""
        return float((self.ws * np.maximum(t - self.xs, 0.0)).sum())

    # -- quantiles ----------------------------------------------------------

    def quantile(self, s: float) -> float:
        """Left-continuous generalized inverse of the CDF at level s.

        Requires 0 < s <= mass (up to EPS slack).
        """
        m = self.mass
        if self.is_empty or s <= 0.0 or s > m + EPS * (1.0 + m):
            raise OutOfRange(f"quantile level {s} outside (0, {m}]")
        s = min(s, m)
        k = int(np.searchsorted(self.cum, s, side="left"))
        k = min(k, self.n_atoms - 1)
        return float(self.xs[k])

    def quantile_window(self, s: float, a: float) -> "DiscreteMeasure":
        """Push-forward of Lebesgue on (s, s+a) under the quantile function.

        The result is a sub-measure of self with mass exactly a, made of
        (possibly fractional) pieces of self's atoms.
        """
        m = self.mass
        if a < 0 or s < -EPS or s + a > m + EPS * (1.0 + m):
            raise OutOfRange(f"window ({s}, {s + a}) outside [0, {m}]")
        if a == 0.0:
            return DiscreteMeasure.empty()
        s = max(s, 0.0)
        hi = np.minimum(self.cum, s + a)
        lo = np.maximum(self.cum - self.ws, s)
        overlap = np.maximum(hi - lo, 0.0)
        keep = overlap > 0.0
        out = DiscreteMeasure.empty()
        out.xs = self.xs[keep].copy()
        out.ws = overlap[keep]
        out.xs.setflags(write=False)
        out.ws.setflags(write=False)
        return out

    def window_moment(self, s: float, a: float) -> float:
        """First moment of quantile_window(s, a), in O(log n)."""
        return self._xw(s + a) - self._xw(s)

    def _xw(self, q: float) -> float:
        # cumulative first moment of the leftmost q units of mass
        if q <= 0.0:
            return 0.0
        cum, xcum = self.cum, self.xcum
        q = min(q, cum[-1])
        k = int(np.searchsorted(cum, q, side="left"))
        k = min(k, self.n_atoms - 1)
        prev_c = cum[k - 1] if k > 0 else 0.0
        prev_x = xcum[k - 1] if k > 0 else 0.0
        return float(prev_x + self.xs[k] * (q - prev_c))

    # -- misc ----------------------------------------------------------------

    def support(self, tol: float = EPS) -> np.ndarray:
        """Positions of atoms with mass above tol."""
        return self.xs[self.ws > tol]

    def atoms(self):
        return list(zip(self.xs.tolist(), self.ws.tolist()))

    def approx_equal(self, other: "DiscreteMeasure", tol: float = EPS) -> bool:
        if not _close(self.mass, other.mass, tol):
            return False
        if self.is_empty and other.is_empty:
            return True
        return w1(self, other) <= tol * (1.0 + self.mass)

    def __repr__(self):
        inner = ", ".join(f"({x:g}, {w:g})" for x, w in self.atoms())
        return f"DiscreteMeasure([{inner}])"

    # -- JSON ------------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"atoms": [{"x": x, "m": w} for x, w in self.atoms()]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "DiscreteMeasure":
        return cls((a["x"], a["m"]) for a in d["atoms"])

    @classmethod
    def from_json(cls, s: str) -> "DiscreteMeasure":
        return cls.from_json_dict(json.loads(s))


# -- arithmetic ----------------------------------------------------------------


def scale(m: DiscreteMeasure, c: float) -> DiscreteMeasure:
    """c * m for c >= 0."""
    if c < 0:
        raise NegativeMass(f"scale factor {c} < 0")
    if c == 0.0 or m.is_empty:
        return DiscreteMeasure.empty()
    out = DiscreteMeasure.empty()
    out.xs = m.xs
    out.ws = m.ws * c
    out.ws.setflags(write=False)
    return out


def add(a: DiscreteMeasure, b: DiscreteMeasure) -> DiscreteMeasure:
    return DiscreteMeasure(a.atoms() + b.atoms())


def subtract(
    a: DiscreteMeasure,
    b: DiscreteMeasure,
    redistribute: bool = False,
) -> DiscreteMeasure:
    """a - b, matching b's atoms to a's positions within EPS.

    Resulting masses below -EPS raise NegativeMass; masses with absolute
    value below EPS are clamped to deletion.  With redistribute=True the
    deleted mass is spread proportionally over the surviving atoms so the
    total stays exactly mass(a) - mass(b) (used by iterated shadow
    subtraction to avoid drift over thousands of steps).
    """
    if b.is_empty:
        return a
    ws = a.ws.copy()
    for x, w in zip(b.xs, b.ws):
        k = int(np.searchsorted(a.xs, x))
        best, bestd = -1, np.inf
        for j in (k - 1, k):
            if 0 <= j < a.n_atoms:
                d = abs(a.xs[j] - x)
                if d < bestd:
                    best, bestd = j, d
        if best < 0 or bestd >= EPS:
            raise NegativeMass(f"no atom of minuend near {x}")
        ws[best] -= w
    scale_ = 1.0 + a.mass
    if ws.min(initial=0.0) < -EPS * scale_:
        raise NegativeMass(f"subtraction gives mass {ws.min()}")
    target = a.mass - b.mass
    keep = ws > EPS
    if not keep.any() or target <= EPS:
        return DiscreteMeasure.empty()
    xs, ws = a.xs[keep], ws[keep]
    if redistribute:
        ws = ws * (target / ws.sum())
    out = DiscreteMeasure.empty()
    out.xs = xs.copy()
    out.ws = ws
    out.xs.setflags(write=False)
    out.ws.setflags(write=False)
    return out


# -- Wasserstein-1 ---------------------------------------------------------------


def w1(a: DiscreteMeasure, b: DiscreteMeasure) -> float:
    """Wasserstein-1 distance between equal-mass measures.

    Computed as integral |F_a - F_b| dt, which realizes the Lipschitz-dual
    definition for measures of equal total mass.
    """
    if not _close(a.mass, b.mass):
        raise MassMismatch(f"w1 of masses {a.mass} != {b.mass}")
    if a.is_empty and b.is_empty:
        return 0.0
    xs = np.unique(np.concatenate([a.xs, b.xs]))
    fa = np.concatenate([[0.0], a.cum])[np.searchsorted(a.xs, xs, side="right")]
    fb = np.concatenate([[0.0], b.cum])[np.searchsorted(b.xs, xs, side="right")]
    if xs.size < 2:
        return 0.0
    return float((np.abs(fa - fb)[:-1] * np.diff(xs)).sum())


# -- order relations --------------------------------------------------------------


def _check_grid(a: DiscreteMeasure, b: DiscreteMeasure) -> np.ndarray:
    return np.unique(np.concatenate([a.xs, b.xs]))


def leq_convex(a: DiscreteMeasure, b: DiscreteMeasure, tol: float = EPS) -> bool:
    """a <=_c b: equal mass and mean, potential of a below potential of b.

    Exact for atomic measures when checked at the union of atom positions
    (the potentials are piecewise linear there, with equal asymptotes).
    """
    if not _close(a.mass, b.mass, tol):
        return False
    if not _close(a.first_moment, b.first_moment, tol):
        return False
    for t in _check_grid(a, b):
        if not _leq_tol(a.potential(t), b.potential(t), tol):
            return False
    return True


def leq_convex_positive(
    a: DiscreteMeasure, b: DiscreteMeasure, tol: float = EPS
) -> bool:
    """a <=_{c,+} b via the call/put characterization.

    Positive convex functions are generated by constants, calls (x-t)^+ and
    puts (t-x)^+, so it is enough that mass(a) <= mass(b) and both call and
    put values of a stay below those of b at every atom position.
    """
    if not _leq_tol(a.mass, b.mass, tol):
        return False
    for t in _check_grid(a, b):
        if not _leq_tol(a.call_value(t), b.call_value(t), tol):
            return False
        if not _leq_tol(a.put_value(t), b.put_value(t), tol):
            return False
    return True


def leq_stochastic(a: DiscreteMeasure, b: DiscreteMeasure, tol: float = EPS) -> bool:
    """a <=_st b: quantile dominance at every jump level (equal masses)."""
    if not _close(a.mass, b.mass, tol):
        raise MassMismatch(f"stochastic order needs equal masses, got {a.mass}, {b.mass}")
    if a.is_empty:
        return True
    levels = np.unique(np.concatenate([a.cum, b.cum]))
    for s in levels:
        if s <= 0:
            continue
        if a.quantile(s) > b.quantile(s) + tol:
            return False
    return True


def leq_diatomic(a: DiscreteMeasure, b: DiscreteMeasure, tol: float = 1e-7) -> bool:
    """Diatomic order: centered windows of a dominated by those of b in <=_c.

    Both measures must have mass one and a common barycenter m.  The check
    compares the centered quantile windows of mass u (the measures whose
    derivative drives the middle-curtain construction) in convex order for
    every u.  Between breakpoints of either window family the potentials are
    linear in u, so checking at the union of breakpoints is exact.
    """
    if not _close(a.mass, 1.0) or not _close(b.mass, 1.0):
        raise MassMismatch("diatomic order is defined for probability measures")
    if not _close(a.barycenter, b.barycenter, 1e-7):
        raise BarycenterMismatch(
            f"diatomic order needs equal barycenters, got {a.barycenter}, {b.barycenter}"
        )
    from .lift import lift_middle  # local import to avoid a cycle

    la, lb = lift_middle(a), lift_middle(b)
    grid = sorted(set(la.boundaries()) | set(lb.boundaries()))
    for u in grid:
        if u <= 0.0:
            continue
        if not leq_convex(la.prefix(u), lb.prefix(u), tol):
            return False
    return True
