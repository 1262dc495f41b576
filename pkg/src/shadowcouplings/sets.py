"""Closed subsets of the line and the associated two-point dilation.

A :class:`ClosedSet` is a finite union of points, closed intervals and
unbounded rays, kept disjoint, sorted and maximal.  The dilation sends a
point x inside the hull of T to itself if x is in T, and otherwise to the
two-point law on the nearest T-points left and right of x whose mean is x.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySet, OutsideHull
from .measure import EPS, DiscreteMeasure


@dataclass(frozen=True)
class ClosedSet:
    """Disjoint union of closed components (a, b) with a <= b.

    Rays are encoded with infinite endpoints: (-inf, a] and [b, +inf).
    Points are components with a == b.
    """

    components: tuple = field(default_factory=tuple)

    @classmethod
    def from_components(cls, comps) -> "ClosedSet":
        comps = [(float(a), float(b)) for a, b in comps]
        for a, b in comps:
            if a > b:
                raise ValueError(f"component ({a}, {b}) reversed")
        comps.sort()
        merged = []
        for a, b in comps:
            if merged and a <= merged[-1][1] + EPS:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return cls(tuple(merged))

    @classmethod
    def build(cls, points=(), intervals=(), left_ray=None, right_ray=None) -> "ClosedSet":
        comps = [(float(p), float(p)) for p in points]
        comps += [(float(a), float(b)) for a, b in intervals]
        if left_ray is not None:
            comps.append((-np.inf, float(left_ray)))
        if right_ray is not None:
            comps.append((float(right_ray), np.inf))
        return cls.from_components(comps)

    @property
    def is_empty(self) -> bool:
        return len(self.components) == 0

    @property
    def inf(self) -> float:
        if self.is_empty:
            raise EmptySet("inf of empty set")
        return self.components[0][0]

    @property
    def sup(self) -> float:
        if self.is_empty:
            raise EmptySet("sup of empty set")
        return self.components[-1][1]

    def contains(self, x: float, tol: float = EPS) -> bool:
        return any(a - tol <= x <= b + tol for a, b in self.components)

    def contains_interior(self, x: float, tol: float = EPS) -> bool:
        """Strictly inside an interval or ray component."""
        return any(a + tol < x < b - tol for a, b in self.components)

    def levels(self) -> np.ndarray:
        """All finite component endpoints, sorted (crossing targets)."""
        vals = [v for c in self.components for v in c if np.isfinite(v)]
        return np.unique(np.asarray(vals, dtype=float))

    def nearest_left(self, x: float) -> float:
        """sup(T intersect (-inf, x]); -inf if no component lies left of x."""
        best = -np.inf
        for a, b in self.components:
            if a <= x:
                best = max(best, min(b, x))
        return best

    def nearest_right(self, x: float) -> float:
        best = np.inf
        for a, b in self.components[::-1]:
            if b >= x:
                best = min(best, max(a, x))
        return best

    def issubset(self, other: "ClosedSet", tol: float = EPS) -> bool:
        for a, b in self.components:
            lo = a if np.isfinite(a) else (other.inf if not other.is_empty else 0.0)
            hi = b if np.isfinite(b) else (other.sup if not other.is_empty else 0.0)
            # a component must sit inside a single component of other
            ok = any(
                oa - tol <= lo and hi <= ob + tol for oa, ob in other.components
            )
            if not ok:
                return False
        return True

    # -- JSON --------------------------------------------------------------

    def to_json_dict(self) -> dict:
        points, intervals = [], []
        left = right = None
        for a, b in self.components:
            if a == -np.inf:
                left = b
            elif b == np.inf:
                right = a
            elif a == b:
                points.append(a)
            else:
                intervals.append([a, b])
        return {
            "points": points,
            "intervals": intervals,
            "rays": {"left": left, "right": right},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, d: dict) -> "ClosedSet":
        rays = d.get("rays", {}) or {}
        return cls.build(
            points=d.get("points", ()),
            intervals=d.get("intervals", ()),
            left_ray=rays.get("left"),
            right_ray=rays.get("right"),
        )

    @classmethod
    def from_json(cls, s: str) -> "ClosedSet":
        return cls.from_json_dict(json.loads(s))


def closed_support(m: DiscreteMeasure, tol: float = EPS) -> ClosedSet:
    """Support of an atomic measure: its atom positions with mass above tol."""
    return ClosedSet.build(points=m.support(tol).tolist())


def extend_to_I(t: ClosedSet, lo: float = None, hi: float = None) -> ClosedSet:
    """Attach rays (-inf, min] and [max, +inf) so the set is unbounded both ways.

    The dilation of any x in [inf t, sup t] is unchanged by the added rays.
    lo/hi, when given, bound the rays from outside (used for barrier sections,
    where they are the extremes of the target support); they also make the
    extension of an empty set well defined.
    """
    if t.is_empty:
        if lo is None or hi is None:
            raise EmptySet("cannot extend an empty set without bounds")
        return ClosedSet.build(left_ray=lo, right_ray=hi)
    comps = list(t.components)
    left = t.inf if lo is None else min(t.inf, lo)
    right = t.sup if hi is None else max(t.sup, hi)
    if np.isfinite(left):
        comps.append((-np.inf, left))
    if np.isfinite(right):
        comps.append((right, np.inf))
    return ClosedSet.from_components(comps)


@dataclass(frozen=True)
class Barrier:
    """A nonincreasing family of closed sections indexed by u in [0,1].

    sections[i] is the section in force on [grid[i], grid[i+1]); the family
    satisfies R_v subset R_u for u <= v (a left barrier read along u).
    """

    grid: tuple  # sorted u values, starting at 0.0
    sections: tuple  # ClosedSet per grid value

    def __post_init__(self):
        if len(self.grid) != len(self.sections) or not self.grid:
            raise ValueError("grid and sections must align and be nonempty")
        if any(b <= a for a, b in zip(self.grid[:-1], self.grid[1:])):
            raise ValueError("grid must be strictly increasing")

    def section_at(self, u: float) -> ClosedSet:
        idx = int(np.searchsorted(self.grid, u, side="right")) - 1
        return self.sections[max(idx, 0)]

    def is_nested(self, tol: float = EPS) -> bool:
        return all(
            later.issubset(earlier, tol)
            for earlier, later in zip(self.sections[:-1], self.sections[1:])
        )

    def to_rows(self):
        """Rows (u, component_type, a, b) for CSV emission."""
        rows = []
        for u, sec in zip(self.grid, self.sections):
            for a, b in sec.components:
                if a == -np.inf:
                    rows.append((u, "ray_left", a, b))
                elif b == np.inf:
                    rows.append((u, "ray_right", a, b))
                elif a == b:
                    rows.append((u, "point", a, b))
                else:
                    rows.append((u, "interval", a, b))
        return rows

    @classmethod
    def from_rows(cls, rows) -> "Barrier":
        by_u = {}
        for u, kind, a, b in rows:
            by_u.setdefault(float(u), []).append((float(a), float(b)))
        grid = tuple(sorted(by_u))
        sections = tuple(ClosedSet.from_components(by_u[u]) for u in grid)
        return cls(grid, sections)


def dilation(t: ClosedSet, x: float) -> DiscreteMeasure:
    """Two-point hitting law of x into t: identity on t, else the unique
    mean-x law on the nearest t-points left and right of x."""
    if t.is_empty:
        raise EmptySet("dilation into empty set")
    if x < t.inf - EPS or x > t.sup + EPS:
        raise OutsideHull(f"{x} outside [{t.inf}, {t.sup}]")
    if t.contains(x):
        return DiscreteMeasure.point(x)
    left = t.nearest_left(x)
    right = t.nearest_right(x)
    span = right - left
    wl = (right - x) / span
    wr = (x - left) / span
    return DiscreteMeasure([(left, wl), (right, wr)])
