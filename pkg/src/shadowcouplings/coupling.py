"""Martingale couplings, lifted couplings and the shadow construction.

The central constructor :func:`shadow_coupling` turns a lift of mu and a
target nu in convex order into the unique lifted martingale coupling whose
released y-mass at every level u is the shadow of the revealed part of mu.
Slabs are processed in increasing u; within a slab the conditional's atoms
are shadowed one at a time (in increasing position) into the running
residual, which keeps the y-mass prefix at every slab boundary exact.

Verification predicates for the equivalent characterizations live here as
well: the conditional-mean check, the monotone-support scan, the
shadow-marginal comparison, kernel extraction with the Lipschitz test, and
the structural two-graph check for curtain couplings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostSpec
from .errors import (
    MassMismatch,
    NotInConvexOrder,
    OrderViolation,
    OutOfRange,
)
from .lift import Lift, canonical_lift
from .measure import (
    EPS,
    DiscreteMeasure,
    add,
    leq_convex,
    scale,
    subtract,
    w1,
)
from .sets import Barrier, ClosedSet, closed_support, dilation, extend_to_I
from .shadow import shadow, shadow_atom


# ---------------------------------------------------------------------------
# couplings
# ---------------------------------------------------------------------------


class Coupling:
    """Sparse transport plan: entries (x, y, mass) with positive mass."""

    __slots__ = ("xs", "ys", "ms")

    def __init__(self, entries=()):
        rows = [(float(x), float(y), float(m)) for x, y, m in entries if m > 0.0]
        rows.sort()
        xs, ys, ms = [], [], []
        for x, y, m in rows:
            if xs and abs(x - xs[-1]) <= EPS and abs(y - ys[-1]) <= EPS:
                ms[-1] += m
            else:
                xs.append(x)
                ys.append(y)
                ms.append(m)
        self.xs = np.asarray(xs)
        self.ys = np.asarray(ys)
        self.ms = np.asarray(ms)
        for arr in (self.xs, self.ys, self.ms):
            arr.setflags(write=False)

    @property
    def mass(self) -> float:
        return float(self.ms.sum())

    @property
    def n_entries(self) -> int:
        return int(self.ms.size)

    def entries(self):
        return list(zip(self.xs.tolist(), self.ys.tolist(), self.ms.tolist()))

    def x_marginal(self) -> DiscreteMeasure:
        return DiscreteMeasure(zip(self.xs, self.ms))

    def y_marginal(self) -> DiscreteMeasure:
        return DiscreteMeasure(zip(self.ys, self.ms))

    def kernel(self, x: float) -> DiscreteMeasure:
        """Conditional law at x, normalized to mass one."""
        sel = np.abs(self.xs - x) <= EPS * (1.0 + abs(x))
        if not sel.any():
            raise OutOfRange(f"{x} is not an atom of the first marginal")
        total = self.ms[sel].sum()
        return DiscreteMeasure(zip(self.ys[sel], self.ms[sel] / total))

    def scaled(self, c: float) -> "Coupling":
        return Coupling(zip(self.xs, self.ys, self.ms * c))

    def __repr__(self):
        return f"Coupling({self.n_entries} entries, mass {self.mass:g})"


@dataclass(frozen=True)
class LiftedCoupling:
    """u-sliced coupling: slices (u0, u1, Coupling carrying mass u1 - u0)."""

    slices: tuple  # of (u0, u1, Coupling)

    def boundaries(self) -> list:
        return [s[0] for s in self.slices] + [1.0]

    def project(self) -> Coupling:
        rows = []
        for _, _, c in self.slices:
            rows += list(zip(c.xs, c.ys, c.ms))
        return Coupling(rows)

    def y_prefix(self, u: float) -> DiscreteMeasure:
        """y-marginal of the part of the coupling with first coordinate <= u."""
        out = DiscreteMeasure.empty()
        for u0, u1, c in self.slices:
            if u <= u0 + 1e-12:
                break
            frac = min(1.0, (u - u0) / (u1 - u0))
            out = add(out, scale(c.y_marginal(), frac))
        return out

    def y_marginal_between(self, a: float, b: float) -> DiscreteMeasure:
        out = DiscreteMeasure.empty()
        for u0, u1, c in self.slices:
            overlap = max(0.0, min(b, u1) - max(a, u0))
            if overlap > 0.0:
                out = add(out, scale(c.y_marginal(), overlap / (u1 - u0)))
        return out

    def x_lift(self) -> Lift:
        """The lift this coupling transports (slice x-marginals, normalized)."""
        pieces = []
        for u0, u1, c in self.slices:
            pieces.append((u0, u1, scale(c.x_marginal(), 1.0 / (u1 - u0))))
        return Lift(tuple(pieces))


def project(lc: LiftedCoupling) -> Coupling:
    return lc.project()


def kernel(c: Coupling, x: float) -> DiscreteMeasure:
    return c.kernel(x)


def dilation_coupling(m: DiscreteMeasure, t: ClosedSet) -> Coupling:
    """Couple each atom of m with its two-point hitting law into t."""
    rows = []
    for x, w in m.atoms():
        for y, q in dilation(t, x).atoms():
            rows.append((x, y, w * q))
    return Coupling(rows)


# ---------------------------------------------------------------------------
# shadow construction
# ---------------------------------------------------------------------------


def shadow_coupling(l: Lift, nu: DiscreteMeasure, k: int = 1) -> LiftedCoupling:
    """The lifted shadow coupling of the lift l and target nu.

    After refining every piece into k equal slabs, slabs are processed in
    increasing u; the slab coupling assigns each conditional atom (in
    increasing position) to its shadow in the running residual.  At every
    slab boundary u the accumulated y-mass equals the shadow of prefix(u)
    exactly, and each slab coupling is conditionally a martingale.
    """
    mu = l.marginal()
    if not leq_convex(mu, nu, tol=1e-7):
        raise NotInConvexOrder("lift marginal and target are not in convex order")
    lift = l.refine(k)
    res = nu
    slices = []
    for u0, u1, cond in lift.pieces:
        du = u1 - u0
        rows = []
        for x, w in cond.atoms():
            sigma = shadow_atom(res, x, du * w)
            rows += [(x, y, m) for y, m in sigma.atoms()]
            res = subtract(res, sigma, redistribute=True)
        slices.append((u0, u1, Coupling(rows)))
    return LiftedCoupling(tuple(slices))


def support_breakpoints(l: Lift, nu: DiscreteMeasure, tol: float = 1e-12) -> list:
    """u levels at which the residual support of the construction changes.

    While the residual support T is constant the residual atom masses drain
    at the constant rates given by the conditional pushed through the
    dilation onto T, so the exhaustion times can be computed exactly.
    Splitting a lift at these levels makes every slab of shadow_coupling a
    pure dilation slab.
    """
    ws = nu.ws.astype(float).copy()
    xs = nu.xs
    breaks = []
    for u0, u1, cond in l.pieces:
        u = u0
        guard = 0
        while u < u1 - tol:
            guard += 1
            if guard > nu.n_atoms + 2:
                break
            alive = ws > tol
            t = ClosedSet.build(points=xs[alive].tolist())
            rates = np.zeros_like(ws)
            for x, w in cond.atoms():
                for y, q in dilation(t, x).atoms():
                    j = int(np.searchsorted(xs, y))
                    if j >= xs.size or xs[j] != y:
                        j = int(np.argmin(np.abs(xs - y)))
                    rates[j] += w * q
            with np.errstate(divide="ignore", invalid="ignore"):
                ttl = np.where(rates > tol, ws / np.maximum(rates, tol), np.inf)
            du = float(ttl[alive].min()) if alive.any() else np.inf
            step = min(du, u1 - u)
            ws = ws - step * rates
            ws[ws <= tol] = 0.0
            u += step
            if du < u1 - u0 and u < u1 - tol:
                breaks.append(u)
    return breaks


def build_shadow_coupling(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    lift_name: str = "left-curtain",
    lift: Lift = None,
    slices: int = None,
    exact_slabs: bool = True,
):
    """Construct the lift (preset or given) and its shadow coupling.

    slices, when set, refines the lift so the total slab count reaches at
    least that value.  With exact_slabs the lift is additionally split at
    the residual support breakpoints, which makes every slab a dilation
    slab and the construction exact at any resolution.

    Returns (lift, lifted_coupling).
    """
    l = canonical_lift(lift_name, mu) if lift is None else lift
    if slices is not None and slices > len(l.pieces):
        k = int(np.ceil(slices / len(l.pieces)))
        l = l.refine(k)
    if exact_slabs:
        l = l.split_at(support_breakpoints(l, nu))
    return l, shadow_coupling(l, nu, 1)


def shadow_curve(l: Lift, nu: DiscreteMeasure, grid) -> list:
    """Shadows of prefix(u) in nu along the grid; nondecreasing in <=_+."""
    mu = l.marginal()
    if not leq_convex(mu, nu, tol=1e-7):
        raise NotInConvexOrder("lift marginal and target are not in convex order")
    return [shadow(nu, l.prefix(float(u)), check=False) for u in grid]


def barrier_family(l: Lift, nu: DiscreteMeasure, grid=None) -> Barrier:
    """Sections R_u: support of the unreleased y-mass, extended by rays.

    The default grid is the set of slab boundaries of l enriched by the
    residual support breakpoints, so sections are exact on every slab.
    """
    if grid is None:
        grid = sorted(set(l.boundaries()[:-1]) | set(support_breakpoints(l, nu)))
    grid = sorted(float(u) for u in grid)
    if not grid or grid[0] > 0.0:
        grid = [0.0] + grid
    curve = shadow_curve(l, nu, grid)
    lo, hi = float(nu.xs.min()), float(nu.xs.max())
    sections = []
    for released in curve:
        res = subtract(nu, released, redistribute=False) if released.mass > 0 else nu
        sections.append(extend_to_I(closed_support(res, tol=EPS), lo, hi))
    return Barrier(tuple(grid), tuple(sections))


# ---------------------------------------------------------------------------
# classical comparisons
# ---------------------------------------------------------------------------


def stochastic_shadow(nu: DiscreteMeasure, u: float) -> DiscreteMeasure:
    """Smallest mass-u sub-measure of nu in stochastic order: the leftmost
    quantile window."""
    return nu.quantile_window(0.0, u * nu.mass if abs(nu.mass - 1) > EPS else u)


def stochastic_shadow_coupling(l: Lift, nu: DiscreteMeasure) -> LiftedCoupling:
    """Replace shadows by stochastic shadows in the slab construction.

    The released y-mass up to u is the leftmost mass-u window of nu
    regardless of the lift, so each slab couples its conditional with the
    matching window as a product.  The quantile lift then reproduces the
    quantile coupling and the product lift the independent coupling.
    """
    if abs(nu.mass - 1.0) > 1e-9:
        raise MassMismatch("stochastic shadow coupling needs a probability target")
    slices = []
    for u0, u1, cond in l.pieces:
        window = nu.quantile_window(u0, u1 - u0)
        rows = [
            (x, y, wx * wy)
            for x, wx in cond.atoms()
            for y, wy in window.atoms()
        ]
        slices.append((u0, u1, Coupling(rows)))
    return LiftedCoupling(tuple(slices))


def quantile_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Coupling:
    """Comonotone coupling pairing equal quantile levels."""
    if abs(mu.mass - nu.mass) > EPS * (1 + mu.mass):
        raise MassMismatch("quantile coupling needs equal masses")
    levels = np.unique(np.concatenate([[0.0], mu.cum, nu.cum]))
    rows = []
    for a, b in zip(levels[:-1], levels[1:]):
        if b - a <= 0:
            continue
        rows.append((mu.quantile(b), nu.quantile(b), b - a))
    return Coupling(rows)


def product_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Coupling:
    """Independent coupling of two probability measures."""
    if abs(mu.mass - 1.0) > 1e-9 or abs(nu.mass - 1.0) > 1e-9:
        raise MassMismatch("product coupling is defined for probability measures")
    return Coupling(
        (x, y, wx * wy) for x, wx in mu.atoms() for y, wy in nu.atoms()
    )


def middle_slice_formula(
    f: float, g: float, f_outer: float, g_outer: float, center: float
) -> Coupling:
    """Explicit mass-one slice coupling of a centered two-point conditional
    a*delta_f + b*delta_g onto the outer pair (f_outer, g_outer).

    Requires f_outer <= f <= center <= g <= g_outer; the inner weights are
    fixed by a*f + b*g = center, a + b = 1, and each inner atom is spread
    onto the outer pair by the two-point dilation.
    """
    if not (f_outer <= f + EPS and f <= center + EPS and center <= g + EPS and g <= g_outer + EPS):
        raise OrderViolation(
            f"need f_outer <= f <= center <= g <= g_outer, got "
            f"{f_outer}, {f}, {center}, {g}, {g_outer}"
        )
    outer = ClosedSet.build(points=[f_outer, g_outer])
    if g - f <= EPS:
        inner = [(center, 1.0)]
    else:
        a = (g - center) / (g - f)
        inner = [(f, a), (g, 1.0 - a)]
    rows = []
    for x, wx in inner:
        for y, q in dilation(outer, x).atoms():
            rows.append((x, y, wx * q))
    return Coupling(rows)


# ---------------------------------------------------------------------------
# costs and distances
# ---------------------------------------------------------------------------


def cost(lc: LiftedCoupling, spec: CostSpec) -> float:
    """Integral of the cost against the lifted coupling, with the u-factor
    integrated exactly over each slab."""
    total = 0.0
    for u0, u1, c in lc.slices:
        for x, y, m in zip(c.xs, c.ys, c.ms):
            total += spec.slab_mean(u0, u1, x, y) * m
    return total


def coupling_distance(a: Coupling, b: Coupling, weights: DiscreteMeasure = None) -> float:
    """Distance between couplings with a common first marginal: the
    weighted average over x of W1 between the conditional kernels."""
    if weights is None:
        weights = a.x_marginal()
    total = 0.0
    for x, w in weights.atoms():
        total += w * w1(a.kernel(x), b.kernel(x))
    return total / weights.mass


# ---------------------------------------------------------------------------
# verification predicates
# ---------------------------------------------------------------------------


@dataclass
class CheckReport:
    name: str
    passed: bool
    value: float
    tol: float
    details: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "pass": bool(self.passed),
            "value": self.value,
            "tol": self.tol,
            "details": self.details,
        }


def check_martingale(obj, tol: float = 1e-9) -> CheckReport:
    """Largest conditional-mean defect |sum_y (y - x) mass| over x (and slices)."""

    def worst_of(c: Coupling):
        worst, arg = 0.0, None
        for x in np.unique(c.xs):
            sel = np.abs(c.xs - x) <= EPS * (1 + abs(x))
            r = abs(float(((c.ys[sel] - x) * c.ms[sel]).sum()))
            if r > worst:
                worst, arg = r, float(x)
        return worst, arg

    details = []
    if isinstance(obj, LiftedCoupling):
        worst = 0.0
        for u0, u1, c in obj.slices:
            r, arg = worst_of(c)
            if r > worst:
                worst = r
                details = [{"u0": u0, "u1": u1, "x": arg, "defect": r}]
    else:
        worst, arg = worst_of(obj)
        details = [{"x": arg, "defect": worst}]
    return CheckReport("martingale", worst <= tol, worst, tol, details)


def check_monotone(lc: LiftedCoupling, tol: float = 1e-6) -> CheckReport:
    """Scan for support triples violating monotonicity across slices.

    A violation is an earlier slice sending some x to two points y- < y+
    and a later slice sending some x' strictly between them (with tol
    guards replacing the strict inequalities).
    """
    violations = []
    intervals = []  # (lo, hi, slice_idx, x) from earlier slices
    for t, (u0, u1, c) in enumerate(lc.slices):
        for x, y, m in zip(c.xs, c.ys, c.ms):
            if m <= EPS:
                continue
            for lo, hi, s, xs_ in intervals:
                if lo + tol < y < hi - tol:
                    violations.append(
                        {
                            "earlier_slice": s,
                            "x": xs_,
                            "y_minus": lo,
                            "y_plus": hi,
                            "later_slice": t,
                            "x_prime": float(x),
                            "y_prime": float(y),
                        }
                    )
                    break
        for x in np.unique(c.xs):
            sel = (np.abs(c.xs - x) <= EPS * (1 + abs(x))) & (c.ms > EPS)
            if not sel.any():
                continue
            lo, hi = float(c.ys[sel].min()), float(c.ys[sel].max())
            if hi - lo > 2 * tol:
                intervals.append((lo, hi, t, float(x)))
    return CheckReport(
        "monotone", len(violations) == 0, float(len(violations)), tol, violations
    )


def check_shadow_property(
    lc: LiftedCoupling, l: Lift, nu: DiscreteMeasure, tol: float = 1e-9
) -> CheckReport:
    """W1 between the released y-mass and the shadow of prefix(u) at every
    slab boundary; zero by construction for shadow couplings."""
    worst, details = 0.0, []
    for u in lc.boundaries():
        if u <= 0.0:
            continue
        emp = lc.y_prefix(u)
        ref = shadow(nu, l.prefix(u), check=False)
        d = w1(emp, ref)
        if d > worst:
            worst = d
            details = [{"u": float(u), "w1": d}]
    return CheckReport("shadow", worst <= tol, worst, tol, details)


def check_lipschitz(c: Coupling, tol: float = 1e-6) -> CheckReport:
    """Kernel Lipschitz test: W1(pi_x, pi_x') <= |x - x'| + tol for all pairs."""
    xs = c.x_marginal().xs
    kernels = [c.kernel(float(x)) for x in xs]
    worst, details = -np.inf, []
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            excess = w1(kernels[i], kernels[j]) - abs(float(xs[i] - xs[j]))
            if excess > worst:
                worst = excess
                details = [
                    {"x": float(xs[i]), "x_prime": float(xs[j]), "excess": excess}
                ]
    if not details:
        worst = 0.0
    return CheckReport("lipschitz", worst <= tol, float(worst), tol, details)


def two_graph_report(lc: LiftedCoupling, tol: float = 1e-9) -> CheckReport:
    """Structural check for curtain couplings.

    Every slice kernel is a (at most) two-point dilation; over the
    projection, with T1/T2 the extreme destinations of each source atom,
    T1(x) <= x <= T2(x), T2 is strictly increasing, and no later T1 lands
    strictly inside an earlier fan (T1(x), T2(x)).
    """
    problems = []
    for s, (u0, u1, c) in enumerate(lc.slices):
        for x in np.unique(c.xs):
            sel = (np.abs(c.xs - x) <= EPS * (1 + abs(x))) & (c.ms > EPS)
            if int(sel.sum()) > 2:
                problems.append({"slice": s, "x": float(x), "support": int(sel.sum())})
    proj = lc.project()
    xs = proj.x_marginal().xs
    t1, t2 = [], []
    for x in xs:
        k = proj.kernel(float(x))
        supp = k.support(EPS)
        t1.append(float(supp.min()))
        t2.append(float(supp.max()))
        if not (t1[-1] <= x + tol and x <= t2[-1] + tol):
            problems.append({"x": float(x), "t1": t1[-1], "t2": t2[-1]})
    for i in range(len(xs) - 1):
        if not t2[i] < t2[i + 1] + tol:
            problems.append({"x": float(xs[i]), "t2_not_increasing": (t2[i], t2[i + 1])})
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            if t1[i] + tol < t1[j] < t2[i] - tol:
                problems.append(
                    {"x": float(xs[i]), "x_prime": float(xs[j]), "t1_inside_fan": t1[j]}
                )
    return CheckReport("two-graph", not problems, float(len(problems)), tol, problems)
