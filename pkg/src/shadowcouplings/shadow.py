"""Shadow projections onto atomic target measures.

The shadow of a sub-measure inside a target is the smallest measure in
convex order that dominates the source while staying below the target
atom-by-atom; equivalently the most concentrated piece of the target that
the source can be diffused into.  For a single atom it is a quantile window
of the target whose barycenter matches the atom position; a general source
is handled by splitting it into atoms (in increasing position) and chaining
window extractions against the running residual, which is associative.
"""

from __future__ import annotations

import numpy as np

from .errors import NotDominated
from .measure import (
    EPS,
    DiscreteMeasure,
    leq_convex_positive,
    subtract,
)

# Slack accepted when solving the window barycenter equation; looser than
# EPS because residuals accumulate rounding over long shadow iterations.
WINDOW_SLACK = 1e-7


def _window_breakpoints(target: DiscreteMeasure, a: float) -> np.ndarray:
    """Start levels s at which an edge of the window (s, s+a) crosses an atom."""
    total = target.mass
    smax = total - a
    cum = target.cum
    cand = np.concatenate([[0.0, smax], cum, cum - a])
    cand = cand[(cand > 0.0) & (cand < smax)]
    return np.unique(np.concatenate([[0.0, smax], cand]))


def shadow_atom(
    target: DiscreteMeasure, x: float, a: float, slack: float = WINDOW_SLACK
) -> DiscreteMeasure:
    """Shadow of the atom a * delta_x in target.

    Returns the quantile window of mass a whose barycenter is x.  The window
    first moment is continuous, nondecreasing and piecewise linear in the
    start level s, so the equation is solved exactly by scanning breakpoints
    and interpolating linearly; among an interval of solutions (a flat
    stretch, which yields the same window measure) the smallest s is taken.
    Boundary atoms (x at an edge of the target hull) are covered by the same
    equation, with the window pinned at the corresponding end.
    """
    total = target.mass
    if a <= 0.0:
        return DiscreteMeasure.empty()
    if a > total + EPS * (1.0 + total):
        raise NotDominated(f"window mass {a} exceeds target mass {total}")
    a = min(a, total)
    if total - a <= EPS:
        got = target.barycenter
        if abs(got - x) > slack * (1.0 + abs(x)):
            raise NotDominated(f"full-mass window has barycenter {got}, not {x}")
        return target
    breaks = _window_breakpoints(target, a)
    moments = np.array([target.window_moment(s, a) for s in breaks])
    t_mom = x * a
    tol = slack * (1.0 + abs(t_mom) + np.abs(moments).max())
    if t_mom < moments[0] - tol or t_mom > moments[-1] + tol:
        raise NotDominated(
            f"atom {a}*delta_{x} not dominated: moment {t_mom} outside "
            f"[{moments[0]}, {moments[-1]}]"
        )
    t_mom = min(max(t_mom, moments[0]), moments[-1])
    i = int(np.searchsorted(moments, t_mom, side="left"))
    if i == 0:
        s = breaks[0]
    else:
        m0, m1 = moments[i - 1], moments[i]
        s0, s1 = breaks[i - 1], breaks[i]
        s = s0 if m1 <= m0 else s0 + (t_mom - m0) * (s1 - s0) / (m1 - m0)
    return target.quantile_window(s, a)


def shadow(
    target: DiscreteMeasure, source: DiscreteMeasure, check: bool = True
) -> DiscreteMeasure:
    """Shadow of source in target.

    The source is decomposed into its atoms in increasing position and each
    atom is shadowed into the running residual; the sum is independent of
    the decomposition (associativity of shadows), the fixed order just makes
    the computation reproducible.
    """
    if check and not leq_convex_positive(source, target, tol=1e-7):
        raise NotDominated("source is not below target in positive convex order")
    res = target
    parts = []
    for x, w in source.atoms():
        sigma = shadow_atom(res, x, w)
        parts.append(sigma)
        res = subtract(res, sigma, redistribute=True)
    out = DiscreteMeasure.empty()
    for sigma in parts:
        out = DiscreteMeasure(out.atoms() + sigma.atoms())
    return out


def residual(target: DiscreteMeasure, source: DiscreteMeasure) -> DiscreteMeasure:
    """target - shadow(target, source); the mass still available."""
    return subtract(target, shadow(target, source), redistribute=True)
