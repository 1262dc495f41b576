"""LP certification of optimality properties of shadow couplings.

``mot_lp`` solves the one-step martingale transport problem between atomic
marginals.  ``lifted_mot_lp`` solves its lifted version over slab-constant
slice couplings; for an indicator-in-u cost whose breakpoint p sits on a
slab boundary this restriction is exact, which is what ``certify_optimal``
uses: it sweeps all boundaries p and all target atoms q and checks that the
given coupling matches the LP optimum for every such cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostSpec
from .coupling import Coupling, LiftedCoupling, cost as coupling_cost
from .errors import BoundaryMismatch, NotInConvexOrder
from .lift import Lift
from .lp import LpProblem, LpSolution, solve_lp, verify_optimum
from .measure import EPS, DiscreteMeasure, leq_convex

CS_TOL = 1e-8  # accepted complementary-slackness residual of each optimum


def _prune(m: DiscreteMeasure) -> DiscreteMeasure:
    # drop zero-mass atoms before LP assembly
    return DiscreteMeasure((x, w) for x, w in m.atoms() if w > EPS)


def mot_lp(mu: DiscreteMeasure, nu: DiscreteMeasure, cost) -> tuple:
    """Optimal martingale transport between atomic marginals.

    cost is a plain CostSpec or a callable c(x, y).  Returns
    (optimal value, optimal Coupling).
    """
    if not leq_convex(mu, nu, tol=1e-7):
        raise NotInConvexOrder("marginals are not in convex order")
    if isinstance(cost, CostSpec):
        if cost.kind != "plain":
            raise ValueError("mot_lp certifies u-independent costs; use lifted_mot_lp")
        fn = cost.xy
    else:
        fn = cost
    mu, nu = _prune(mu), _prune(nu)
    nx, ny = mu.n_atoms, nu.n_atoms
    nvar = nx * ny
    cvec = np.array([fn(x, y) for x in mu.xs for y in nu.xs], dtype=float)
    rows, rhs = [], []
    for i in range(nx):  # x-marginal
        r = np.zeros(nvar)
        r[i * ny : (i + 1) * ny] = 1.0
        rows.append(r)
        rhs.append(mu.ws[i])
    for j in range(ny):  # y-marginal
        r = np.zeros(nvar)
        r[j::ny] = 1.0
        rows.append(r)
        rhs.append(nu.ws[j])
    for i in range(nx):  # conditional mean
        r = np.zeros(nvar)
        r[i * ny : (i + 1) * ny] = nu.xs - mu.xs[i]
        rows.append(r)
        rhs.append(0.0)
    problem = LpProblem(c=cvec, a_eq=np.array(rows), b_eq=np.array(rhs))
    sol = solve_lp(problem)
    if not sol.optimal:
        raise NotInConvexOrder(f"martingale LP is {sol.status}")
    if verify_optimum(problem, sol) > CS_TOL * (1 + np.abs(cvec).max()):
        raise RuntimeError("simplex optimum failed the duality check")
    plan = Coupling(
        (mu.xs[i], nu.xs[j], sol.x[i * ny + j])
        for i in range(nx)
        for j in range(ny)
        if sol.x[i * ny + j] > 1e-12
    )
    return sol.objective, plan


def lifted_mot_lp(l: Lift, nu: DiscreteMeasure, cost: CostSpec, k: int = 1) -> tuple:
    """Optimal lifted martingale transport over slab-constant slice couplings.

    Each slab carries per-atom marginal and conditional-mean constraints;
    the target marginal couples the slabs.  The u-factor of the cost is
    integrated exactly per slab, so for an indicator cost 1_{u<=p}|y-q|
    with p on a slab boundary the slab restriction loses nothing.

    Returns (optimal value, LiftedCoupling).
    """
    if not leq_convex(l.marginal(), nu, tol=1e-7):
        raise NotInConvexOrder("lift marginal and target are not in convex order")
    lift = l.refine(k)
    if cost.kind == "cpq":
        bounds = np.asarray(lift.boundaries())
        if np.abs(bounds - cost.p).min() > 1e-9:
            raise BoundaryMismatch(
                f"cpq breakpoint p={cost.p} is not a slab boundary of the lift"
            )
    nu = _prune(nu)
    ny = nu.n_atoms
    cols = []  # (slab_idx, atom_idx_in_slab, x, weight_vector_cost)
    slabs = []
    for s, (u0, u1, cond) in enumerate(lift.pieces):
        atoms = [(float(x), float(w)) for x, w in cond.atoms() if w > EPS]
        slabs.append((u0, u1, atoms))
        for i, (x, w) in enumerate(atoms):
            cols.append((s, i, x, u0, u1))
    nvar = len(cols) * ny
    cvec = np.empty(nvar)
    for c_idx, (s, i, x, u0, u1) in enumerate(cols):
        for j, y in enumerate(nu.xs):
            cvec[c_idx * ny + j] = cost.slab_mean(u0, u1, x, float(y))
    rows, rhs = [], []
    for c_idx, (s, i, x, u0, u1) in enumerate(cols):  # slab x-marginal
        r = np.zeros(nvar)
        r[c_idx * ny : (c_idx + 1) * ny] = 1.0
        rows.append(r)
        rhs.append((u1 - u0) * slabs[s][2][i][1])
    for c_idx, (s, i, x, u0, u1) in enumerate(cols):  # slab conditional mean
        r = np.zeros(nvar)
        r[c_idx * ny : (c_idx + 1) * ny] = nu.xs - x
        rows.append(r)
        rhs.append(0.0)
    for j in range(ny):  # target marginal couples the slabs
        r = np.zeros(nvar)
        r[j::ny] = 1.0
        rows.append(r)
        rhs.append(nu.ws[j])
    problem = LpProblem(c=cvec, a_eq=np.array(rows), b_eq=np.array(rhs))
    sol = solve_lp(problem)
    if not sol.optimal:
        raise NotInConvexOrder(f"lifted martingale LP is {sol.status}")
    if verify_optimum(problem, sol) > CS_TOL * (1 + np.abs(cvec).max()):
        raise RuntimeError("simplex optimum failed the duality check")
    per_slab = {}
    for c_idx, (s, i, x, u0, u1) in enumerate(cols):
        for j, y in enumerate(nu.xs):
            m = sol.x[c_idx * ny + j]
            if m > 1e-12:
                per_slab.setdefault(s, []).append((x, float(y), float(m)))
    slices = tuple(
        (u0, u1, Coupling(per_slab.get(s, ())))
        for s, (u0, u1, atoms) in enumerate(slabs)
    )
    return sol.objective, LiftedCoupling(slices)


@dataclass
class CertificationReport:
    checks: list = field(default_factory=list)
    passed: bool = True

    def to_dict(self) -> dict:
        return {"checks": self.checks, "pass": bool(self.passed)}


def certify_optimal(
    lc: LiftedCoupling,
    l: Lift,
    nu: DiscreteMeasure,
    tol: float = 1e-7,
) -> CertificationReport:
    """Sweep indicator costs over all slab boundaries p and target atoms q
    and check that the coupling's cost never exceeds the LP optimum.

    A coupling passes all checks if and only if its released y-mass at each
    boundary matches the shadow of the revealed source mass there (the
    potential at the target atoms determines the released measure).
    """
    if l.boundaries() != lc.boundaries():
        l = l.split_at(lc.boundaries()[1:-1])
        if l.boundaries() != lc.boundaries():
            raise BoundaryMismatch("lift and coupling have incompatible slabs")
    report = CertificationReport()
    qs = [float(q) for q in nu.xs]
    for p in lc.boundaries():
        if p <= 0.0:
            continue
        for q in qs:
            spec = CostSpec.cpq(p, q)
            val, _ = lifted_mot_lp(l, nu, spec)
            got = coupling_cost(lc, spec)
            ok = got <= val + tol * (1.0 + abs(val))
            report.checks.append(
                {
                    "p": float(p),
                    "q": float(q),
                    "coupling_cost": float(got),
                    "lp_value": float(val),
                    "pass": bool(ok),
                }
            )
            if not ok:
                report.passed = False
    return report
