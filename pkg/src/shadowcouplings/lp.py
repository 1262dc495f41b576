"""Dense two-phase primal simplex with Bland's rule.

Solves min c.x subject to A x = b, x >= 0.  Bland's rule (always pick the
lowest eligible index) rules out cycling, and the explicit dense tableau is
plenty at the problem sizes this package generates (thousands of variables
at most).  Redundant equality rows are detected at the end of phase one and
dropped.  Dual multipliers are read off the artificial columns so optima
can be verified against complementary slackness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9


@dataclass
class LpProblem:
    """min c.x  s.t.  A_eq x = b_eq, A_ub x <= b_ub, x >= 0."""

    c: np.ndarray
    a_eq: np.ndarray = None
    b_eq: np.ndarray = None
    a_ub: np.ndarray = None
    b_ub: np.ndarray = None

    def standard_form(self):
        """Append slack variables for the inequality block."""
        c = np.asarray(self.c, dtype=float)
        n = c.size
        blocks, rhs = [], []
        n_slack = 0 if self.a_ub is None else np.asarray(self.a_ub).shape[0]
        if self.a_eq is not None and len(self.a_eq):
            a = np.asarray(self.a_eq, dtype=float)
            blocks.append(np.hstack([a, np.zeros((a.shape[0], n_slack))]))
            rhs.append(np.asarray(self.b_eq, dtype=float))
        if n_slack:
            a = np.asarray(self.a_ub, dtype=float)
            blocks.append(np.hstack([a, np.eye(n_slack)]))
            rhs.append(np.asarray(self.b_ub, dtype=float))
        full_a = np.vstack(blocks)
        full_b = np.concatenate(rhs)
        full_c = np.concatenate([c, np.zeros(n_slack)])
        return full_c, full_a, full_b, n


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray = None
    objective: float = None
    dual: np.ndarray = None  # one multiplier per standard-form row
    row_kept: np.ndarray = None  # mask of rows found linearly independent

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pivot(tab, obj, basis, row, col):
    tab[row] /= tab[row, col]
    factor = tab[:, col].copy()
    factor[row] = 0.0
    tab -= np.outer(factor, tab[row])
    obj -= obj[col] * tab[row]
    basis[row] = col
    return obj


def _iterate(tab, obj, basis, allowed, max_iter):
    m = tab.shape[0]
    for _ in range(max_iter):
        # Bland: entering variable = lowest index with negative reduced cost
        eligible = np.nonzero(allowed & (obj[:-1] < -PIVOT_TOL))[0]
        if eligible.size == 0:
            return "optimal", obj
        enter = int(eligible[0])
        col = tab[:, enter]
        ratios = np.full(m, np.inf)
        ok = col > PIVOT_TOL
        ratios[ok] = tab[ok, -1] / col[ok]
        best = ratios.min()
        if not np.isfinite(best):
            return "unbounded", obj
        # Bland tie-break: smallest basic variable index among the argmins
        cand = np.nonzero(ratios <= best + PIVOT_TOL * (1 + abs(best)))[0]
        leave = cand[np.argmin([basis[r] for r in cand])]
        obj = _pivot(tab, obj, basis, leave, enter)
    raise RuntimeError("simplex did not terminate (iteration cap hit)")


def solve_lp(problem: LpProblem, max_iter: int = None) -> LpSolution:
    c, a, b, n_orig = problem.standard_form()
    m, n = a.shape
    if b.size != m or c.size != n:
        raise ValueError("dimension mismatch in LP data")
    flip = b < 0
    a = a.copy()
    b = b.copy()
    a[flip] *= -1.0
    b[flip] *= -1.0
    if max_iter is None:
        max_iter = 2000 + 200 * (m + n)

    # phase one: artificial basis
    tab = np.hstack([a, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    obj1 = np.concatenate([np.zeros(n), np.ones(m), [0.0]])
    obj1 = obj1 - tab.sum(axis=0) * 1.0
    obj1[n : n + m] = 0.0
    allowed = np.ones(n + m, dtype=bool)
    status, obj1 = _iterate(tab, obj1, basis, allowed, max_iter)
    if status != "optimal" or -obj1[-1] > FEAS_TOL * (1 + abs(b).max(initial=0.0)):
        return LpSolution(status="infeasible")

    # drive artificials out of the basis; rows that cannot pivot are redundant
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] >= n:
            piv = -1
            for j in range(n):
                if abs(tab[r, j]) > 1e-8:
                    piv = j
                    break
            if piv >= 0:
                obj1 = _pivot(tab, obj1, basis, r, piv)
            else:
                keep[r] = False
    rows = np.nonzero(keep)[0]
    tab = tab[rows]
    basis = [basis[r] for r in rows]

    # phase two
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    obj2 = np.concatenate([c, np.zeros(m), [0.0]])
    for r, bv in enumerate(basis):
        if obj2[bv] != 0.0:
            obj2 = obj2 - obj2[bv] * tab[r]
    status, obj2 = _iterate(tab, obj2, basis, allowed, max_iter)
    if status != "optimal":
        return LpSolution(status=status)

    x = np.zeros(n)
    for r, bv in enumerate(basis):
        if bv < n:
            x[bv] = tab[r, -1]
    # duals: reduced cost of artificial column i is -y_i (c_art = 0); the
    # artificial block spans all original rows, including redundant ones
    dual = (-obj2[n : n + m]).copy()
    dual[flip] *= -1.0
    return LpSolution(
        status="optimal",
        x=x[:n_orig],
        objective=float(c @ x),
        dual=dual,
        row_kept=keep,
    )


def verify_optimum(problem: LpProblem, sol: LpSolution, tol: float = 1e-8) -> float:
    """Complementary-slackness residual of a claimed optimum (weak duality).

    Returns the largest violation among primal feasibility, dual
    feasibility (nonnegative reduced costs) and x_j * reduced_cost_j = 0.
    """
    c, a, b, _ = problem.standard_form()
    n_slack = 0 if problem.a_ub is None else np.asarray(problem.a_ub).shape[0]
    x = np.asarray(sol.x, dtype=float)
    if n_slack:
        slack = np.asarray(problem.b_ub, dtype=float) - np.asarray(problem.a_ub) @ x
        x = np.concatenate([x, slack])
    resid = float(np.abs(a @ x - b).max(initial=0.0))
    resid = max(resid, float(-x.min(initial=0.0)))
    reduced = c - a.T @ sol.dual
    resid = max(resid, float(-reduced.min(initial=0.0)))
    resid = max(resid, float(np.abs(x * reduced).max(initial=0.0)))
    return resid
