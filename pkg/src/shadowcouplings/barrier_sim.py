"""Monte Carlo verification of the barrier representation.

A path draws a level U and a start X0 from the lift, then runs a Gaussian
walk of step variance h until it crosses the barrier section attached to
U's slab.  Crossing (not exact hitting) is detected between consecutive
positions and the exit is snapped to the crossed level, which removes the
O(sqrt(h)) exit-position bias; a discrete walk almost surely never lands
exactly on a point, while a Brownian path crosses a level if and only if it
touches it, so crossing is the right discretization of hitting a point
section.

Randomness follows a counter-based contract: path i consumes only the
Philox-4x32-10 stream with key derived from the seed and counter prefixed
by the path index, so serial and parallel executions agree bit for bit and
reruns with the same config are identical.  The per-path walk is jitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .coupling import Coupling, LiftedCoupling
from .errors import MaxStepsExceeded
from .lift import Lift
from .measure import DiscreteMeasure, w1
from .sets import Barrier

_MASK = np.uint64(0xFFFFFFFF)
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SimConfig:
    paths: int = 100_000
    step: float = 1e-3
    seed: int = 0
    max_steps: int = 2_000_000
    rule: str = "closed"  # "closed" stops on touch, "open" on strict crossing

    def __post_init__(self):
        if self.paths < 1 or self.step <= 0.0:
            raise ValueError("need paths >= 1 and step > 0")
        if self.rule not in ("closed", "open"):
            raise ValueError(f"rule must be open or closed, not {self.rule!r}")


@dataclass
class SimResult:
    coupling: LiftedCoupling
    n_paths: int
    n_unstopped: int
    exit_mean: float
    exit_std: float
    config: SimConfig

    @property
    def exit_se(self) -> float:
        return self.exit_std / np.sqrt(max(self.n_paths - self.n_unstopped, 1))


@njit(inline="always")
def _philox_fill(blk, c1, c2, k0, k1, buf):
    # one round of philox4x32-10: counter (blk, c1, c2, 0), key (k0, k1)
    M0 = np.uint64(0xD2511F53)
    M1 = np.uint64(0xCD9E8D57)
    W0 = np.uint64(0x9E3779B9)
    W1 = np.uint64(0xBB67AE85)
    MASK = np.uint64(0xFFFFFFFF)
    x0, x1, x2, x3 = blk, c1, c2, np.uint64(0)
    kk0, kk1 = k0, k1
    for _ in range(10):
        p0 = M0 * x0
        p1 = M1 * x2
        y0 = ((p1 >> np.uint64(32)) ^ x1 ^ kk0) & MASK
        y1 = p1 & MASK
        y2 = ((p0 >> np.uint64(32)) ^ x3 ^ kk1) & MASK
        y3 = p0 & MASK
        x0, x1, x2, x3 = y0, y1, y2, y3
        kk0 = (kk0 + W0) & MASK
        kk1 = (kk1 + W1) & MASK
    scale = 1.0 / 4294967296.0
    buf[0] = (np.float64(x0) + 0.5) * scale
    buf[1] = (np.float64(x1) + 0.5) * scale
    buf[2] = (np.float64(x2) + 0.5) * scale
    buf[3] = (np.float64(x3) + 0.5) * scale


@njit
def _walk_paths(
    n_paths,
    seed_lo,
    seed_hi,
    sqrt_h,
    max_steps,
    open_rule,
    piece_u0,
    cond_off,
    cond_xs,
    cond_cum,
    grid,
    comp_off,
    comp_a,
    comp_b,
    lvl_off,
    lvls,
    out_u,
    out_piece,
    out_x0,
    out_xt,
):
    buf = np.empty(4)
    for p in range(n_paths):
        c1 = np.uint64(p) & _MASK
        c2 = (np.uint64(p) >> np.uint64(32)) & _MASK
        blk = np.uint64(0)
        pos = 4
        have_spare = False
        spare = 0.0

        # two uniforms: the level U and the start quantile
        if pos == 4:
            _philox_fill(blk, c1, c2, seed_lo, seed_hi, buf)
            blk += np.uint64(1)
            pos = 0
        u = buf[pos]
        pos += 1
        if pos == 4:
            _philox_fill(blk, c1, c2, seed_lo, seed_hi, buf)
            blk += np.uint64(1)
            pos = 0
        v = 1.0 - buf[pos]
        pos += 1

        k = np.searchsorted(piece_u0, u, side="right") - 1
        a0, a1 = cond_off[k], cond_off[k + 1]
        j = a0 + np.searchsorted(cond_cum[a0:a1], v, side="left")
        if j >= a1:
            j = a1 - 1
        x = cond_xs[j]
        out_u[p] = u
        out_piece[p] = k
        out_x0[p] = x

        s = np.searchsorted(grid, u, side="right") - 1
        ca, cb = comp_off[s], comp_off[s + 1]
        la, lb = lvl_off[s], lvl_off[s + 1]
        n_lvl = lb - la

        # immediate stop at the start
        inside = False
        for c in range(ca, cb):
            if comp_a[c] <= x <= comp_b[c]:
                if not open_rule or (comp_a[c] < x < comp_b[c]):
                    inside = True
                break
        if inside:
            out_xt[p] = x
            continue

        steps = 0
        if open_rule:
            # a start exactly on a level needs one plain step before its own
            # level becomes a strict-crossing target (ray boundaries target
            # themselves: one step into the ray interior stops the path)
            on_level = False
            for j2 in range(la, lb):
                if lvls[j2] == x:
                    on_level = True
                    break
            if on_level:
                iu = la + np.searchsorted(lvls[la:lb], x, side="right")
                up_t = lvls[iu] if iu < lb else x
                idn = la + np.searchsorted(lvls[la:lb], x, side="left") - 1
                dn_t = lvls[idn] if idn >= la else x
                if pos == 4:
                    _philox_fill(blk, c1, c2, seed_lo, seed_hi, buf)
                    blk += np.uint64(1)
                    pos = 0
                u1 = buf[pos]
                pos += 1
                if pos == 4:
                    _philox_fill(blk, c1, c2, seed_lo, seed_hi, buf)
                    blk += np.uint64(1)
                    pos = 0
                u2 = buf[pos]
                pos += 1
                r = math.sqrt(-2.0 * math.log(u1))
                z = r * math.cos(_TWO_PI * u2)
                spare = r * math.sin(_TWO_PI * u2)
                have_spare = True
                x = x + sqrt_h * z
                steps = 1
                if x > up_t:
                    out_xt[p] = up_t
                    continue
                if x < dn_t:
                    out_xt[p] = dn_t
                    continue

        if n_lvl == 0:
            # section is the whole line: starts always stop above
            out_xt[p] = x
            continue
        ilo = la + np.searchsorted(lvls[la:lb], x, side="left") - 1
        ihi = la + np.searchsorted(lvls[la:lb], x, side="right")
        lo = lvls[ilo] if ilo >= la else -np.inf
        hi = lvls[ihi] if ihi < lb else np.inf

        stopped = False
        while steps < max_steps:
            if have_spare:
                z = spare
                have_spare = False
            else:
                if pos == 4:
                    _philox_fill(blk, c1, c2, seed_lo, seed_hi, buf)
                    blk += np.uint64(1)
                    pos = 0
                u1 = buf[pos]
                pos += 1
                if pos == 4:
                    _philox_fill(blk, c1, c2, seed_lo, seed_hi, buf)
                    blk += np.uint64(1)
                    pos = 0
                u2 = buf[pos]
                pos += 1
                r = math.sqrt(-2.0 * math.log(u1))
                z = r * math.cos(_TWO_PI * u2)
                spare = r * math.sin(_TWO_PI * u2)
                have_spare = True
            x = x + sqrt_h * z
            steps += 1
            if open_rule:
                if x > hi:
                    out_xt[p] = hi
                    stopped = True
                    break
                if x < lo:
                    out_xt[p] = lo
                    stopped = True
                    break
            else:
                if x >= hi:
                    out_xt[p] = hi
                    stopped = True
                    break
                if x <= lo:
                    out_xt[p] = lo
                    stopped = True
                    break
        if not stopped:
            out_xt[p] = np.nan


def _flatten_lift(l: Lift):
    piece_u0 = np.array([p[0] for p in l.pieces])
    off = [0]
    xs, cum = [], []
    for _, _, cond in l.pieces:
        xs.extend(cond.xs.tolist())
        c = np.cumsum(cond.ws) / cond.mass
        cum.extend(c.tolist())
        off.append(len(xs))
    return piece_u0, np.array(off, dtype=np.int64), np.array(xs), np.array(cum)


def _flatten_barrier(b: Barrier):
    grid = np.asarray(b.grid)
    comp_off, comp_a, comp_b = [0], [], []
    lvl_off, lvls = [0], []
    for sec in b.sections:
        for a, bb in sec.components:
            comp_a.append(a)
            comp_b.append(bb)
        comp_off.append(len(comp_a))
        for v in sec.levels():
            lvls.append(float(v))
        lvl_off.append(len(lvls))
    return (
        grid,
        np.array(comp_off, dtype=np.int64),
        np.array(comp_a),
        np.array(comp_b),
        np.array(lvl_off, dtype=np.int64),
        np.array(lvls),
    )


def simulate(l: Lift, b: Barrier, cfg: SimConfig) -> SimResult:
    """Empirical lifted coupling of the barrier hitting construction.

    Sections must be unbounded on both sides (rays attached), which makes
    the hitting time almost surely finite.  Paths still running after
    max_steps are dropped and counted; more than 0.1% of them raises
    MaxStepsExceeded.
    """
    for sec in b.sections:
        if np.isfinite(sec.inf) or np.isfinite(sec.sup):
            raise ValueError("barrier sections must carry rays on both sides")
    piece_u0, cond_off, cond_xs, cond_cum = _flatten_lift(l)
    grid, comp_off, comp_a, comp_b, lvl_off, lvls = _flatten_barrier(b)
    n = cfg.paths
    out_u = np.empty(n)
    out_piece = np.empty(n, dtype=np.int64)
    out_x0 = np.empty(n)
    out_xt = np.empty(n)
    _walk_paths(
        n,
        np.uint64(cfg.seed) & _MASK,
        (np.uint64(cfg.seed) >> np.uint64(32)) & _MASK,
        float(np.sqrt(cfg.step)),
        int(cfg.max_steps),
        cfg.rule == "open",
        piece_u0,
        cond_off,
        cond_xs,
        cond_cum,
        grid,
        comp_off,
        comp_a,
        comp_b,
        lvl_off,
        lvls,
        out_u,
        out_piece,
        out_x0,
        out_xt,
    )
    done = ~np.isnan(out_xt)
    n_unstopped = int(n - done.sum())
    if n_unstopped > 0.001 * n:
        raise MaxStepsExceeded(f"{n_unstopped} of {n} paths did not hit the barrier")

    w = 1.0 / n
    slices = []
    for k, (u0, u1, _) in enumerate(l.pieces):
        sel = (out_piece == k) & done
        if not sel.any():
            slices.append((u0, u1, Coupling(())))
            continue
        pairs, counts = np.unique(
            np.stack([out_x0[sel], out_xt[sel]], axis=1), axis=0, return_counts=True
        )
        slices.append((u0, u1, Coupling(zip(pairs[:, 0], pairs[:, 1], counts * w))))
    emp = LiftedCoupling(tuple(slices))
    vals = out_xt[done]
    return SimResult(
        coupling=emp,
        n_paths=n,
        n_unstopped=n_unstopped,
        exit_mean=float(vals.mean()) if vals.size else float("nan"),
        exit_std=float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
        config=cfg,
    )


@dataclass
class CompareReport:
    projected_distance: float
    x_marginal_distance: float
    y_marginal_distance: float
    slab_distances: list = field(default_factory=list)

    @property
    def max_slab_distance(self) -> float:
        return max(self.slab_distances) if self.slab_distances else 0.0

    def to_dict(self) -> dict:
        return {
            "projected_distance": self.projected_distance,
            "x_marginal_distance": self.x_marginal_distance,
            "y_marginal_distance": self.y_marginal_distance,
            "slab_distances": self.slab_distances,
            "max_slab_distance": self.max_slab_distance,
        }


def compare(emp: LiftedCoupling, ref: LiftedCoupling, n_slabs: int = 8) -> CompareReport:
    """Distances between an empirical and a reference lifted coupling.

    The projected couplings are compared through their conditional kernels
    weighted by the reference first marginal (a W1-type distance on plans
    with common x-marginal); y-marginals are additionally compared per slab
    after rebinning both couplings onto n_slabs equal slabs.
    """
    pe, pr = emp.project(), ref.project()
    mu_ref = pr.x_marginal()
    total = mu_ref.mass
    d_proj = 0.0
    for x, wgt in mu_ref.atoms():
        d_proj += wgt / total * w1(pe.kernel(x), pr.kernel(x))
    d_x = w1(_normalized(pe.x_marginal()), _normalized(mu_ref))
    d_y = w1(_normalized(pe.y_marginal()), _normalized(pr.y_marginal()))
    slab_d = []
    edges = np.linspace(0.0, 1.0, n_slabs + 1)
    for a, bnd in zip(edges[:-1], edges[1:]):
        me = emp.y_marginal_between(a, bnd)
        mr = ref.y_marginal_between(a, bnd)
        slab_d.append(w1(_normalized(me), _normalized(mr)) if mr.mass > 0 else 0.0)
    return CompareReport(
        projected_distance=float(d_proj),
        x_marginal_distance=float(d_x),
        y_marginal_distance=float(d_y),
        slab_distances=[float(d) for d in slab_d],
    )


def _normalized(m: DiscreteMeasure) -> DiscreteMeasure:
    total = m.mass
    if total <= 0:
        return m
    return DiscreteMeasure((x, w / total) for x, w in m.atoms())


def open_vs_closed(l: Lift, b: Barrier, cfg: SimConfig) -> dict:
    """Run the simulation under both stopping rules with paired streams.

    With a continuous level marginal the two stopping times agree almost
    surely; the report carries the kernel distance between the two
    empirical projected couplings, expected at Monte Carlo noise level.
    Lifts with atomic u-marginals cannot occur here (the level marginal is
    always Lebesgue), so the toggle probes only the discretization.
    """
    res_c = simulate(l, b, SimConfig(cfg.paths, cfg.step, cfg.seed, cfg.max_steps, "closed"))
    res_o = simulate(l, b, SimConfig(cfg.paths, cfg.step, cfg.seed, cfg.max_steps, "open"))
    pc, po = res_c.coupling.project(), res_o.coupling.project()
    weights = _normalized(pc.x_marginal())
    d = 0.0
    for x, wgt in weights.atoms():
        d += wgt * w1(pc.kernel(x), po.kernel(x))
    return {
        "kernel_distance": float(d),
        "closed_unstopped": res_c.n_unstopped,
        "open_unstopped": res_o.n_unstopped,
        "closed_exit_mean": res_c.exit_mean,
        "open_exit_mean": res_o.exit_mean,
    }
