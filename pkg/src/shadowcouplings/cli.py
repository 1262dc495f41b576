"""Command-line front end.

Subcommands: check-order, shadow, couple, verify, simulate.  Exit codes:
0 pass, 2 order violation, 3 malformed input, 4 tolerance/check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .barrier_sim import SimConfig, compare, open_vs_closed, simulate
from .coupling import (
    barrier_family,
    build_shadow_coupling,
    check_lipschitz,
    check_martingale,
    check_monotone,
    check_shadow_property,
    shadow_coupling,
)
from .errors import (
    BarycenterMismatch,
    CouplingError,
    EmptySet,
    MassMismatch,
    MaxStepsExceeded,
    NegativeMass,
    NotDominated,
    NotInConvexOrder,
    OrderViolation,
    OutOfRange,
    OutsideHull,
)
from .lift import CANONICAL_LIFTS, canonical_lift, validate as validate_lift
from .lp_oracle import certify_optimal
from .measure import (
    leq_convex,
    leq_convex_positive,
    leq_diatomic,
    leq_stochastic,
)
from .shadow import shadow
from . import io as sio

ORDER_ERRORS = (
    NotInConvexOrder,
    NotDominated,
    MassMismatch,
    BarycenterMismatch,
    NegativeMass,
    OutsideHull,
    OrderViolation,
    EmptySet,
    OutOfRange,
)

EXIT_OK = 0
EXIT_ORDER = 2
EXIT_MALFORMED = 3
EXIT_TOLERANCE = 4


def _load_measure(path):
    try:
        return sio.load_measure(path)
    except (json.JSONDecodeError, KeyError, TypeError, OSError) as exc:
        print(f"error: cannot read measure {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_MALFORMED)


def _resolve_lift(spec: str, mu):
    if spec in CANONICAL_LIFTS:
        return canonical_lift(spec, mu)
    try:
        lift = sio.load_lift(spec)
    except (json.JSONDecodeError, KeyError, TypeError, OSError) as exc:
        print(f"error: cannot read lift {spec}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_MALFORMED)
    if not validate_lift(lift, mu, tol=1e-7):
        print("error: lift marginal does not match the source measure", file=sys.stderr)
        raise SystemExit(EXIT_ORDER)
    return lift


def _emit(obj, out_path):
    text = json.dumps(obj, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_check_order(args) -> int:
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    convex = leq_convex(mu, nu)
    result = {
        "convex": bool(convex),
        "convex_positive": bool(leq_convex_positive(mu, nu)),
    }
    try:
        result["stochastic"] = bool(leq_stochastic(mu, nu))
    except MassMismatch:
        result["stochastic"] = False
    try:
        result["diatomic"] = bool(leq_diatomic(mu, nu))
    except (MassMismatch, BarycenterMismatch):
        result["diatomic"] = False
    _emit(result, args.json)
    return EXIT_OK if convex else EXIT_ORDER


def cmd_shadow(args) -> int:
    nu = _load_measure(args.nu)
    source = _load_measure(args.source)
    sigma = shadow(nu, source)
    _emit(sigma.to_json_dict(), args.out)
    return EXIT_OK


def _build(args):
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    lift = None if args.lift in CANONICAL_LIFTS else _resolve_lift(args.lift, mu)
    name = args.lift if lift is None else None
    slices = args.slices if args.lift in ("sunset",) or lift is not None else None
    l, lc = build_shadow_coupling(
        mu, nu, lift_name=name or "left-curtain", lift=lift, slices=slices
    )
    return mu, nu, l, lc


def cmd_couple(args) -> int:
    mu, nu, l, lc = _build(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    barrier = barrier_family(l, nu)
    sio.write_text(out / "lifted.csv", sio.lifted_to_csv(lc))
    sio.write_text(out / "coupling.csv", sio.coupling_to_csv(lc.project()))
    sio.write_text(out / "barrier.csv", sio.barrier_to_csv(barrier))
    outputs = ["lifted.csv", "coupling.csv", "barrier.csv"]
    if args.figures:
        from . import plots

        plots.plot_coupling(lc.project(), out / "coupling.png",
                            title=f"{args.lift} coupling")
        plots.plot_barrier(barrier, out / "barrier.png",
                           title=f"{args.lift} barrier family")
        outputs += ["coupling.png", "barrier.png"]
    sio.write_manifest(
        out,
        "couple",
        {"mu": args.mu, "nu": args.nu},
        {"lift": args.lift, "slices": args.slices, "figures": bool(args.figures)},
        outputs,
    )
    print(f"wrote {', '.join(outputs)} to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        lc = sio.lifted_from_csv(Path(args.coupling).read_text())
    except (KeyError, ValueError, OSError) as exc:
        print(f"error: cannot read coupling {args.coupling}: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    l = lc.x_lift()
    if not validate_lift(l, mu, tol=1e-6):
        print("error: coupling first marginal does not match mu", file=sys.stderr)
        return EXIT_ORDER
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = set(checks) - {"martingale", "monotone", "shadow", "lipschitz", "optimal"}
    if unknown:
        print(f"error: unknown checks {sorted(unknown)}", file=sys.stderr)
        return EXIT_MALFORMED
    report = {}
    if "martingale" in checks:
        report["martingale"] = check_martingale(lc, tol=args.tol_martingale).to_dict()
    if "monotone" in checks:
        report["monotone"] = check_monotone(lc, tol=args.tol_monotone).to_dict()
    if "shadow" in checks:
        report["shadow"] = check_shadow_property(lc, l, nu, tol=args.tol_shadow).to_dict()
    if "lipschitz" in checks:
        report["lipschitz"] = check_lipschitz(lc.project(), tol=args.tol_lipschitz).to_dict()
    if "optimal" in checks:
        report["optimal"] = certify_optimal(lc, l, nu, tol=args.tol_optimal).to_dict()
    ok = all(r["pass"] for r in report.values())
    report["pass"] = ok
    _emit(report, args.out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_simulate(args) -> int:
    mu, nu, l, lc = _build(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    barrier = barrier_family(l, nu)
    cfg = SimConfig(
        paths=args.paths, step=args.step, seed=args.seed, max_steps=args.max_steps
    )
    res = simulate(l, barrier, cfg)
    rep = compare(res.coupling, lc, n_slabs=max(2, min(len(lc.slices), 16)))
    comparison = {
        "paths": cfg.paths,
        "step": cfg.step,
        "seed": cfg.seed,
        "unstopped": res.n_unstopped,
        "exit_mean": res.exit_mean,
        "exit_se": res.exit_se,
        "comparison": rep.to_dict(),
    }
    if args.open_vs_closed:
        comparison["open_vs_closed"] = open_vs_closed(l, barrier, cfg)
    sio.write_text(out / "empirical.csv", sio.lifted_to_csv(res.coupling))
    sio.dump_json(comparison, out / "comparison.json")
    outputs = ["empirical.csv", "comparison.json"]
    if args.figures:
        from . import plots

        plots.plot_empirical_vs_reference(
            res.coupling.project(), lc.project(), out / "simulation.png",
            title=f"{args.lift} barrier embedding, N={cfg.paths}",
        )
        outputs.append("simulation.png")
    sio.write_manifest(
        out,
        "simulate",
        {"mu": args.mu, "nu": args.nu},
        {
            "lift": args.lift,
            "slices": args.slices,
            "paths": cfg.paths,
            "step": cfg.step,
            "seed": cfg.seed,
            "max_steps": cfg.max_steps,
            "figures": bool(args.figures),
        },
        outputs,
    )
    print(f"wrote {', '.join(outputs)} to {out}")
    tol = args.tolerance
    if tol is not None and rep.projected_distance > tol:
        print(
            f"error: empirical coupling is {rep.projected_distance:.4g} from the "
            f"construction (tolerance {tol})",
            file=sys.stderr,
        )
        return EXIT_TOLERANCE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shadow-couplings",
        description="Shadow martingale couplings between atomic measures "
        "in convex order: construction, verification, simulation.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("check-order", help="order relations between two measures")
    q.add_argument("mu")
    q.add_argument("nu")
    q.add_argument("--json", help="write the report to this file instead of stdout")
    q.set_defaults(fn=cmd_check_order)

    q = sub.add_parser("shadow", help="shadow of a source measure in a target")
    q.add_argument("nu", help="target measure JSON")
    q.add_argument("source", help="source measure JSON")
    q.add_argument("--out", help="output measure JSON path (default stdout)")
    q.set_defaults(fn=cmd_shadow)

    def add_build_args(q):
        q.add_argument("mu")
        q.add_argument("nu")
        q.add_argument(
            "--lift",
            default="left-curtain",
            help="preset (left-curtain|right-curtain|sunset|middle) or lift JSON path",
        )
        q.add_argument("--slices", type=int, default=256,
                       help="slab count for the sunset lift (default 256)")
        q.add_argument("--figures", dest="figures", action="store_true", default=True)
        q.add_argument("--no-figures", dest="figures", action="store_false")

    q = sub.add_parser("couple", help="construct the shadow coupling and barrier")
    add_build_args(q)
    q.add_argument("--out", required=True, help="output directory")
    q.set_defaults(fn=cmd_couple)

    q = sub.add_parser("verify", help="run verification checks on a lifted coupling")
    q.add_argument("coupling", help="lifted coupling CSV (u0,u1,x,y,mass)")
    q.add_argument("--mu", required=True)
    q.add_argument("--nu", required=True)
    q.add_argument("--checks", default="martingale,monotone,shadow,lipschitz,optimal")
    q.add_argument("--tol-martingale", type=float, default=1e-9)
    q.add_argument("--tol-monotone", type=float, default=1e-6)
    q.add_argument("--tol-shadow", type=float, default=1e-9)
    q.add_argument("--tol-lipschitz", type=float, default=1e-6)
    q.add_argument("--tol-optimal", type=float, default=1e-7)
    q.add_argument("--out", help="write the JSON report to this file")
    q.set_defaults(fn=cmd_verify)

    q = sub.add_parser("simulate", help="Monte Carlo barrier embedding run")
    add_build_args(q)
    q.add_argument("--out", required=True, help="output directory")
    q.add_argument("--paths", type=int, default=100_000)
    q.add_argument("--step", type=float, default=1e-3)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--max-steps", type=int, default=2_000_000)
    q.add_argument("--open-vs-closed", action="store_true",
                   help="also run the open-stopping variant and report the gap")
    q.add_argument("--tolerance", type=float, default=None,
                   help="fail (exit 4) if the projected distance exceeds this")
    q.set_defaults(fn=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MaxStepsExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except ORDER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORDER
    except CouplingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
