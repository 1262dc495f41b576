"""File formats: measure/lift JSON, coupling/barrier CSV, run manifests.

Floats are printed with 17 significant digits so every file round-trips to
the exact double that produced it.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
from pathlib import Path

from .coupling import Coupling, LiftedCoupling
from .lift import Lift
from .measure import DiscreteMeasure
from .sets import Barrier, ClosedSet

FLOAT_FMT = "%.17g"


def fmt(x: float) -> str:
    return FLOAT_FMT % float(x)


def _json_default(x):
    raise TypeError(f"not JSON serializable: {x!r}")


def dump_json(obj: dict, path) -> None:
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=False, default=_json_default) + "\n"
    )


def load_measure(path) -> DiscreteMeasure:
    return DiscreteMeasure.from_json_dict(json.loads(Path(path).read_text()))


def save_measure(m: DiscreteMeasure, path) -> None:
    dump_json(m.to_json_dict(), path)


def load_closed_set(path) -> ClosedSet:
    return ClosedSet.from_json_dict(json.loads(Path(path).read_text()))


def load_lift(path) -> Lift:
    return Lift.from_json_dict(json.loads(Path(path).read_text()))


def save_lift(l: Lift, path) -> None:
    dump_json(l.to_json_dict(), path)


# -- CSV ---------------------------------------------------------------------


def coupling_to_csv(c: Coupling) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "mass"])
    for x, y, m in c.entries():
        w.writerow([fmt(x), fmt(y), fmt(m)])
    return buf.getvalue()


def coupling_from_csv(text: str) -> Coupling:
    rows = list(csv.DictReader(_io.StringIO(text)))
    return Coupling((float(r["x"]), float(r["y"]), float(r["mass"])) for r in rows)


def lifted_to_csv(lc: LiftedCoupling) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u0", "u1", "x", "y", "mass"])
    for u0, u1, c in lc.slices:
        for x, y, m in c.entries():
            w.writerow([fmt(u0), fmt(u1), fmt(x), fmt(y), fmt(m)])
    return buf.getvalue()


def lifted_from_csv(text: str) -> LiftedCoupling:
    rows = list(csv.DictReader(_io.StringIO(text)))
    slabs = {}
    for r in rows:
        key = (float(r["u0"]), float(r["u1"]))
        slabs.setdefault(key, []).append(
            (float(r["x"]), float(r["y"]), float(r["mass"]))
        )
    slices = tuple(
        (u0, u1, Coupling(entries)) for (u0, u1), entries in sorted(slabs.items())
    )
    return LiftedCoupling(slices)


def barrier_to_csv(b: Barrier) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u", "component_type", "a", "b"])
    for u, kind, a, bb in b.to_rows():
        w.writerow([fmt(u), kind, fmt(a), fmt(bb)])
    return buf.getvalue()


def barrier_from_csv(text: str) -> Barrier:
    rows = list(csv.DictReader(_io.StringIO(text)))
    return Barrier.from_rows(
        (float(r["u"]), r["component_type"], float(r["a"]), float(r["b"]))
        for r in rows
    )


def write_text(path, text: str) -> None:
    Path(path).write_text(text)


# -- run manifest --------------------------------------------------------------


def sha256_of(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, command: str, inputs: dict, parameters: dict, outputs):
    """One manifest per run; equal manifests imply byte-identical outputs."""
    from . import __version__

    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "version": __version__,
        "inputs": {str(k): sha256_of(v) for k, v in inputs.items()},
        "parameters": parameters,
        "outputs": {name: sha256_of(out_dir / name) for name in sorted(outputs)},
    }
    dump_json(manifest, out_dir / "manifest.json")
    return manifest
