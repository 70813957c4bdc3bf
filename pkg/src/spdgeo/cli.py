"""Command-line entry point: ``spdgeo <command> ...``; every command prints JSON."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import CAP_ENV_VAR
from .errors import CapExceededError, NumericalFailure, PreconditionError, SpdGeoError

SCHEMA = "1"


class InputError(Exception):
    pass


def _load_matrix(path: str | None, flag: str) -> np.ndarray:
    if path is None:
        raise InputError(f"missing required {flag}")
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{flag}: cannot read JSON from {path}: {exc}") from exc
    if isinstance(obj, dict):
        obj = obj.get("matrix", obj.get("basis"))
    try:
        M = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{flag}: not a numeric array") from exc
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.size == 0 or not np.all(np.isfinite(M)):
        raise InputError(f"{flag}: expected a non-empty 2-D array of finite numbers")
    return M


def _cfg(args):
    from .sr_metric import MetricConfig

    kw = {"k": args.k, "seed": args.seed, "cap": args.cap_p}
    if args.tol is not None:
        kw["tie_tol"] = args.tol
    return MetricConfig(**kw)


def cmd_dsr(args) -> dict:
    from .sr_metric import d_sr

    X, Y = _load_matrix(args.X, "--X"), _load_matrix(args.Y, "--Y")
    dist, recs = d_sr(X, Y, _cfg(args))
    return {"dsr": dist, "minimal_pairs": [r.to_json() for r in recs]}


def cmd_classify(args) -> dict:
    from .curves import classify

    X, Y = _load_matrix(args.X, "--X"), _load_matrix(args.Y, "--Y")
    return {"report": classify(X, Y, _cfg(args)).to_json()}


def cmd_mssr(args) -> dict:
    from .curves import classify, connecting_geodesic, sample_curve
    from .sr_metric import d_sr

    X, Y = _load_matrix(args.X, "--X"), _load_matrix(args.Y, "--Y")
    cfg = _cfg(args)
    dist, recs = d_sr(X, Y, cfg)
    out = []
    for r in recs:
        for j, g in enumerate(connecting_geodesic(*r.endpoints)):
            out.append({"rep": r.rep.to_json(), "geodesic": j, "sample": sample_curve(g, args.samples).to_json()})
    return {"dsr": dist, "curves": out, "report": classify(X, Y, cfg, records=recs).to_json()}


def cmd_fiber(args) -> dict:
    from .partitions import eigen_decompose, fiber_summary

    X = _load_matrix(args.X, "--X")
    pt = eigen_decompose(X)
    fs = fiber_summary(pt.scale)
    return {
        "partition": fs.partition.to_json(),
        "component_count": fs.component_count,
        "component_shape": list(fs.component_shape),
        "eigenvalues": pt.scale.tolist(),
        "U": pt.rotation.tolist(),
    }


def cmd_reduce(args) -> dict:
    from .grassmann import Involution, sign_change_reduce
    from .rotations import d_so

    R = _load_matrix(args.R, "--R")
    inv = Involution(R)
    res = sign_change_reduce(inv, tie_tol=args.tol if args.tol is not None else 1e-9)
    if res is None:
        d0 = d_so(inv.matrix, np.eye(inv.p))
        return {"reducible": False, "sigma": None, "d_before": d0, "d_after": d0, "level": inv.level}
    out = res.to_json()
    out["involution_level"] = inv.level
    return out


def cmd_grass(args) -> dict:
    from .grassmann import Plane, d_gr, nearest_coordinate_plane, search_level2

    if args.action == "nearest":
        return nearest_coordinate_plane(Plane(_load_matrix(args.W, "--W"))).to_json()
    if args.action == "dist":
        W, Z = Plane(_load_matrix(args.W, "--W")), Plane(_load_matrix(args.Z, "--Z"))
        return {"d": d_gr(W, Z), "m": W.m, "p": W.p}
    if args.p is None:
        raise InputError("grass search needs --p")
    return search_level2(args.p, args.samples, np.random.default_rng(args.seed))


def cmd_halfangle(args) -> dict:
    from .grassmann import half_angle_check

    rep = half_angle_check(_load_matrix(args.R, "--R"), _load_matrix(args.R2, "--R2"))
    return {
        "phis": rep.phis.tolist(),
        "thetas": rep.thetas.tolist(),
        "matching": [i + 1 for i in rep.matching],
        "max_error": rep.max_error,
        "pass": rep.passed,
    }


def cmd_verify(args):
    from .verify import report_json, run_all

    only = [c for item in (args.only or []) for c in item.split(",") if c]
    results = run_all(seed=args.seed, only=only or None, jobs=args.jobs)
    for r in results:
        print(f"{r.id} {'PASS' if r.passed else 'FAIL'} {r.name}", file=sys.stderr)
    return report_json(results, args.seed), all(r.passed for r in results)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spdgeo", description="Scaling-rotation geometry of SPD matrices.")
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--X")
    common.add_argument("--Y")
    common.add_argument("--R")
    common.add_argument("--R2")
    common.add_argument("--W")
    common.add_argument("--Z")
    common.add_argument("--k", type=float, default=1.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--cap-p", type=int, default=None, help=f"enumeration cap (env {CAP_ENV_VAR})")
    common.add_argument("--samples", type=int, default=64)
    common.add_argument("--out")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("dsr", parents=[common], help="scaling-rotation distance")
    sub.add_parser("mssr", parents=[common], help="sample minimal curves and classify")
    sub.add_parser("classify", parents=[common], help="Type I / Type II report")
    sub.add_parser("fiber", parents=[common], help="fiber components of an SPD matrix")
    sub.add_parser("reduce", parents=[common], help="sign-change reducibility of an involution")
    g = sub.add_parser("grass", parents=[common], help="Grassmannian utilities")
    g.add_argument("action", choices=["nearest", "dist", "search"])
    g.add_argument("--p", type=int)
    sub.add_parser("halfangle", parents=[common], help="half-angle relation for two involutions")
    v = sub.add_parser("verify", parents=[common], help="run the reproduction checks")
    v.add_argument("--only", action="append")
    v.add_argument("--jobs", type=int, default=1)
    return ap


COMMANDS = {
    "dsr": cmd_dsr,
    "mssr": cmd_mssr,
    "classify": cmd_classify,
    "fiber": cmd_fiber,
    "reduce": cmd_reduce,
    "grass": cmd_grass,
    "halfangle": cmd_halfangle,
}


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.k <= 0:
        print("error: --k must be positive", file=sys.stderr)
        return 2
    saved = os.environ.get(CAP_ENV_VAR)
    if args.cap_p is not None:
        os.environ[CAP_ENV_VAR] = str(args.cap_p)
    try:
        if args.command == "verify":
            text, ok = cmd_verify(args)
            _emit(text, args.out)
            return 0 if ok else 1
        body = {"schema": SCHEMA, "command": args.command}
        body.update(COMMANDS[args.command](args))
        _emit(json.dumps(_clean(body), indent=2, sort_keys=True), args.out)
        return 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except (PreconditionError, SpdGeoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        if saved is None:
            os.environ.pop(CAP_ENV_VAR, None)
        else:
            os.environ[CAP_ENV_VAR] = saved


if __name__ == "__main__":
    sys.exit(main())
