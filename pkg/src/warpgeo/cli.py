"""Command line interface: ``warpgeo <verb> [profile] [options]``.

Exit status is 0 when every check passes, 2 when a check fails and 1 on
errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from .errors import WarpGeoError
from .serialize import _plain, dumps, load_profile

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _profile(args):
    from .families import FamilySpec

    if args.family:
        return FamilySpec.parse(args.family, args.n).generate()
    if args.profile:
        return load_profile(args.profile)
    raise SystemExit("a profile file or --family name:key=value is required")


def _render(obj, fmt: str) -> str:
    obj = _plain(obj)
    if fmt == "json":
        return dumps(obj) + "\n"
    rows = obj if isinstance(obj, list) else None
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if rows and isinstance(rows[0], dict):
            keys = list(rows[0])
            w.writerow(keys)
            for r in rows:
                w.writerow([r.get(k) for k in keys])
        else:
            w.writerow(["key", "value"])
            for k, v in _flatten(obj):
                w.writerow([k, v])
        return buf.getvalue()
    if rows and isinstance(rows[0], dict):
        keys = list(rows[0])
        lines = ["  ".join(f"{k:>14}" for k in keys)]
        lines += ["  ".join(f"{_fmt(r.get(k)):>14}" for k in keys) for r in rows]
        return "\n".join(lines) + "\n"
    return "\n".join(f"{k}: {_fmt(v)}" for k, v in _flatten(obj)) + "\n"


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix.rstrip("."), obj


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _write(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# verbs; each returns (payload, passed)


def cmd_validate(args):
    from .profile import validate_profile

    p = _profile(args)
    diag = validate_profile(p)
    checks = [{"check": c.name, "passed": c.passed, "value": c.value, "tol": c.tol} for c in diag.checks]
    return checks, diag.ok


def cmd_curvature(args):
    from .profile import ricci_radial, scal

    p = _profile(args)
    s = np.linspace(0.0, p.D, args.points)
    sc = scal(p, s, limit=True)
    ri = ricci_radial(p, s, limit=True)
    rows = [{"s": float(a), "f": float(p.f(a)), "scal": float(b), "ricci_radial": float(c)}
            for a, b, c in zip(s, sc, ri)]
    return rows, True


def cmd_width(args):
    from .sweepout import width

    p = _profile(args)
    sm, R = p.max_leaf
    return {"width": width(p), "s_max": sm, "radius": R}, True


def cmd_mina(args):
    from .sweepout import check_near_extremal_structure, find_minimal_leaves

    p = _profile(args)
    rep = find_minimal_leaves(p)
    out = rep.to_dict()
    ok = True
    if args.eps is not None:
        st = check_near_extremal_structure(p, args.eps, rep)
        out["unique_minimal"] = st.unique_minimal
        out["radius_threshold"] = st.radius_threshold
        out["violating"] = [lf.s for lf in st.violating_leaves]
        ok = st.unique_minimal
    return out, ok


def cmd_distance(args):
    from .geodesic import distance_detail, oracle_distance

    p = _profile(args)
    res = distance_detail(p, args.s1, args.s2, args.dphi)
    out = {"distance": res.value, "method": res.method, "warnings": list(res.warnings)}
    if args.oracle:
        out["oracle"] = oracle_distance(p, args.s1, args.s2, args.dphi, grid_n=args.oracle)
    return out, True


def cmd_compare(args):
    from . import comparison
    from .families import FamilySpec

    p = _profile(args)
    other = None
    if args.against:
        other = load_profile(args.against) if os.path.exists(args.against) \
            else FamilySpec.parse(args.against, p.n).generate()
    kw = {"n_s": args.samples, "n_phi": args.samples}
    if args.eta is not None:
        region = comparison.build_comparison(p, other, args.eta, **kw)
        return comparison.bound_report(region).to_dict(), True
    grid = comparison.ETA_GRID if not args.eta_grid else [float(x) for x in args.eta_grid.split(",")]
    if other is not None and args.triangle:
        return comparison.triangle_bound(p, other, grid, **kw).to_dict(), True
    return comparison.sweep_eta(p, other, grid, **kw).to_dict(), True


def cmd_surgery(args):
    from .comparison import surgery_bad_set

    p = _profile(args)
    rec = surgery_bad_set(p, args.eta, n_s=args.samples, n_phi=args.samples)
    return rec.to_dict(), rec.vol_Z + rec.vol_bdry_Z <= rec.psi_bound


def cmd_rigidity(args):
    from .conformal import rigidity_check

    p = _profile(args)
    r = rigidity_check(p)
    ok = r.max_dev_from_round is None or r.max_dev_from_round < args.tol
    return {"scal_ok": r.scal_ok, "width_ok": r.width_ok, "min_scal": r.min_scal, "width": r.width,
            "boundary_u": r.boundary_u, "max_dev_from_round": r.max_dev_from_round}, ok


def cmd_d0(args):
    from .estimates import check_diameter_bound, d0_bound

    if args.profile or args.family:
        dc = check_diameter_bound(_profile(args), args.Lambda)
        return {"hemisphere_length": dc.hemisphere_length, "d0": dc.d0, "w0": dc.w0,
                "min_scal": dc.min_scal, "min_ricci": dc.min_ricci, "applicable": dc.applicable}, dc.ok
    if args.Lambda is None or args.w0 is None:
        raise SystemExit("d0 needs a profile or --Lambda and --w0")
    return {"n": args.n, "Lambda": args.Lambda, "w0": args.w0, "d0": d0_bound(args.n, args.Lambda, args.w0)}, True


def cmd_experiment(args):
    from .harness import ExperimentConfig, emit, run_experiment

    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        if not args.name:
            raise SystemExit("experiment needs a config file or --name")
        d = {"experiment": args.name, "n": args.n}
        if args.family:
            d["family"] = args.family
        if args.k:
            d["k"] = [int(x) for x in args.k.split(",")]
        cfg = ExperimentConfig.from_dict(d)
    report = run_experiment(cfg)
    fmts = [args.format] if args.format in ("json", "csv", "plotdata") else list(cfg.formats)
    out_dir = args.out or cfg.out_dir
    for fmt in fmts:
        text = emit(report, fmt, out_dir)
        if out_dir is None:
            sys.stdout.write(text)
    if out_dir is not None:
        status = "pass" if report.passed else "FAIL"
        sys.stdout.write(f"{cfg.experiment}: {status} {report.assertions}\n")
    return None, report.passed


VERBS = {
    "validate": (cmd_validate, "check the boundary and positivity conditions of a profile"),
    "curvature": (cmd_curvature, "tabulate scalar and radial Ricci curvature"),
    "width": (cmd_width, "width of the canonical sweepout"),
    "mina": (cmd_mina, "minimal leaves, their stability and the symmetric MinA"),
    "distance": (cmd_distance, "geodesic distance between (s1, 0) and (s2, dphi)"),
    "compare": (cmd_compare, "GH / IF / VIF upper bounds against the round sphere or a second profile"),
    "surgery": (cmd_surgery, "excise the polar caps and bound the GH distance of the rest"),
    "rigidity": (cmd_rigidity, "test the extremal case of the scalar-curvature width bound"),
    "d0": (cmd_d0, "explicit hemisphere length bound"),
    "experiment": (cmd_experiment, "run an end-to-end experiment from a config file"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="warpgeo", description="Rotationally symmetric spheres: curvature, "
                                 "width, distances and comparison bounds.")
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb, (_, help_) in VERBS.items():
        sp = sub.add_parser(verb, help=help_, description=help_)
        if verb == "experiment":
            sp.add_argument("config", nargs="?", help="JSON experiment config")
            sp.add_argument("--name", help="experiment name when no config file is given")
            sp.add_argument("--k", help="comma-separated member indices")
        else:
            sp.add_argument("profile", nargs="?", help="profile JSON file")
        sp.add_argument("--family", help="family spec, e.g. near_extremal:k=3 or ellipsoid:a_axis=1,b_axis=2")
        sp.add_argument("--n", type=int, default=3, help="dimension for --family (default 3)")
        sp.add_argument("--out", help="output file (directory for 'experiment')")
        sp.add_argument("--format", default="text", choices=("text", "json", "csv", "plotdata"))
        if verb == "curvature":
            sp.add_argument("--points", type=int, default=21)
        if verb == "mina":
            sp.add_argument("--eps", type=float, help="also check the near-extremal leaf structure")
        if verb == "distance":
            sp.add_argument("--s1", type=float, required=True)
            sp.add_argument("--s2", type=float, required=True)
            sp.add_argument("--dphi", type=float, default=0.0)
            sp.add_argument("--oracle", type=int, nargs="?", const=512, default=None,
                            help="also run the graph oracle on this grid")
        if verb in ("compare", "surgery"):
            sp.add_argument("--eta", type=float, default=None if verb == "compare" else 0.1)
            sp.add_argument("--samples", type=int, default=48, help="sample count per direction for lambda")
        if verb == "compare":
            sp.add_argument("--against", help="second profile (file or family spec); round by default")
            sp.add_argument("--eta-grid", help="comma-separated eta values for the sweep")
            sp.add_argument("--triangle", action="store_true", help="bound through the round sphere")
        if verb == "rigidity":
            sp.add_argument("--tol", type=float, default=1e-9)
        if verb == "d0":
            sp.add_argument("--Lambda", type=float)
            sp.add_argument("--w0", type=float)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = VERBS[args.verb][0]
    try:
        payload, ok = fn(args)
    except (WarpGeoError, OSError, ValueError) as exc:
        sys.stderr.write(f"warpgeo {args.verb}: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    if payload is not None:
        fmt = "text" if args.format == "plotdata" else args.format
        _write(_render(payload, fmt), args.out)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
