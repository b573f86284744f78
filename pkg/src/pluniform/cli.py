"""Command line interface.

Exit status: 0 on success, 1 on a domain error (bad mesh, solver failure),
2 on a usage error.  Results go to stdout as JSON, or to ``--out``.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .delaunay import EdgeStatus, classify, cocircular_edges, edge_delaunay_values, make_delaunay
from .exceptions import ParseError, SolverError, UniformizationError
from .io import MetricDocument, fmt_real, load_metric_json, parse_mesh_file, report_to_dict
from .penner import hyperbolic_delaunay_quantity, pl_to_decorated, shear_vector
from .surface import curvature_field
from .uniformizer import SolverConfig, conformal_equivalent, newton_uniformize, yamabe_flow
from .validation import TARGET_PRESETS, resolve_target

log = logging.getLogger("pluniform")

FORMATS = ("off", "obj", "metric-json")


def _reals(values):
    return [fmt_real(x) for x in np.asarray(values, dtype=float)]


def _emit(args, payload):
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=1, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)


def _load(path, fmt):
    try:
        return parse_mesh_file(path, fmt)
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), path) from None


def _target(args, surface, path, fmt):
    choice = args.target
    if choice is None:
        # a metric document may carry its own target
        if (fmt or "").startswith("metric") or str(path).endswith(".json"):
            doc = load_metric_json(path)
            if doc.target_curvature is not None:
                return resolve_target(surface, doc.target_curvature)
        choice = "uniform"
    if choice in TARGET_PRESETS:
        return resolve_target(surface, choice)
    if choice == "user":
        if not args.target_file:
            raise ParseError("--target user needs --target-file", "--target")
        choice = args.target_file
    try:
        with open(choice, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), choice) from None
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{choice}:{exc.lineno}") from None
    if isinstance(data, dict):
        data = data.get("target_curvature")
    if not isinstance(data, list):
        raise ParseError("expected a list or an object with 'target_curvature'", choice)
    return resolve_target(surface, [float(x) for x in data])


def _config(args, **extra):
    kw = {"residual_tol": args.tol}
    if args.max_iter is not None:
        kw["max_flow_iters" if args.command == "flow" else "max_newton_iters"] = args.max_iter
    kw.update(extra)
    return SolverConfig(**kw)


# --- subcommands ------------------------------------------------------------------

def cmd_curvature(args):
    surface, lengths = _load(args.mesh, args.format)
    K = curvature_field(surface, lengths)
    _emit(args, {
        "n_vertices": surface.n_vertices,
        "n_edges": surface.n_edges,
        "n_faces": surface.n_faces,
        "euler_characteristic": surface.euler_characteristic,
        "curvature": _reals(K),
        "gauss_bonnet_defect": fmt_real(K.sum() - 2 * np.pi * surface.euler_characteristic),
    })
    return 0


def cmd_check_delaunay(args):
    surface, lengths = _load(args.mesh, args.format)
    q = edge_delaunay_values(surface, lengths)
    status = [classify(x) for x in q]
    violated = [e for e, s in enumerate(status) if s is EdgeStatus.VIOLATED]
    _emit(args, {
        "is_delaunay": not violated,
        "violated": violated,
        "cocircular": [e for e, s in enumerate(status) if s is EdgeStatus.COCIRCULAR],
        "cos_sums": _reals(q),
    })
    return 0


def cmd_make_delaunay(args):
    surface, lengths = _load(args.mesh, args.format)
    M, d, flips = make_delaunay(surface, lengths)
    out = MetricDocument.from_surface(M, d).to_dict()
    out["flip_log"] = [{"edge": r.edge, "old_length": fmt_real(r.old_length),
                        "new_length": fmt_real(r.new_length)} for r in flips.records]
    out["total_flips"] = flips.count
    out["cocircular_edges"] = cocircular_edges(M, d)
    _emit(args, out)
    return 0


def _solve_one(args, path, solver):
    surface, lengths = _load(path, args.format)
    K_star = _target(args, surface, path, args.format)
    u0 = None
    if getattr(args, "init", "zero") == "random":
        rng = np.random.default_rng(args.seed)
        u0 = rng.normal(0.0, 0.1, surface.n_vertices)
    extra = {"flow_step": args.step} if solver is yamabe_flow else {}
    try:
        report = solver(surface, lengths, K_star, _config(args, **extra), u0=u0)
    except SolverError as exc:
        if exc.report is None:
            raise
        return exc, exc.report
    log.info("%s: %s after %d iterations, residual %.3e, %d flips",
             path, report.reason, report.iterations, report.residual, report.total_flips)
    return None, report


def _run_solver(args, solver):
    paths = args.mesh
    width = int(os.environ.get("UNIFORMIZER_THREADS", "0") or 0) or (os.cpu_count() or 1)
    width = max(1, min(width, len(paths)))
    with ThreadPoolExecutor(max_workers=width) as pool:
        results = list(pool.map(lambda p: _solve_one(args, p, solver), paths))
    docs = [report_to_dict(rep, include_timing=not args.no_timing) for _, rep in results]
    _emit(args, docs[0] if len(docs) == 1 else docs)
    errors = [exc for exc, _ in results if exc is not None]
    if errors:
        for exc in errors:
            _error(exc)
        return 1
    return 0


def cmd_uniformize(args):
    return _run_solver(args, newton_uniformize)


def cmd_flow(args):
    return _run_solver(args, yamabe_flow)


def cmd_equivalent(args):
    a = _load(args.a, args.format)
    b = _load(args.b, args.format)
    ok, witness = conformal_equivalent(*a, *b, tol=args.tol)
    diff = witness["max_rel_diff"]
    payload = {
        "equivalent": ok,
        "tol": fmt_real(args.tol),
        "max_rel_diff": fmt_real(diff) if np.isfinite(diff) else "inf",
    }
    if "lengths_a" in witness:
        payload["witness"] = {
            "lengths_a": _reals(witness["lengths_a"]),
            "lengths_b": _reals(witness["lengths_b"]),
            "cocircular_a": witness["cocircular_a"],
            "cocircular_b": witness["cocircular_b"],
        }
    else:
        payload["witness"] = {"reason": witness["reason"]}
    _emit(args, payload)
    return 0


def cmd_penner(args):
    surface, lengths = _load(args.mesh, args.format)
    flips = 0
    if args.repair:
        surface, lengths, flog = make_delaunay(surface, lengths)
        flips = flog.count
    D = pl_to_decorated(surface, lengths)
    q = [hyperbolic_delaunay_quantity(*surface.quad_lengths(D.lam, e)) for e in range(surface.n_edges)]
    out = MetricDocument.from_surface(D.surface, D.lam).to_dict()
    out.update({
        "lambda_lengths": _reals(D.lam),
        "hyperbolic_lengths": _reals(D.hyp_length),
        "horocycle_lengths": _reals(D.w),
        "shears": _reals(shear_vector(D)),
        "hyperbolic_delaunay": [classify(x).value for x in q],
        "repair_flips": flips,
    })
    _emit(args, out)
    return 0


# --- parser -----------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, help="input format (default: from extension)")
    common.add_argument("--out", help="write JSON here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized initial data")

    parser = argparse.ArgumentParser(prog="pluniform", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", parents=[common], help="per-vertex discrete curvature")
    p.add_argument("mesh")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("check-delaunay", parents=[common], help="list violated and cocircular edges")
    p.add_argument("mesh")
    p.set_defaults(func=cmd_check_delaunay)

    p = sub.add_parser("make-delaunay", parents=[common], help="flip to an intrinsic Delaunay triangulation")
    p.add_argument("mesh")
    p.set_defaults(func=cmd_make_delaunay)

    for name, func, helptext in (("uniformize", cmd_uniformize, "Newton solve for a target curvature"),
                                 ("flow", cmd_flow, "discrete Yamabe flow with surgery")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("mesh", nargs="+")
        p.add_argument("--target", help="uniform | flat | user | path to a JSON target")
        p.add_argument("--target-file", help="JSON target used with --target user")
        p.add_argument("--tol", type=float, default=1e-10, help="max |K - K*| at convergence")
        p.add_argument("--max-iter", type=int)
        p.add_argument("--no-timing", action="store_true", help="omit the timing field")
        if name == "uniformize":
            p.add_argument("--init", choices=("zero", "random"), default="zero")
        else:
            p.add_argument("--step", type=float, default=0.1, help="initial Euler step")
        p.set_defaults(func=func)

    p = sub.add_parser("equivalent", parents=[common], help="decide discrete conformal equivalence")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_equivalent)

    p = sub.add_parser("penner", parents=[common], help="lambda-lengths, horocycles and shears")
    p.add_argument("mesh")
    p.add_argument("--repair", action="store_true", help="make the metric Delaunay first")
    p.set_defaults(func=cmd_penner)
    return parser


def _error(exc):
    code = getattr(exc, "code", "io_error")
    sys.stderr.write(json.dumps({"error": code, "message": str(exc)}) + "\n")


def run_cli(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except UniformizationError as exc:
        _error(exc)
        return 1
    except OSError as exc:
        _error(exc)
        return 1


def main():
    sys.exit(run_cli())
