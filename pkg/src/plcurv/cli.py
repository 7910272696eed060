"""Command-line interface: ``plcurv <command> ...``.

Exit codes: 0 success, 1 numeric failure (did not converge, residual
above tolerance, failed checks), 2 rejected input (parse errors, invalid
meshes, targets outside the covered cases, size mismatches), 3 I/O errors.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import metric
from .delaunay import FlipCapExceeded, delaunay_certificate, make_delaunay
from .energy import EnergyState
from .solver import (
    CurvatureTarget,
    SolveConfig,
    SolveError,
    TargetRejected,
    solve_prescribed,
    verify_solution,
)
from .surface import MeshError, load_mesh, save_intrinsic

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3

logger = logging.getLogger("plcurv")


class _InputError(Exception):
    pass


def fmt(x):
    return f"{x:.17g}"


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load(path):
    try:
        return load_mesh(path)
    except OSError:
        raise
    except MeshError as exc:
        raise _InputError(f"{path}: {exc}") from None


def _read_vector(path, n, what):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise _InputError(f"{path}: not valid JSON: {exc}") from None
    vec = np.asarray(data, dtype=float)
    if vec.shape != (n,):
        raise _InputError(f"{path}: {what} has {vec.size} entries, mesh has {n} vertices")
    if not np.all(np.isfinite(vec)):
        raise _InputError(f"{path}: {what} has non-finite entries")
    return vec


def _target_vector(args, n):
    if args.target is not None and args.target_const is not None:
        raise _InputError("give either --target or --target-const, not both")
    if args.target is not None:
        return _read_vector(args.target, n, "target")
    if args.target_const is not None:
        return np.full(n, float(args.target_const))
    raise _InputError("a target is required (--target or --target-const)")


def _seeded_start(n):
    seed = os.environ.get("PLCURV_SEED")
    rng = np.random.default_rng(None if seed is None else int(seed))
    return rng.uniform(-1.0, 1.0, n)


# -- commands ---------------------------------------------------------------


def cmd_check(args, out):
    surface, lengths = _load(args.mesh)
    chi = surface.euler_characteristic()
    gb = metric.gauss_bonnet_residual(surface, lengths)
    bad = delaunay_certificate(surface, lengths)
    tol = 1e-10 * surface.n_vertices
    print(f"vertices {surface.n_vertices}", file=out)
    print(f"edges {surface.n_edges}", file=out)
    print(f"faces {surface.n_faces}", file=out)
    print(f"euler_characteristic {chi}", file=out)
    print("triangle_inequalities ok", file=out)
    print(f"gauss_bonnet_residual {fmt(gb)}", file=out)
    if bad:
        print(f"delaunay no ({len(bad)} edges: {' '.join(map(str, bad))})", file=out)
    else:
        print("delaunay yes", file=out)
    ok = abs(gb) <= tol
    print("status ok" if ok else "status failed", file=out)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_curvature(args, out):
    surface, lengths = _load(args.mesh)
    if args.u is None:
        K, u = metric.curvature(surface, lengths), np.zeros(surface.n_vertices)
    else:
        u = _read_vector(args.u, surface.n_vertices, "u")
        K = EnergyState(surface, lengths, u).gradient()
    vec = K if args.alpha == 0 else metric.alpha_curvature(K, u, args.alpha)
    text = json.dumps(vec.tolist()) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_delaunay(args, out):
    surface, lengths = _load(args.mesh)
    surface, lengths, log = make_delaunay(surface, lengths)
    Path(args.output).write_text(save_intrinsic(surface, lengths))
    if args.flip_log:
        Path(args.flip_log).write_text("".join(f"{e}\n" for e in log))
    print(f"flips {len(log)}", file=out)
    return EXIT_OK


def cmd_energy(args, out):
    surface, lengths = _load(args.mesh)
    u = (np.zeros(surface.n_vertices) if args.u is None
         else _read_vector(args.u, surface.n_vertices, "u"))
    state = EnergyState(surface, lengths, u)
    grad = state.gradient()
    eig = np.linalg.eigvalsh(state.hessian().toarray())
    print(f"energy {fmt(state.energy())}", file=out)
    print(f"gradient_max {fmt(float(np.max(np.abs(grad))))}", file=out)
    print(f"hessian_min_eigenvalue {fmt(float(eig[0]))}", file=out)
    print(f"hessian_max_eigenvalue {fmt(float(eig[-1]))}", file=out)
    return EXIT_OK


def cmd_solve(args, out):
    surface, lengths = _load(args.mesh)
    n = surface.n_vertices
    rbar = _target_vector(args, n)
    try:
        target = CurvatureTarget.create(args.alpha, rbar, surface.euler_characteristic())
    except TargetRejected as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_INPUT
    start = None
    if args.start is not None:
        start = _read_vector(args.start, n, "start")
    elif args.random_start:
        start = _seeded_start(n)
    config = SolveConfig(tol=args.tol, max_iter=args.max_iter, start=start)
    try:
        report = solve_prescribed(surface, lengths, target, config)
    except SolveError as exc:
        report = exc.report
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report.to_json())
    if report.u is not None:
        (outdir / "u.json").write_text(json.dumps(report.u.tolist()) + "\n")
        (outdir / "mesh.json").write_text(save_intrinsic(report.surface, report.lengths))
    print(f"status {report.status}", file=out)
    print(f"case {report.case}", file=out)
    print(f"iterations {report.n_iterations}", file=out)
    print(f"residual {fmt(report.residual)}", file=out)
    return EXIT_OK if report.converged else EXIT_NUMERIC


def cmd_verify(args, out):
    surface, lengths = _load(args.mesh)
    n = surface.n_vertices
    u = _read_vector(args.u, n, "u")
    rbar = _target_vector(args, n)
    v = verify_solution(surface, lengths, u, args.alpha, rbar, tol=args.tol)
    print(f"curvature_residual {fmt(v.curvature_residual)}", file=out)
    if v.constraint_residual is not None:
        print(f"constraint_residual {fmt(v.constraint_residual)}", file=out)
    print(f"gauss_bonnet_residual {fmt(v.gauss_bonnet_residual)}", file=out)
    print(f"non_delaunay_edges {len(v.non_delaunay_edges)}", file=out)
    print("status ok" if v.ok else "status failed", file=out)
    return EXIT_OK if v.ok else EXIT_NUMERIC


# -- parser -----------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="plcurv",
        description="Discrete conformal metrics with prescribed alpha-curvature.",
        epilog="exit codes: 0 ok, 1 numeric failure, 2 rejected input, 3 I/O error",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="mesh statistics, Gauss-Bonnet and Delaunay status")
    c.add_argument("mesh")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("curvature", help="print curvature as a JSON array")
    c.add_argument("mesh")
    c.add_argument("--u", help="conformal factor JSON (default zeros)")
    c.add_argument("--alpha", type=float, default=0.0,
                   help="report K exp(-alpha u) instead of K")
    c.add_argument("-o", "--output", help="write the array here instead of stdout")
    c.set_defaults(func=cmd_curvature)

    c = sub.add_parser("delaunay", help="flip to an intrinsic Delaunay triangulation")
    c.add_argument("mesh")
    c.add_argument("-o", "--output", required=True, help="intrinsic JSON output")
    c.add_argument("--flip-log", help="text file with one flipped edge id per line")
    c.set_defaults(func=cmd_delaunay)

    c = sub.add_parser("energy", help="energy, gradient norm and Hessian spectrum range")
    c.add_argument("mesh")
    c.add_argument("--u", help="conformal factor JSON (default zeros)")
    c.set_defaults(func=cmd_energy)

    def add_target(c):
        c.add_argument("--alpha", type=float, default=0.0)
        c.add_argument("--target", help="per-vertex target JSON array")
        c.add_argument("--target-const", type=float, help="constant target value")
        c.add_argument("--tol", type=float, default=1e-10)

    c = sub.add_parser("solve", help="solve for a prescribed alpha-curvature")
    c.add_argument("mesh")
    add_target(c)
    c.add_argument("--max-iter", type=int, default=50)
    c.add_argument("--start", help="initial conformal factor JSON")
    c.add_argument("--random-start", action="store_true",
                   help="uniform random start in [-1, 1]; seeded by PLCURV_SEED")
    c.add_argument("-o", "--output", default="plcurv-out",
                   help="directory for mesh.json, u.json and report.json")
    c.set_defaults(func=cmd_solve)

    c = sub.add_parser("verify", help="check a conformal factor against a target")
    c.add_argument("mesh")
    c.add_argument("u")
    add_target(c)
    c.set_defaults(func=cmd_verify)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except (_InputError, MeshError, TargetRejected, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FlipCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
