"""Command line front end.

Machine-readable results go to stdout (``key=value`` lines or CSV); progress
and summaries go to stderr. Exit status: 0 success, 1 a check failed,
2 usage or input error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .mesh import MeshFormatError, read_field, read_mesh, read_mesh_with_provenance, write_field, write_mesh, write_vtk

logger = logging.getLogger("supermesh")


def _set_threads(requested):
    import numba

    env = os.environ.get("SUPERMESH_THREADS")
    n = int(env) if env else int(requested or 0)
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(limit if n <= 0 else min(n, limit))


def _emit(pairs):
    for key, value in pairs.items():
        if isinstance(value, float):
            value = f"{value:.12g}"
        print(f"{key}={value}")


def _load_supermesh(path, A, B):
    from .supermesh import Supermesh

    mesh, prov = read_mesh_with_provenance(path, check=False)
    if prov is None:
        raise MeshFormatError(f"{path}: no provenance section, not a supermesh file")
    return Supermesh(mesh, prov, A.n_cells, B.n_cells)


def cmd_gen(args):
    from .generate import generate_mesh

    mesh = generate_mesh(args.dim, args.resolution, args.jitter, args.seed, args.offset)
    write_mesh(mesh, args.output)
    if args.vtk:
        write_vtk(mesh, args.vtk)
    logger.info("wrote %s: %d vertices, %d cells", args.output, mesh.n_vertices, mesh.n_cells)
    _emit({"n_vertices": mesh.n_vertices, "n_cells": mesh.n_cells})
    return 0


def cmd_supermesh(args):
    from .supermesh import build_supermesh

    A, B = read_mesh(args.a), read_mesh(args.b)
    S = build_supermesh(A, B, rtol=args.tol, scheme=args.scheme)
    write_mesh(S.mesh, args.output, provenance=S.provenance)
    if args.vtk:
        write_vtk(S.mesh, args.vtk, {"a_parent": S.provenance[:, 0], "b_parent": S.provenance[:, 1]})
    logger.info("supermesh: %d cells from %d + %d (R = %.4f)", S.n_cells, A.n_cells, B.n_cells, S.ratio)
    _emit({"n_a": A.n_cells, "n_b": B.n_cells, "n_cells": S.n_cells, "ratio": S.ratio})
    return 0


def cmd_validate(args):
    from .supermesh import validate_supermesh

    A, B = read_mesh(args.a), read_mesh(args.b)
    S = _load_supermesh(args.supermesh, A, B)
    report = validate_supermesh(S, A, B)
    _emit(report.as_dict())
    logger.info("validation %s", "PASS" if report.passed else "FAIL")
    return 0 if report.passed else 1


def cmd_bounds(args):
    from .bounds import cell_count_bounds, domain_constant, theorem_constants
    from .geometry import quasi_uniformity_constants

    A = read_mesh(args.a)
    q = quasi_uniformity_constants(A)
    lower, upper = cell_count_bounds(q)
    ok = lower <= q.n_cells <= upper
    out = {
        "n_cells": q.n_cells, "h": q.h, "rho": q.rho, "diam_domain": q.diam_domain,
        "volume_domain": q.volume_domain, "c_D": domain_constant(q), "lower": lower, "upper": upper,
        "cell_count_within_bounds": "PASS" if ok else "FAIL",
    }
    if args.b:
        B = read_mesh(args.b)
        c = theorem_constants(A, B)
        out.update({"rho_b": c.rho_b, "lambda_ab": c.lambda_ab, "c_bar": c.c_bar, "c_in": c.c_in,
                    "c_out": c.c_out, "C": c.C})
        if args.check:
            from .bounds import check_theorem
            from .supermesh import build_supermesh

            chk = check_theorem(build_supermesh(A, B, rtol=args.tol), A, B, c)
            out.update({"n_super": chk.n, "ratio": chk.ratio, "theorem": "PASS" if chk.passed else "FAIL"})
            ok = ok and chk.passed
    if args.cell is not None:
        from .bounds import intersection_count, intersection_count_bound

        target = B if args.b else A
        if not 0 <= args.cell < A.n_cells:
            raise ValueError(f"--cell {args.cell} out of range [0, {A.n_cells})")
        G = A.cell_coords[args.cell]
        measured = intersection_count(G, target)
        bound = intersection_count_bound(G, target, args.samples, args.seed)
        out.update({"cell": args.cell, "intersections": measured, "intersection_bound": bound})
        ok = ok and measured <= bound
    _emit(out)
    return 0 if ok else 1


def cmd_project(args):
    from .geometry import cell_measures
    from .supermesh import build_supermesh, project_p0

    A, B = read_mesh(args.a), read_mesh(args.b)
    S = _load_supermesh(args.supermesh, A, B) if args.supermesh else build_supermesh(A, B, rtol=args.tol)
    field = read_field(args.field)
    values, covered = project_p0(field, S)
    write_field(values, args.output)
    keep = S.overlap_mask()
    vol = cell_measures(S.mesh)[keep]
    prov = S.provenance[keep]
    src = float(np.sum(field[prov[:, 0]] * vol))
    dst = float(np.sum(values[prov[:, 1]] * vol))
    _emit({"n_source": A.n_cells, "n_target": B.n_cells, "uncovered": int((~covered).sum()),
           "integral_source": src, "integral_target": dst,
           "integral_defect": abs(dst - src) / max(abs(src), 1e-300)})
    return 0


def cmd_experiment(args):
    from .experiment import rows_to_csv, run_hierarchy_experiment

    rows = run_hierarchy_experiment(args.dim, args.levels, args.base, args.jitter, args.seed, args.output,
                                    rtol=args.tol, scheme=args.scheme, self_pair=args.self_pair)
    if args.output is None:
        sys.stdout.write(rows_to_csv(rows))
    ok = all(r.theorem_ok for r in rows if r.theorem_ok is not None)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=0, help="worker threads, 0 = auto (SUPERMESH_THREADS overrides)")
    common.add_argument("--tol", type=float, default=1e-12, help="relative measure cutoff for intersections")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="supermesh", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a jittered lattice mesh of (-0.5, 0.5)^d")
    p.add_argument("--dim", type=int, choices=(2, 3), required=True)
    p.add_argument("--resolution", type=int, default=4, help="cells per axis")
    p.add_argument("--jitter", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--offset", type=int, default=0, help="RNG stream index (hierarchy level)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--vtk")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("supermesh", parents=[common], help="build the supermesh of two meshes")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--scheme", choices=("centroid", "apex"), default="centroid")
    p.add_argument("--vtk")
    p.set_defaults(func=cmd_supermesh)

    p = sub.add_parser("validate", parents=[common], help="check a supermesh file against its parents")
    p.add_argument("supermesh")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bounds", parents=[common], help="quasi-uniformity constants and bounds")
    p.add_argument("a")
    p.add_argument("b", nargs="?")
    p.add_argument("--check", action="store_true", help="also build the supermesh and check its size")
    p.add_argument("--cell", type=int, help="also bound how many cells of B (or A) this cell of A can meet")
    p.add_argument("--samples", type=int, default=10**6, help="Monte Carlo samples for --cell")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("project", parents=[common], help="conservative P0 transfer of a cell field from A to B")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("field")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--supermesh", help="precomputed supermesh of A and B")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("experiment", parents=[common], help="supermesh ratio across a mesh hierarchy (CSV)")
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--levels", type=int, default=6)
    p.add_argument("--base", type=int, default=4)
    p.add_argument("--jitter", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", choices=("centroid", "apex"), default="centroid")
    p.add_argument("--self-pair", action="store_true", help="pair every level with itself (R = 1/2)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr, level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(message)s")
    _set_threads(args.threads)
    try:
        return args.func(args)
    except (MeshFormatError, ValueError, OSError) as err:
        print(f"supermesh {args.command}: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
