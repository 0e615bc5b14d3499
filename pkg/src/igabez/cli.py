"""Command-line interface: ``igabez {solve,info,make-mesh,compare}``.

Exit codes: 0 success, 1 input error, 2 solver failure or non-convergence.
"""
import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from .extraction import extract_patch
from .fem import make_fe_mesh_from_patch
from .geometry import DegenerateMappingError
from .io.domain import DomainFileError, read_domain_file
from .io.problem import ProblemFileError, read_problem_file
from .io.vtk import write_vtk
from .regions import SelectorSyntaxError, UnknownSetError
from .solve import SolverError

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2
INPUT_ERRORS = (OSError, DomainFileError, ProblemFileError, SelectorSyntaxError, UnknownSetError,
                DegenerateMappingError, ValueError, KeyError)


def _int_list(text):
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not 1 <= len(vals) <= 3 or min(vals) < 1:
        raise argparse.ArgumentTypeError("expected 1 to 3 positive integers")
    return vals


def _fmt_knots(knots):
    return " ".join(format(k, ".9g") for k in knots)


def cmd_info(args, out):
    patch = read_domain_file(args.domain)
    bm = extract_patch(patch)
    print(f"domain: {args.domain}", file=out)
    print(f"dim: {patch.dim} (space dim {patch.space_dim})", file=out)
    print(f"degrees: {', '.join(str(p) for p in patch.degrees)}", file=out)
    for d, kv in enumerate(patch.knot_vectors):
        print(f"knots[{d}]: {_fmt_knots(kv.knots)}", file=out)
    print(f"basis size: {patch.n_basis} ({' x '.join(str(n) for n in patch.shape)})", file=out)
    print(f"Bezier elements: {bm.n_elements} ({' x '.join(str(n) for n in bm.shape)})",
          file=out)
    sides = [f"xi{d}{s}" for d in range(patch.dim) for s in (0, 1)]
    print(f"side sets: {', '.join(sides)}", file=out)
    return EXIT_OK


def cmd_make_mesh(args, out):
    patch = read_domain_file(args.domain)
    if len(args.divisions) != patch.dim:
        raise ValueError(f"--divisions needs {patch.dim} values for a {patch.dim}D domain")
    mesh = make_fe_mesh_from_patch(patch, args.divisions)
    write_vtk(args.out, mesh, title=f"mesh of {Path(args.domain).name}")
    print(f"mesh: {mesh.n_vertices} points, {mesh.n_cells} cells", file=out)
    print(f"wrote {args.out}", file=out)
    return EXIT_OK


def _fe_output(sol):
    space = sol.problem.space
    mesh = space.mesh
    grids = np.meshgrid(*mesh.param_axes, indexing="ij")
    params = np.stack([g.transpose(tuple(range(mesh.dim))[::-1]).ravel() for g in grids], axis=1)
    return mesh, sol.evaluate(params)


def cmd_solve(args, out):
    from .problem import build_problem

    spec = read_problem_file(args.problem)
    problem = build_problem(spec)
    fld = problem.field
    kind = "IGA" if problem.is_iga else "FEM"
    print(f"problem: {args.problem} ({kind}, field {fld.name}, "
          f"{fld.n_components} component(s))", file=out)
    try:
        sol = problem.solve()
    except SolverError as exc:
        print(f"solver failed: {exc}", file=out)
        return EXIT_SOLVER
    print(f"DOFs: {sol.n_dofs}", file=out)
    print(f"iterations: {sol.report.iterations}", file=out)
    print(f"residual: {sol.report.residuals[-1]:.3e}", file=out)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.problem).stem
    var = spec.unknown.name
    if problem.is_iga:
        lin = sol.linearize(args.samples)
        mesh, values = lin.mesh, lin.values
    else:
        mesh, values = _fe_output(sol)
    path = write_vtk(outdir / f"{stem}.vtk", mesh, {var: values}, title=f"{stem}: {var}")
    print(f"wrote {path}", file=out)
    if args.warp is not None:
        if values.ndim != 2:
            print("note: --warp ignored for a scalar field", file=out)
        else:
            verts = mesh.vertices + args.warp * values[:, :mesh.vertices.shape[1]]
            path = write_vtk(outdir / f"{stem}_warped.vtk", mesh, {var: values},
                             title=f"{stem}: {var} warped x{args.warp:g}", vertices=verts)
            print(f"wrote {path}", file=out)
    if not sol.report.converged:
        print("newton did not converge", file=out)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_compare(args, out):
    from .problem import compare_solutions

    spec = read_problem_file(args.problem)
    if not spec.is_iga:
        raise ValueError("compare needs an IGA problem (filename_domain)")
    try:
        cmp = compare_solutions(spec, args.fem_divisions, args.fem_family, args.fem_order,
                                args.samples)
    except SolverError as exc:
        print(f"solver failed: {exc}", file=out)
        return EXIT_SOLVER
    print(f"IGA DOFs: {cmp.iga.n_dofs}", file=out)
    print(f"FEM DOFs: {cmp.fem.n_dofs} ({args.fem_family} order {args.fem_order}, "
          f"divisions {','.join(str(n) for n in args.fem_divisions)})", file=out)
    print(f"max difference on {args.samples}^{cmp.iga.problem.patch.dim} samples: "
          f"{cmp.max_difference:.3e}", file=out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="igabez", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem file and write VTK output")
    p.add_argument("problem")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--samples", type=int, default=21, help="output samples per axis")
    p.add_argument("--warp", type=float, default=None,
                   help="also write the geometry displaced by FACTOR x the vector field")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("info", help="summarize a domain file")
    p.add_argument("domain")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("make-mesh", help="sample a FE mesh from a domain file")
    p.add_argument("domain")
    p.add_argument("--divisions", type=_int_list, required=True)
    p.add_argument("--out", default="mesh.vtk")
    p.set_defaults(func=cmd_make_mesh)

    p = sub.add_parser("compare", help="solve with IGA and with the FEM baseline")
    p.add_argument("problem")
    p.add_argument("--fem-divisions", type=_int_list, required=True)
    p.add_argument("--fem-family", choices=("lagrange", "lobatto"), default="lagrange")
    p.add_argument("--fem-order", type=int, default=2)
    p.add_argument("--samples", type=int, default=20)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            code = args.func(args, out)
        except INPUT_ERRORS as exc:
            print(f"error: {exc}", file=sys.stderr)
            code = EXIT_INPUT
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
