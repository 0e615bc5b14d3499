"""From a parsed problem description to a solved field."""
import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .assembly import EssentialBC, FeSpace, Field, IgaSpace, Term, apply_ebcs, assemble_system, \
    collect_ebcs
from .fem import make_fe_mesh_from_patch
from .io.domain import read_domain_file
from .io.linearize import linearize_field
from .regions import define_region
from .solve import newton_solve_system


@dataclass(eq=False)
class Problem:
    spec: object
    patch: object
    space: object
    field: Field
    regions: dict
    terms: list
    ebcs: list

    @property
    def is_iga(self):
        return isinstance(self.space, IgaSpace)

    def assemble(self):
        """Assembled system with the essential BCs eliminated."""
        system = assemble_system(self.terms, self.field)
        dofs, values = collect_ebcs(self.field, self.ebcs)
        return apply_ebcs(system, dofs, values)

    def solve(self):
        t0 = time.perf_counter()
        system = self.assemble()
        report = newton_solve_system(system, self.spec.solver)
        return Solution(self, system, report, time.perf_counter() - t0)


@dataclass(eq=False)
class Solution:
    problem: Problem
    system: object
    report: object
    elapsed: float

    @property
    def dofs(self):
        return self.problem.field.split(self.report.x)

    @property
    def n_dofs(self):
        """Unknowns left in the linear system after the essential BCs."""
        return self.system.n_active

    def evaluate(self, params):
        return self.problem.space.evaluate(params, self.dofs)

    def linearize(self, samples):
        if not self.problem.is_iga:
            raise ValueError("linearization applies to IGA solutions")
        return linearize_field(self.problem.patch, self.dofs, samples)


def build_problem(spec, patch=None) -> Problem:
    if patch is None:
        patch = read_domain_file(spec.geometry_path)
    fspec = next(iter(spec.fields.values()))
    if spec.is_iga:
        space = IgaSpace(patch)
    else:
        if len(spec.divisions) != patch.dim:
            raise ValueError(f"divisions: need {patch.dim} entries, got {len(spec.divisions)}")
        space = FeSpace(make_fe_mesh_from_patch(patch, spec.divisions), fspec.family, fspec.order)
    if fspec.n_components not in (1, patch.dim):
        raise ValueError(f"field {fspec.name!r}: {fspec.n_components} components on a "
                         f"{patch.dim}D domain")
    regions = {name: define_region(space.mesh, name, definition)
               for name, definition in spec.regions.items()}
    freg = regions[fspec.region]
    if freg.kind != "cell" or len(freg.ids) != space.n_cells:
        raise ValueError(f"field region {fspec.region!r} must cover the whole domain")
    fld = Field(fspec.name, space, fspec.n_components)

    terms = []
    for eq in spec.equations.values():
        for side, tspecs in ((1.0, eq.lhs), (-1.0, eq.rhs)):
            for ts in tspecs:
                region = regions[ts.region]
                if region.kind != "cell":
                    raise ValueError(f"{ts}: volume terms need a cell region, "
                                     f"{ts.region!r} is a {region.kind} region")
                mats = [a.split(".") for a in ts.args if "." in a]
                vals = [spec.materials[m][p] for m, p in mats]
                params = {}
                if ts.name == "dw_volume_lvf":
                    params["f"] = vals[0]
                elif ts.name == "dw_lin_elastic":
                    params["lam"], params["mu"] = vals
                terms.append(Term(ts.name, region.cells, spec.integrals[ts.integral], params,
                                  side * ts.sign))
    ebcs = [EssentialBC(e.name, regions[e.region], e.component, e.value)
            for e in spec.ebcs.values()]
    return Problem(spec, patch, space, fld, regions, terms, ebcs)


def fem_variant(spec, divisions, family="lagrange", order=2):
    """The same problem on a FE mesh sampled from the domain."""
    fspec = next(iter(spec.fields.values()))
    fields = {fspec.name: dataclasses.replace(fspec, order=order, family=family)}
    integrals = {k: max(v, 2 * order) for k, v in spec.integrals.items()}
    return dataclasses.replace(spec, filename_domain=None,
                               filename_mesh=spec.filename_domain or spec.filename_mesh,
                               divisions=tuple(divisions), fields=fields, integrals=integrals)


def sample_grid(bounds, n):
    """``n`` uniform samples per axis in the parameter box, axis 0 fastest."""
    axes = [np.linspace(lo, hi, n) for lo, hi in bounds]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.transpose(tuple(range(len(axes)))[::-1]).ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class Comparison:
    iga: Solution
    fem: Solution
    max_difference: float


def compare_solutions(spec, divisions, family="lagrange", order=2, samples=20):
    patch = read_domain_file(spec.geometry_path)
    iga = build_problem(spec, patch).solve()
    fem = build_problem(fem_variant(spec, divisions, family, order), patch).solve()
    params = sample_grid(patch.bounds, samples)
    diff = np.abs(iga.evaluate(params) - fem.evaluate(params))
    return Comparison(iga, fem, float(diff.max()))
