"""Galerkin assembly for IGA (Bezier elements) and FEM (quad/hex cells).

A *space* is a scalar basis with a per-cell local-to-global map; a
:class:`Field` repeats it per component, interleaving vector DOFs
component-fastest (``dof = basis * n_components + component``).
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .extraction import build_topo_mesh, eval_elements, extract_patch
from .fem import FeBasis, fe_basis_eval, tensor_to_vtk
from .geometry import DegenerateMappingError, basis_many, tensor_batch

DEFAULT_ORDER = 3
TERMS = ("dw_laplace", "dw_volume_lvf", "dw_lin_elastic")


# --- quadrature ----------------------------------------------------------------------

def quad_rule(order, dim=1):
    """Tensor Gauss-Legendre rule on [-1, 1]^dim exact to ``order`` per axis.

    Uses ``ceil((order + 1) / 2)`` points per axis; points are ordered with
    axis 0 fastest.
    """
    if not 1 <= order <= 10:
        raise ValueError(f"integration order must be 1..10, got {order}")
    n = math.ceil((order + 1) / 2)
    t, w = np.polynomial.legendre.leggauss(n)
    return tensor_rule([t] * dim, [w] * dim)


def tensor_rule(points_1d, weights_1d):
    grids = np.meshgrid(*points_1d, indexing="ij")
    dim = len(points_1d)
    pts = np.stack([g.transpose(tuple(range(dim))[::-1]).ravel() for g in grids], axis=1)
    w = tensor_batch([np.asarray(wd)[None, :] for wd in weights_1d])[0]
    return pts, w


# --- spaces ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ElementData:
    """Basis data at quadrature points of a batch of cells (or facets).

    ``grads`` are physical gradients; ``detw`` is Jacobian (or surface
    measure) times quadrature weight.
    """

    cells: np.ndarray
    values: np.ndarray
    grads: np.ndarray
    detw: np.ndarray
    points: np.ndarray


def _local_multi_index(shape_1d):
    n = int(np.prod(shape_1d))
    return np.stack(np.unravel_index(np.arange(n), tuple(shape_1d)[::-1])[::-1], axis=1)


class _Space:
    mesh = None
    conn = None
    dim = None

    @property
    def n_basis(self):
        raise NotImplementedError

    @property
    def n_cells(self):
        return len(self.conn)

    @property
    def space_dim(self):
        return self.mesh.vertices.shape[1]

    def _ref_eval(self, cells, ref_points):
        """Values, reference gradients, points and reference Jacobians on [-1, 1]^dim."""
        raise NotImplementedError

    def _side_index(self, axis, side):
        raise NotImplementedError

    def _local_shape(self):
        raise NotImplementedError

    def cell_values(self, cells, qp, qw):
        cells = np.arange(self.n_cells) if cells is None else np.asarray(cells, dtype=np.int64)
        vals, rgrads, x, jac = self._ref_eval(cells, qp)
        if self.dim != self.space_dim:
            raise ValueError("volume integration needs dim == space_dim")
        det = np.linalg.det(jac)
        bad = np.abs(det) < 1e-14
        if np.any(bad):
            e, q = np.argwhere(bad)[0]
            raise DegenerateMappingError(
                f"degenerate Jacobian in cell {cells[e]} at quadrature point {qp[q].tolist()}: "
                f"det J = {det[e, q]:.3e}")
        inv = np.linalg.inv(jac)
        grads = np.einsum("eqad,eqdk->eqak", rgrads, inv)
        return ElementData(cells, vals, grads, det * qw[None, :], x)

    def facet_values(self, facets, order):
        """Face-restricted basis on boundary facets ``(cell, local facet)``.

        Returns ``(local_ids, data)`` pairs, one per distinct local facet; each
        ``local_ids`` lists the local functions that do not vanish on the face.
        """
        facets = np.asarray(facets, dtype=np.int64).reshape(-1, 2)
        out = []
        lmi = _local_multi_index(self._local_shape())
        for k in np.unique(facets[:, 1]):
            d, s = divmod(int(k), 2)
            cells = facets[facets[:, 1] == k, 0]
            tang = [a for a in range(self.dim) if a != d]
            if tang:
                fq, fw = quad_rule(order, len(tang))
            else:
                fq, fw = np.zeros((1, 0)), np.ones(1)
            ref = np.empty((len(fw), self.dim))
            ref[:, d] = -1.0 if s == 0 else 1.0
            ref[:, tang] = fq
            vals, _, x, jac = self._ref_eval(cells, ref)
            if len(tang) == 0:
                meas = np.ones(jac.shape[:2])
            elif len(tang) == 1:
                meas = np.linalg.norm(jac[..., tang[0]], axis=-1)
            else:
                t1, t2 = jac[..., tang[0]], jac[..., tang[1]]
                if jac.shape[2] == 3:
                    meas = np.linalg.norm(np.cross(t1, t2), axis=-1)
                else:
                    meas = np.abs(t1[..., 0] * t2[..., 1] - t1[..., 1] * t2[..., 0])
            local = np.nonzero(lmi[:, d] == self._side_index(d, s))[0]
            data = ElementData(cells, vals[:, :, local], None, meas * fw[None, :], x)
            out.append((local, data))
        return out

    def evaluate(self, params, dofs):
        raise NotImplementedError


class IgaSpace(_Space):
    """NURBS basis of a patch, handled element-wise through Bezier extraction."""

    def __init__(self, patch):
        self.patch = patch
        self.bezier = extract_patch(patch)
        self.mesh = build_topo_mesh(self.bezier, patch)
        self.conn = self.bezier.conn
        self.dim = patch.dim

    @property
    def n_basis(self):
        return self.patch.n_basis

    def _local_shape(self):
        return tuple(p + 1 for p in self.patch.degrees)

    def _side_index(self, axis, side):
        return 0 if side == 0 else self.patch.degrees[axis]

    def _ref_eval(self, cells, ref_points):
        ev = eval_elements(self.bezier, 0.5 * (np.atleast_2d(ref_points) + 1.0), cells)
        box = self.bezier.boxes[cells]
        scale = 0.5 * (box[:, :, 1] - box[:, :, 0])  # dxi / dref per axis
        rgrads = ev.param_grads * scale[:, None, None, :]
        jac = ev.jacobians * scale[:, None, None, :]
        return ev.values, rgrads, ev.points, jac

    def evaluate(self, params, dofs):
        """Field values at parametric points; ``dofs`` is (n_basis,) or (n_basis, c)."""
        active, values, _ = basis_many(self.patch, params)
        dofs = np.asarray(dofs)
        return np.einsum("ma,ma...->m...", values, dofs[active])


class FeSpace(_Space):
    """Lagrange or Lobatto basis on a structured :class:`~igabez.fem.FeMesh`."""

    def __init__(self, mesh, family="lagrange", order=2):
        self.mesh = mesh
        self.dim = mesh.dim
        self.basis = FeBasis(family, order, self.dim)
        self.geom = FeBasis("lagrange", 1, self.dim)
        cidx = mesh.cell_grid_index(np.arange(mesh.n_cells))
        n1d = [self.basis.n_global_1d(m) for m in mesh.cell_shape]
        self._n_basis = int(np.prod(n1d))
        maps = [self.basis.global_1d(m) for m in mesh.cell_shape]
        conn = maps[0][cidx[:, 0]]
        stride = n1d[0]
        for d in range(1, self.dim):
            loc = maps[d][cidx[:, d]]
            conn = (loc[:, :, None] * stride + conn[:, None, :]).reshape(len(cidx), -1)
            stride *= n1d[d]
        self.conn = conn
        self._corners = mesh.cells[:, tensor_to_vtk(self.dim)]

    @property
    def n_basis(self):
        return self._n_basis

    def _local_shape(self):
        return (self.basis.order + 1,) * self.dim

    def _side_index(self, axis, side):
        return self.basis.side_index_1d(side)

    def _ref_eval(self, cells, ref_points):
        vals, rgrads = fe_basis_eval(self.basis, ref_points)
        gv, gg = fe_basis_eval(self.geom, ref_points)
        xc = self.mesh.vertices[self._corners[cells]]
        x = np.einsum("qk,eks->eqs", gv, xc)
        jac = np.einsum("qkd,eks->eqsd", gg, xc)
        n = len(cells)
        return (np.broadcast_to(vals, (n,) + vals.shape),
                np.broadcast_to(rgrads, (n,) + rgrads.shape),
                x, jac)

    def locate(self, params):
        """Cell ids and reference coordinates of parametric points."""
        params = np.atleast_2d(np.asarray(params, dtype=np.float64))
        idx = []
        ref = np.empty_like(params)
        for d, ax in enumerate(self.mesh.param_axes):
            c = np.clip(np.searchsorted(ax, params[:, d], side="right") - 1, 0, len(ax) - 2)
            ref[:, d] = 2.0 * (params[:, d] - ax[c]) / (ax[c + 1] - ax[c]) - 1.0
            idx.append(c)
        cells = np.zeros(len(params), dtype=np.int64)
        stride = 1
        for d, c in enumerate(idx):
            cells += stride * c
            stride *= self.mesh.cell_shape[d]
        return cells, ref

    def evaluate(self, params, dofs):
        cells, ref = self.locate(params)
        vals, _ = fe_basis_eval(self.basis, ref)
        dofs = np.asarray(dofs)
        return np.einsum("ma,ma...->m...", vals, dofs[self.conn[cells]])


@dataclass(frozen=True, eq=False)
class Field:
    name: str
    space: object
    n_components: int = 1

    @property
    def n_dofs(self):
        return self.n_components * self.space.n_basis

    def dofs_of(self, basis_ids, component=None):
        basis_ids = np.asarray(basis_ids, dtype=np.int64)
        nc = self.n_components
        if component is None:
            out = basis_ids[..., None] * nc + np.arange(nc)
            return out.reshape(basis_ids.shape[:-1] + (basis_ids.shape[-1] * nc,))
        return basis_ids * nc + component

    def cell_dofs(self, cells=None):
        conn = self.space.conn if cells is None else self.space.conn[cells]
        return self.dofs_of(conn)

    def split(self, dofs):
        """DOF vector as (n_basis,) for scalars or (n_basis, n_components)."""
        dofs = np.asarray(dofs)
        return dofs if self.n_components == 1 else dofs.reshape(-1, self.n_components)


# --- terms -----------------------------------------------------------------------------

def term_laplace_local(ed: ElementData):
    return kernels.laplace_local(ed.grads, ed.detw)


def term_volume_source_local(ed: ElementData, f):
    return kernels.source_local(ed.values, ed.detw, f)


def term_lin_elastic_local(ed: ElementData, lam, mu, n_components):
    if n_components != ed.grads.shape[-1]:
        raise ValueError(f"dw_lin_elastic needs a vector field with {ed.grads.shape[-1]} "
                         f"components, got {n_components}")
    if mu <= 0.0 or lam < 0.0:
        raise ValueError(f"need mu > 0 and lambda >= 0, got lam={lam}, mu={mu}")
    return kernels.lin_elastic_local(ed.grads, ed.detw, lam, mu)


@dataclass
class Term:
    """One weak-form term; ``sign`` is +1 on the left-hand side, -1 on the right."""

    name: str
    cells: np.ndarray = None
    order: int = DEFAULT_ORDER
    params: dict = field(default_factory=dict)
    sign: float = 1.0

    def __post_init__(self):
        if self.name not in TERMS:
            raise ValueError(f"unknown term {self.name!r}; supported: {', '.join(TERMS)}")


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """``matrix @ T = rhs`` with bookkeeping of prescribed DOFs."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    fixed_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    fixed_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_dofs(self):
        return self.matrix.shape[0]

    @property
    def n_active(self):
        """Size of the system left after eliminating the prescribed DOFs."""
        return self.n_dofs - len(self.fixed_dofs)

    @property
    def free_dofs(self):
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.fixed_dofs] = False
        return np.nonzero(mask)[0]


def assemble_system(terms, fld: Field) -> LinearSystem:
    space = fld.space
    n = fld.n_dofs
    rows, cols, data = [], [], []
    rhs = np.zeros(n)
    for term in terms:
        if term.cells is not None and len(term.cells) == 0:
            continue
        qp, qw = quad_rule(term.order, space.dim)
        ed = space.cell_values(term.cells, qp, qw)
        dofs = fld.cell_dofs(ed.cells)
        if term.name == "dw_laplace":
            if fld.n_components != 1:
                raise ValueError("dw_laplace needs a scalar field")
            local = term_laplace_local(ed)
        elif term.name == "dw_lin_elastic":
            local = term_lin_elastic_local(ed, term.params["lam"], term.params["mu"],
                                           fld.n_components)
        else:
            if fld.n_components != 1:
                raise ValueError("dw_volume_lvf needs a scalar field")
            vec = term_volume_source_local(ed, term.params["f"])
            # Residual convention: lhs - rhs = 0, so a vector term moves to the rhs.
            np.add.at(rhs, dofs, -term.sign * vec)
            continue
        rows.append(np.repeat(dofs, dofs.shape[1], axis=1).ravel())
        cols.append(np.tile(dofs, (1, dofs.shape[1])).ravel())
        data.append((term.sign * local).ravel())
    if rows:
        mat = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(n, n)).tocsr()
    else:
        mat = sp.csr_matrix((n, n))
    mat.sum_duplicates()
    return LinearSystem(mat, rhs)


def apply_ebcs(system: LinearSystem, dofs, values) -> LinearSystem:
    """Symmetric elimination: move known columns to the rhs, identity rows."""
    dofs = np.asarray(dofs, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if len(dofs) == 0:
        return system
    if dofs.min() < 0 or dofs.max() >= system.n_dofs:
        raise ValueError("fixed DOF index out of range")
    k = system.matrix.tocsr()
    u = np.zeros(system.n_dofs)
    u[dofs] = values
    rhs = system.rhs - k @ u
    rhs[dofs] = values
    keep = np.ones(system.n_dofs)
    keep[dofs] = 0.0
    dk = sp.diags(keep)
    k = (dk @ k @ dk + sp.diags(1.0 - keep)).tocsr()
    k.eliminate_zeros()
    return LinearSystem(k, rhs, dofs, values)


# --- Dirichlet data --------------------------------------------------------------------

def _as_function(value):
    if callable(value):
        return value
    c = float(value)
    return lambda x: np.full(len(x), c)


def region_facets(space, region):
    if region.kind == "facet":
        return region.ids
    if region.kind == "vertex":
        mesh = space.mesh
        mask = np.zeros(mesh.n_vertices, dtype=bool)
        mask[region.ids] = True
        inside = mask[mesh.cell_facets()].all(axis=2) & mesh.boundary_facets()
        facets = np.argwhere(inside)
        if len(facets) == 0:
            raise ValueError(f"vertex region {region.name!r} contains no boundary facet")
        return facets
    raise ValueError(f"essential BCs need a facet or vertex region, {region.name!r} is a "
                     f"{region.kind} region")


def project_dirichlet_boundary(space, facets, value, order=None):
    """L2 projection of boundary data onto the face-restricted basis.

    Returns ``(basis_ids, coefficients)``.
    """
    g = _as_function(value)
    if order is None:
        order = min(10, 2 * max(space._local_shape()) + 1)
    rows, cols, data = [], [], []
    chunks = []
    for local, ed in space.facet_values(facets, order):
        ids = space.conn[ed.cells][:, local]
        m_loc = kernels.mass_local(ed.values, ed.detw)
        gv = np.asarray(g(ed.points.reshape(-1, ed.points.shape[-1])), dtype=np.float64)
        gv = gv.reshape(ed.detw.shape)
        b_loc = np.einsum("eq,eqa->ea", ed.detw * gv, ed.values)
        chunks.append((ids, m_loc, b_loc))
    all_ids = np.unique(np.concatenate([c[0].ravel() for c in chunks]))
    nb = len(all_ids)
    b = np.zeros(nb)
    for ids, m_loc, b_loc in chunks:
        li = np.searchsorted(all_ids, ids)
        rows.append(np.repeat(li, li.shape[1], axis=1).ravel())
        cols.append(np.tile(li, (1, li.shape[1])).ravel())
        data.append(m_loc.ravel())
        np.add.at(b, li, b_loc)
    mass = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(nb, nb)).toarray()
    try:
        coef = np.linalg.solve(mass, b)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("singular boundary mass matrix in Dirichlet projection") from exc
    return all_ids, coef


@dataclass(frozen=True)
class EssentialBC:
    """Prescribed values on a region; ``component`` is an int or ``"all"``."""

    name: str
    region: object
    component: object
    value: object


def collect_ebcs(fld: Field, ebcs, order=None):
    """Project all conditions and merge them into ``(dofs, values)``.

    On DOFs shared by several conditions the last one wins; a warning names
    both conditions when their values differ.
    """
    fixed = {}
    owner = {}
    for bc in ebcs:
        comps = range(fld.n_components) if bc.component == "all" else [int(bc.component)]
        facets = region_facets(fld.space, bc.region)
        for c in comps:
            if not 0 <= c < fld.n_components:
                raise ValueError(f"{bc.name}: component {c} out of range for field "
                                 f"{fld.name!r} with {fld.n_components} components")
            ids, vals = project_dirichlet_boundary(fld.space, facets, bc.value, order)
            for dof, v in zip(fld.dofs_of(ids, c), vals):
                dof = int(dof)
                if dof in fixed and abs(fixed[dof] - v) > 1e-12 * max(1.0, abs(v)):
                    warnings.warn(f"DOF {dof}: condition {bc.name!r} overrides "
                                  f"{owner[dof]!r} ({fixed[dof]:.6g} -> {v:.6g})", stacklevel=2)
                fixed[dof] = float(v)
                owner[dof] = bc.name
    dofs = np.array(sorted(fixed), dtype=np.int64)
    return dofs, np.array([fixed[d] for d in dofs])


def l2_error(space, dofs, exact, order=DEFAULT_ORDER):
    """``||u_h - u||_L2`` over all cells; ``exact`` maps (m, space_dim) points to values."""
    qp, qw = quad_rule(order, space.dim)
    ed = space.cell_values(None, qp, qw)
    uh = np.einsum("eqa,ea->eq", ed.values, np.asarray(dofs)[space.conn])
    u = np.asarray(exact(ed.points.reshape(-1, ed.points.shape[-1]))).reshape(uh.shape)
    return float(np.sqrt(np.sum(ed.detw * (uh - u) ** 2)))
