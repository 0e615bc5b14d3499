"""Classical FEM baseline on quad/hex meshes sampled from a NURBS patch.

Reference element is [-1, 1]^dim. Field bases are tensor products of 1D
Lagrange (equispaced nodes) or Lobatto (hierarchical) functions; the geometry
map is always bilinear/trilinear through the cell vertices.
"""
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .geometry import patch_points, tensor_batch
from .mesh import _CORNERS, GridMesh, structured_mesh

FAMILIES = ("lagrange", "lobatto")
MAX_ORDER = 4


@dataclass(frozen=True, eq=False)
class FeMesh(GridMesh):
    """Structured FE mesh; ``param_axes[d]`` are the vertex knot coordinates."""

    param_axes: tuple = ()


def make_fe_mesh_from_patch(patch, divisions) -> FeMesh:
    divisions = tuple(int(n) for n in np.atleast_1d(divisions))
    if len(divisions) != patch.dim:
        raise ValueError(f"need {patch.dim} division counts, got {len(divisions)}")
    if min(divisions) < 1:
        raise ValueError("divisions must be >= 1 per axis")
    axes = tuple(np.linspace(lo, hi, n + 1) for (lo, hi), n in zip(patch.bounds, divisions))
    grids = np.meshgrid(*axes, indexing="ij")
    params = np.stack([g.transpose(tuple(range(patch.dim))[::-1]).ravel() for g in grids], axis=1)
    verts = patch_points(patch, params)
    return structured_mesh(verts, divisions, cls=FeMesh, param_axes=axes)


def make_grid_mesh(lower, upper, divisions) -> FeMesh:
    """Axis-aligned structured mesh, parameters equal to coordinates."""
    axes = tuple(np.linspace(a, b, n + 1) for a, b, n in zip(lower, upper, divisions))
    grids = np.meshgrid(*axes, indexing="ij")
    verts = np.stack([g.transpose(tuple(range(len(axes)))[::-1]).ravel() for g in grids], axis=1)
    return structured_mesh(verts, divisions, cls=FeMesh, param_axes=axes)


# --- 1D bases ----------------------------------------------------------------------

def lagrange_1d(order, t):
    """Equispaced Lagrange basis on [-1, 1]: values and derivatives, (m, order + 1)."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    nodes = np.linspace(-1.0, 1.0, order + 1)
    k = order + 1
    vals = np.ones((len(t), k))
    ders = np.zeros((len(t), k))
    for j in range(k):
        others = [m for m in range(k) if m != j]
        for m in others:
            vals[:, j] *= (t - nodes[m]) / (nodes[j] - nodes[m])
        for skip in others:
            term = np.full(len(t), 1.0 / (nodes[j] - nodes[skip]))
            for m in others:
                if m != skip:
                    term *= (t - nodes[m]) / (nodes[j] - nodes[m])
            ders[:, j] += term
    return vals, ders


def lobatto_1d(order, t):
    """Hierarchical basis: two vertex functions, then integrated Legendre bubbles.

    ``l_k = (P_k - P_{k-2}) / sqrt(2 (2k - 1))`` for ``k = 2 .. order``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    vals = np.empty((len(t), order + 1))
    ders = np.empty((len(t), order + 1))
    vals[:, 0] = 0.5 * (1.0 - t)
    vals[:, 1] = 0.5 * (1.0 + t)
    ders[:, 0] = -0.5
    ders[:, 1] = 0.5
    for k in range(2, order + 1):
        ck = np.zeros(k + 1)
        ck[k] = 1.0
        ckm2 = np.zeros(k + 1)
        ckm2[k - 2] = 1.0
        ckm1 = np.zeros(k)
        ckm1[k - 1] = 1.0
        vals[:, k] = (legendre.legval(t, ck) - legendre.legval(t, ckm2)) / np.sqrt(2 * (2 * k - 1))
        ders[:, k] = legendre.legval(t, ckm1) * np.sqrt((2 * k - 1) / 2.0)
    return vals, ders


@dataclass(frozen=True)
class FeBasis:
    family: str
    order: int
    dim: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown FE family {self.family!r}; use one of {FAMILIES}")
        if not 1 <= self.order <= MAX_ORDER:
            raise ValueError(f"FE order must be 1..{MAX_ORDER}, got {self.order}")
        if self.dim not in (1, 2, 3):
            raise ValueError(f"reference dimension must be 1..3, got {self.dim}")

    @property
    def n_local(self):
        return (self.order + 1) ** self.dim

    def eval_1d(self, t):
        fn = lagrange_1d if self.family == "lagrange" else lobatto_1d
        return fn(self.order, t)

    def side_index_1d(self, side):
        """1D local function that is 1 at the end point ``side`` (0: t=-1, 1: t=+1)."""
        if side == 0:
            return 0
        return self.order if self.family == "lagrange" else 1

    def global_1d(self, n_cells):
        """Local-to-global map of the 1D basis on ``n_cells`` cells, (n_cells, order + 1)."""
        k = self.order
        e = np.arange(n_cells)[:, None]
        if self.family == "lagrange":
            return k * e + np.arange(k + 1)[None, :]
        bubbles = (n_cells + 1) + e * (k - 1) + np.arange(k - 1)[None, :]
        return np.hstack([e, e + 1, bubbles])

    def n_global_1d(self, n_cells):
        return self.order * n_cells + 1


def fe_basis_eval(basis: FeBasis, xi):
    """Tensor-product values (m, n_loc) and reference gradients (m, n_loc, dim)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
    if xi.shape[1] != basis.dim:
        raise ValueError(f"expected {basis.dim} reference coordinates, got {xi.shape[1]}")
    per_axis = [basis.eval_1d(xi[:, d]) for d in range(basis.dim)]
    vals = tensor_batch([v for v, _ in per_axis])
    grads = np.empty(vals.shape + (basis.dim,))
    for d in range(basis.dim):
        grads[..., d] = tensor_batch([dv if e == d else v for e, (v, dv) in enumerate(per_axis)])
    return vals, grads


def tensor_to_vtk(dim):
    """Map tensor-ordered corner k (axis 0 fastest) to its VTK corner number."""
    corners = _CORNERS[dim]
    order = []
    for k in range(2**dim):
        bits = [(k >> d) & 1 for d in range(dim)]
        order.append(int(np.nonzero((corners == bits).all(axis=1))[0][0]))
    return np.array(order)
