"""Tensor-product NURBS patches (curves, surfaces, solids).

Global basis index: ``A = i0 + n0 * (i1 + n1 * i2)`` (axis 0 fastest). The
same ordering is used for control points, weights, field DOFs, files and the
local indices inside a Bezier element.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .splines import DomainError, KnotVector, knot_insertion_matrix, open_knot_vector


class DegenerateMappingError(ValueError):
    """The geometry mapping has a (nearly) singular Jacobian."""


@dataclass(frozen=True, eq=False)
class NurbsPatch:
    """Single NURBS patch.

    Parameters
    ----------
    knot_vectors : sequence of KnotVector
        One open knot vector per parametric axis.
    control_points : array, shape (n, space_dim)
        Flattened with axis 0 varying fastest.
    weights : array, shape (n,)
        Strictly positive.
    """

    knot_vectors: tuple
    control_points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        kvs = tuple(self.knot_vectors)
        object.__setattr__(self, "knot_vectors", kvs)
        if not 1 <= len(kvs) <= 3:
            raise ValueError(f"parametric dimension must be 1..3, got {len(kvs)}")
        for d, kv in enumerate(kvs):
            if not isinstance(kv, KnotVector):
                raise TypeError(f"axis {d}: expected KnotVector")
            if not kv.is_open:
                raise ValueError(f"axis {d}: knot vector is not open")
        cp = np.array(self.control_points, dtype=np.float64)
        w = np.array(self.weights, dtype=np.float64)
        n = int(np.prod([kv.n for kv in kvs]))
        if cp.ndim != 2 or cp.shape[0] != n:
            raise ValueError(f"control_points: expected {n} rows, got shape {cp.shape}")
        if not 2 <= cp.shape[1] <= 3 and not (cp.shape[1] == 1 and len(kvs) == 1):
            raise ValueError(f"control_points: space dimension must be 2 or 3, got {cp.shape[1]}")
        if cp.shape[1] < len(kvs):
            raise ValueError("space dimension smaller than parametric dimension")
        if w.shape != (n,):
            raise ValueError(f"weights: expected shape ({n},), got {w.shape}")
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and strictly positive")
        cp.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return len(self.knot_vectors)

    @property
    def space_dim(self):
        return self.control_points.shape[1]

    @property
    def degrees(self):
        return tuple(kv.degree for kv in self.knot_vectors)

    @property
    def shape(self):
        """Number of basis functions per axis."""
        return tuple(kv.n for kv in self.knot_vectors)

    @property
    def n_basis(self):
        return int(np.prod(self.shape))

    @property
    def bounds(self):
        return np.array([kv.bounds for kv in self.knot_vectors])

    def projective(self):
        """Control points lifted to ``(w P, w)``."""
        return np.column_stack([self.control_points * self.weights[:, None], self.weights])

    def grid(self, arr):
        """View a flat per-basis array as an nD grid indexed ``[i0, i1, ...]``."""
        arr = np.asarray(arr)
        return arr.reshape(self.shape[::-1] + arr.shape[1:]).transpose(
            tuple(range(self.dim))[::-1] + tuple(range(self.dim, arr.ndim - 1 + self.dim)))

    def __eq__(self, other):
        if not isinstance(other, NurbsPatch):
            return NotImplemented
        return (self.knot_vectors == other.knot_vectors
                and np.array_equal(self.control_points, other.control_points)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None


def from_projective(knot_vectors, pw):
    pw = np.asarray(pw, dtype=np.float64)
    w = pw[:, -1]
    return NurbsPatch(knot_vectors, pw[:, :-1] / w[:, None], w)


def flat_index(patch_shape, idx):
    """Global flat index of per-axis indices (axis 0 fastest)."""
    out = 0
    stride = 1
    for n, i in zip(patch_shape, idx):
        out = out + stride * np.asarray(i)
        stride *= n
    return out


def tensor_batch(factors):
    """Tensor product of per-axis arrays (m, k_d) -> (m, prod k_d), axis 0 fastest."""
    out = factors[0]
    m = out.shape[0]
    for f in factors[1:]:
        out = (f[:, :, None] * out[:, None, :]).reshape(m, -1)
    return out


@dataclass(frozen=True)
class PatchBasisValues:
    active_indices: np.ndarray
    values: np.ndarray
    param_gradients: np.ndarray


@dataclass(frozen=True)
class JacobianData:
    jacobian: np.ndarray
    det: float
    inverse: np.ndarray


def _check_points(patch, xis):
    xis = np.atleast_2d(np.asarray(xis, dtype=np.float64))
    if xis.shape[1] != patch.dim:
        raise ValueError(f"expected {patch.dim} parametric coordinates, got {xis.shape[1]}")
    b = patch.bounds
    bad = np.any((xis < b[:, 0]) | (xis > b[:, 1]), axis=1)
    if np.any(bad):
        raise DomainError(f"parametric point {xis[np.argmax(bad)].tolist()} outside the patch "
                          f"domain {b.tolist()}")
    return xis


def basis_many(patch, xis):
    """Rational basis at many parametric points.

    Returns
    -------
    active : (m, n_loc) int array
    values : (m, n_loc) array
    grads : (m, n_loc, dim) array
        Derivatives with respect to the knot coordinates.
    """
    xis = _check_points(patch, xis)
    m = xis.shape[0]
    per_axis = []
    for d, kv in enumerate(patch.knot_vectors):
        spans, v, dv = kernels.bspline_basis_batch(kv.knots, kv.degree, xis[:, d])
        idx = spans[:, None] - kv.degree + np.arange(kv.degree + 1)[None, :]
        per_axis.append((idx, v, dv))
    shape = patch.shape
    active = per_axis[0][0]
    stride = shape[0]
    for d in range(1, patch.dim):
        active = (per_axis[d][0][:, :, None] * stride + active[:, None, :]).reshape(m, -1)
        stride *= shape[d]
    n_vals = tensor_batch([v for _, v, _ in per_axis])
    n_grads = np.empty(n_vals.shape + (patch.dim,))
    for d in range(patch.dim):
        facs = [dv if e == d else v for e, (_, v, dv) in enumerate(per_axis)]
        n_grads[..., d] = tensor_batch(facs)
    w = patch.weights[active]
    wn = w * n_vals
    big_w = wn.sum(axis=1)
    values = wn / big_w[:, None]
    wdn = w[:, :, None] * n_grads
    dbig_w = wdn.sum(axis=1)
    grads = (wdn - values[:, :, None] * dbig_w[:, None, :]) / big_w[:, None, None]
    return active, values, grads


def patch_basis_eval(patch, xi):
    active, values, grads = basis_many(patch, [xi])
    return PatchBasisValues(active[0], values[0], grads[0])


def patch_points(patch, xis):
    active, values, _ = basis_many(patch, xis)
    return np.einsum("ma,mad->md", values, patch.control_points[active])


def patch_point(patch, xi):
    return patch_points(patch, [xi])[0]


def patch_jacobians(patch, xis):
    """Jacobian matrices ``dx/dxi`` at many points, shape (m, space_dim, dim)."""
    active, _, grads = basis_many(patch, xis)
    return np.einsum("mad,mak->mdk", patch.control_points[active], grads)


def patch_jacobian(patch, xi):
    jac = patch_jacobians(patch, [xi])[0]
    if patch.dim != patch.space_dim:
        raise ValueError("Jacobian determinant and inverse need dim == space_dim")
    det = float(np.linalg.det(jac))
    if abs(det) < 1e-14:
        raise DegenerateMappingError(f"singular geometry mapping at xi = {list(map(float, xi))}: "
                                     f"det J = {det:.3e}")
    return JacobianData(jac, det, np.linalg.inv(jac))


# --- refinement ----------------------------------------------------------------

def insert_knots(patch, axis, values):
    """Insert knots along one axis, keeping the geometry unchanged."""
    kvs = list(patch.knot_vectors)
    grid = patch.grid(patch.projective())  # [i0, i1, ..., comp]
    for xibar in values:
        kvs[axis], a = knot_insertion_matrix(kvs[axis], float(xibar))
        grid = np.moveaxis(np.tensordot(a, grid, axes=([1], [axis])), 0, axis)
    flat = grid.transpose(tuple(range(patch.dim))[::-1] + (patch.dim,)).reshape(-1, grid.shape[-1])
    return from_projective(kvs, flat)


def uniform_refine(patch, levels=1):
    """Split every non-empty knot span in half, ``levels`` times, on all axes."""
    for _ in range(levels):
        for d, kv in enumerate(patch.knot_vectors):
            u = kv.unique()
            patch = insert_knots(patch, d, 0.5 * (u[:-1] + u[1:]))
    return patch


# --- constructors --------------------------------------------------------------

def make_box(lower, upper, degrees=None, n_elements=None):
    """Axis-aligned box with an affine (Greville-based) parametrization.

    Knot coordinates run over [0, 1] per axis; the map is ``x = lower +
    (upper - lower) * xi`` exactly.
    """
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    dim = len(lower)
    degrees = degrees or (1,) * dim
    n_elements = n_elements or (1,) * dim
    kvs = []
    for p, ne in zip(degrees, n_elements):
        kvs.append(open_knot_vector(p, np.linspace(0.0, 1.0, ne + 1)[1:-1]))
    g = [kv.greville() for kv in kvs]
    mesh = np.meshgrid(*g, indexing="ij")
    pts = np.stack([m.transpose(tuple(range(dim))[::-1]).ravel() for m in mesh], axis=1)
    cp = lower + (upper - lower) * pts
    if dim == 1:
        cp = np.column_stack([cp, np.zeros(len(cp))])
    return NurbsPatch(kvs, cp, np.ones(len(cp)))


def unit_square(degrees=(1, 1), n_elements=(1, 1)):
    return make_box([0.0, 0.0], [1.0, 1.0], degrees, n_elements)


def quarter_circle(radius=1.0):
    """Degree-2 rational arc from (r, 0) to (0, r): ``(kv, control, weights)``."""
    kv = open_knot_vector(2)
    r = radius
    control = np.array([[r, 0.0], [r, r], [0.0, r]])
    weights = np.array([1.0, np.sqrt(0.5), 1.0])
    return kv, control, weights


def quarter_annulus(r_inner=1.0, r_outer=2.0):
    """Axis 0 radial (degree 1), axis 1 angular (exact quarter circles)."""
    _, arc, warc = quarter_circle()
    cp = []
    w = []
    for j in range(3):
        for r in (r_inner, r_outer):
            cp.append(r * arc[j])
            w.append(warc[j])
    return NurbsPatch([open_knot_vector(1), open_knot_vector(2)], cp, w)


def make_demo_domain():
    """Curved 2D single-patch domain used by the examples.

    Degrees (2, 2), four distinct knots on axis 0 and five on axis 1, hence
    3 x 4 Bezier elements and 5 x 6 = 30 basis functions. Axis 1 runs along x
    from 0.4 to 2.4 (its two sides are straight and carry the Dirichlet data
    of the examples), axis 0 runs from the curved top boundary down to the
    curved bottom boundary. Weights vary along axis 0 only, which keeps ``x``
    affine in the parameter so that polynomials in
    ``x`` up to degree 2 are represented exactly.
    """
    kv0 = open_knot_vector(2, [1.0 / 3.0, 2.0 / 3.0])
    kv1 = open_knot_vector(2, [0.25, 0.5, 0.75])
    g0, g1 = kv0.greville(), kv1.greville()
    w_rows = np.array([1.0, 0.9, 1.0, 0.9, 1.0])
    cp, w = [], []
    for j, s in enumerate(g1):
        x = 0.4 + 2.0 * s
        # sin^2 bumps meet the straight sides at right angles.
        y_top = 2.0 + 0.25 * np.sin(np.pi * s) ** 2
        y_bot = -0.2 * np.sin(np.pi * s) ** 2
        for i, t in enumerate(g0):
            cp.append((x, y_top - t * (y_top - y_bot)))
            w.append(w_rows[i])
    # Reorder to axis 0 fastest: the loops above already emit i fastest.
    return NurbsPatch([kv0, kv1], cp, w)


def extrude(patch, height=1.0, degree=1):
    """Extrude a planar surface patch along z into a solid."""
    if patch.dim != 2 or patch.space_dim != 2:
        raise ValueError("extrude needs a planar 2D patch")
    kv = open_knot_vector(degree)
    zs = kv.greville() * height
    cp = np.concatenate([np.column_stack([patch.control_points, np.full(patch.n_basis, z)])
                         for z in zs])
    w = np.tile(patch.weights, len(zs))
    return NurbsPatch(list(patch.knot_vectors) + [kv], cp, w)


def make_demo_domain_3d(height=0.5):
    return extrude(make_demo_domain(), height)
