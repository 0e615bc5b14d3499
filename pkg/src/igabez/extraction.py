"""Bezier extraction of NURBS patches.

On every non-empty knot span (Bezier element) the smooth B-spline functions
are linear combinations of the Bernstein polynomials of the span,
``N_local = C_e @ B``. The operators ``C_e`` are obtained by inserting every
interior knot until its multiplicity reaches the degree and accumulating the
insertion matrices.
"""
from dataclasses import dataclass

import numpy as np

from .geometry import patch_points, tensor_batch
from .mesh import GridMesh, structured_mesh
from .splines import KnotVector, bernstein_batch, knot_insertion_matrix


@dataclass(frozen=True)
class ExtractionOperator1D:
    """Per-element extraction operators of one knot vector.

    ``operators[e]`` maps the Bernstein basis on ``bounds[e]`` to the B-spline
    functions ``first_active[e] .. first_active[e] + p``.
    """

    degree: int
    operators: np.ndarray
    bounds: np.ndarray
    first_active: np.ndarray

    @property
    def n_elements(self):
        return len(self.operators)


def extract_1d(kv: KnotVector) -> ExtractionOperator1D:
    if not kv.is_open:
        raise ValueError("Bezier extraction needs an open knot vector")
    p = kv.degree
    # Original basis = transport @ refined basis.
    transport = np.eye(kv.n)
    refined = kv
    for u in kv.unique()[1:-1]:
        while refined.multiplicity(u) < p:
            refined, a = knot_insertion_matrix(refined, u)
            transport = transport @ a.T
    spans = kv.spans()
    rspans = refined.spans()
    ops = np.empty((len(spans), p + 1, p + 1))
    for e, (k, kr) in enumerate(zip(spans, rspans)):
        ops[e] = transport[k - p: k + 1, kr - p: kr + 1]
    bounds = np.column_stack([kv.knots[spans], kv.knots[spans + 1]])
    return ExtractionOperator1D(p, ops, bounds, spans - p)


@dataclass(frozen=True, eq=False)
class BezierMesh:
    """All Bezier elements of a patch, element index axis 0 fastest.

    Attributes
    ----------
    boxes : (n_el, dim, 2)
        Knot-span box of each element.
    operators : (n_el, n_loc, n_loc)
        Tensor-product extraction operators.
    conn : (n_el, n_loc)
        Global basis indices of the local functions.
    bezier_points, bezier_weights : (n_el, n_loc, space_dim), (n_el, n_loc)
        Bezier control net of each element.
    """

    patch: object
    axes: tuple
    boxes: np.ndarray
    operators: np.ndarray
    conn: np.ndarray
    bezier_points: np.ndarray
    bezier_weights: np.ndarray

    @property
    def shape(self):
        return tuple(ax.n_elements for ax in self.axes)

    @property
    def n_elements(self):
        return len(self.operators)

    @property
    def dim(self):
        return len(self.axes)

    @property
    def degrees(self):
        return tuple(ax.degree for ax in self.axes)

    @property
    def n_local(self):
        return self.operators.shape[1]


def _element_indices(shape):
    n = int(np.prod(shape))
    return np.stack(np.unravel_index(np.arange(n), shape[::-1])[::-1], axis=1)


def extract_patch(patch) -> BezierMesh:
    axes = tuple(extract_1d(kv) for kv in patch.knot_vectors)
    shape = tuple(ax.n_elements for ax in axes)
    eidx = _element_indices(shape)
    n_el = len(eidx)
    ops, conns, boxes = [], [], []
    for ei in eidx:
        op = axes[0].operators[ei[0]]
        conn = axes[0].first_active[ei[0]] + np.arange(axes[0].degree + 1)
        stride = patch.shape[0]
        for d in range(1, patch.dim):
            op = np.kron(axes[d].operators[ei[d]], op)
            loc = axes[d].first_active[ei[d]] + np.arange(axes[d].degree + 1)
            conn = (loc[:, None] * stride + conn[None, :]).ravel()
            stride *= patch.shape[d]
        ops.append(op)
        conns.append(conn)
        boxes.append([axes[d].bounds[ei[d]] for d in range(patch.dim)])
    ops = np.array(ops)
    conns = np.array(conns, dtype=np.int64)
    pw = patch.projective()[conns]  # (n_el, n_loc, sd + 1)
    qw = np.einsum("eab,eac->ebc", ops, pw)
    bw = qw[..., -1]
    bp = qw[..., :-1] / bw[..., None]
    return BezierMesh(patch, axes, np.array(boxes).reshape(n_el, patch.dim, 2),
                      ops, conns, bp, bw)


def bernstein_tensor(degrees, zetas):
    """Tensor-product Bernstein values and gradients on [0, 1]^dim."""
    zetas = np.atleast_2d(zetas)
    per_axis = [bernstein_batch(p, zetas[:, d]) for d, p in enumerate(degrees)]
    vals = tensor_batch([v for v, _ in per_axis])
    grads = np.empty(vals.shape + (len(degrees),))
    for d in range(len(degrees)):
        grads[..., d] = tensor_batch([dv if e == d else v for e, (v, dv) in enumerate(per_axis)])
    return vals, grads


@dataclass(frozen=True)
class ElementValues:
    """Rational basis and geometry on a batch of elements at local points.

    Shapes: ``values`` (n_el, m, n_loc), ``param_grads`` (n_el, m, n_loc, dim)
    with respect to knot coordinates, ``points`` (n_el, m, space_dim),
    ``jacobians`` (n_el, m, space_dim, dim).
    """

    elements: np.ndarray
    values: np.ndarray
    param_grads: np.ndarray
    points: np.ndarray
    jacobians: np.ndarray


def eval_elements(bm: BezierMesh, zetas, elements=None) -> ElementValues:
    """Evaluate the extracted basis at local coordinates ``zetas`` in [0, 1]^dim."""
    if elements is None:
        elements = np.arange(bm.n_elements)
    elements = np.asarray(elements, dtype=np.int64)
    b, db = bernstein_tensor(bm.degrees, zetas)
    ops = bm.operators[elements]
    n = np.einsum("eab,mb->ema", ops, b)
    h = bm.boxes[elements, :, 1] - bm.boxes[elements, :, 0]  # (n_el, dim)
    dn = np.einsum("eab,mbd->emad", ops, db) / h[:, None, None, :]
    w = bm.patch.weights[bm.conn[elements]][:, None, :]
    wn = w * n
    big_w = wn.sum(axis=2)
    r = wn / big_w[..., None]
    wdn = w[..., None] * dn
    dr = (wdn - r[..., None] * wdn.sum(axis=2)[:, :, None, :]) / big_w[..., None, None]
    cp = bm.patch.control_points[bm.conn[elements]]  # (n_el, n_loc, sd)
    x = np.einsum("ema,eas->ems", r, cp)
    jac = np.einsum("emad,eas->emsd", dr, cp)
    return ElementValues(elements, r, dr, x, jac)


def eval_bezier_geometry(bm: BezierMesh, e, zetas):
    """Physical points from the element's own Bezier net (no global data)."""
    b, _ = bernstein_tensor(bm.degrees, zetas)
    wb = b * bm.bezier_weights[e][None, :]
    return (wb @ bm.bezier_points[e]) / wb.sum(axis=1)[:, None]


def local_to_param(bm: BezierMesh, e, zetas):
    box = bm.boxes[e]
    return box[:, 0] + np.atleast_2d(zetas) * (box[:, 1] - box[:, 0])


@dataclass(frozen=True, eq=False)
class TopoBezierMesh(GridMesh):
    """Mesh of Bezier-element corner vertices; cell ``e`` is Bezier element ``e``."""

    corner_params: np.ndarray = None


def build_topo_mesh(bm: BezierMesh, patch=None) -> TopoBezierMesh:
    patch = bm.patch if patch is None else patch
    uniq = [kv.unique() for kv in patch.knot_vectors]
    grids = np.meshgrid(*uniq, indexing="ij")
    params = np.stack([g.transpose(tuple(range(patch.dim))[::-1]).ravel() for g in grids], axis=1)
    verts = patch_points(patch, params)
    return structured_mesh(verts, bm.shape, cls=TopoBezierMesh, corner_params=params)
