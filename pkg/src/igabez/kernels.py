"""Hot numerical kernels, each with a numba and a pure-numpy implementation.

The public names (``bspline_basis_batch``, ``laplace_local``, ...) are bound
to the numba variants unless ``IGABEZ_DISABLE_NUMBA`` is set. Both variants
are importable under ``*_numba`` / ``*_numpy`` so that they can be checked
against each other and benchmarked.

Array conventions
-----------------
``grads`` : (n_el, n_qp, n_loc, space_dim)
    Physical gradients of the local basis at quadrature points.
``vals`` : (n_el, n_qp, n_loc)
    Local basis values at quadrature points.
``detw`` : (n_el, n_qp)
    Jacobian determinant times quadrature weight.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# --- B-spline basis at many points -------------------------------------------

def find_spans_numpy(knots, degree, xs):
    """Knot span index for each point (half-open, last point closed)."""
    knots = np.asarray(knots, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    n = len(knots) - degree - 1
    spans = np.searchsorted(knots, xs, side="right") - 1
    # The right end point belongs to the last non-empty span.
    last = n - 1
    while knots[last] == knots[last + 1]:
        last -= 1
    spans = np.where(xs >= knots[n], last, spans)
    return np.clip(spans, degree, last).astype(np.int64)


def bspline_basis_batch_numpy(knots, degree, xs):
    """Evaluate the ``degree + 1`` active B-splines and their derivatives.

    Returns
    -------
    spans : (m,) int array
        Span index ``k``; the active functions are ``k - degree .. k``.
    vals, ders : (m, degree + 1) arrays
    """
    knots = np.asarray(knots, dtype=np.float64)
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    p = degree
    spans = find_spans_numpy(knots, p, xs)
    m = len(xs)
    prev = np.ones((m, 1))
    vals = prev
    for k in range(1, p + 1):
        vals = np.zeros((m, k + 1))
        for j in range(k + 1):
            i = spans - k + j
            if j >= 1:
                den = knots[i + k] - knots[i]
                safe = np.where(den > 0.0, den, 1.0)
                vals[:, j] += np.where(den > 0.0, (xs - knots[i]) / safe, 0.0) * prev[:, j - 1]
            if j < k:
                den = knots[i + k + 1] - knots[i + 1]
                safe = np.where(den > 0.0, den, 1.0)
                vals[:, j] += np.where(den > 0.0, (knots[i + k + 1] - xs) / safe, 0.0) * prev[:, j]
        if k < p:
            prev = vals
    ders = np.zeros((m, p + 1))
    if p > 0:
        for j in range(p + 1):
            i = spans - p + j
            if j >= 1:
                den = knots[i + p] - knots[i]
                safe = np.where(den > 0.0, den, 1.0)
                ders[:, j] += np.where(den > 0.0, p / safe, 0.0) * prev[:, j - 1]
            if j < p:
                den = knots[i + p + 1] - knots[i + 1]
                safe = np.where(den > 0.0, den, 1.0)
                ders[:, j] -= np.where(den > 0.0, p / safe, 0.0) * prev[:, j]
    return spans, vals, ders


@njit
def bspline_basis_batch_numba(knots, degree, xs):
    p = degree
    n = knots.shape[0] - p - 1
    last = n - 1
    while knots[last] == knots[last + 1]:
        last -= 1
    m = xs.shape[0]
    spans = np.empty(m, dtype=np.int64)
    vals = np.zeros((m, p + 1))
    ders = np.zeros((m, p + 1))
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    ndu = np.empty((p + 1, p + 1))
    for ip in range(m):
        x = xs[ip]
        if x >= knots[n]:
            k = last
        else:
            lo = p
            hi = n
            # bisection for knots[k] <= x < knots[k + 1]
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if x < knots[mid]:
                    hi = mid
                else:
                    lo = mid
            k = lo
        spans[ip] = k
        # Triangular table: upper part holds basis values, lower part the
        # knot differences (zero differences stand for the 0/0 := 0 rule).
        ndu[0, 0] = 1.0
        for j in range(1, p + 1):
            left[j] = x - knots[k + 1 - j]
            right[j] = knots[k + j] - x
            saved = 0.0
            for r in range(j):
                ndu[j, r] = right[r + 1] + left[j - r]
                den = ndu[j, r]
                temp = ndu[r, j - 1] / den if den != 0.0 else 0.0
                ndu[r, j] = saved + right[r + 1] * temp
                saved = left[j - r] * temp
            ndu[j, j] = saved
        for j in range(p + 1):
            vals[ip, j] = ndu[j, p]
        if p > 0:
            # Derivative from the degree p - 1 column.
            for j in range(p + 1):
                d = 0.0
                if j >= 1:
                    den = ndu[p, j - 1]
                    if den != 0.0:
                        d += p * ndu[j - 1, p - 1] / den
                if j < p:
                    den = ndu[p, j]
                    if den != 0.0:
                        d -= p * ndu[j, p - 1] / den
                ders[ip, j] = d
    return spans, vals, ders


# --- local element matrices --------------------------------------------------

def laplace_local_numpy(grads, detw):
    return np.einsum("eq,eqad,eqbd->eab", detw, grads, grads, optimize=True)


@njit
def laplace_local_numba(grads, detw):
    n_el, n_qp, n_loc, sd = grads.shape
    out = np.zeros((n_el, n_loc, n_loc))
    for e in range(n_el):
        for q in range(n_qp):
            w = detw[e, q]
            for a in range(n_loc):
                for b in range(a, n_loc):
                    s = 0.0
                    for d in range(sd):
                        s += grads[e, q, a, d] * grads[e, q, b, d]
                    out[e, a, b] += w * s
        for a in range(n_loc):
            for b in range(a + 1, n_loc):
                out[e, b, a] = out[e, a, b]
    return out


def mass_local_numpy(vals, detw):
    return np.einsum("eq,eqa,eqb->eab", detw, vals, vals, optimize=True)


@njit
def mass_local_numba(vals, detw):
    n_el, n_qp, n_loc = vals.shape
    out = np.zeros((n_el, n_loc, n_loc))
    for e in range(n_el):
        for q in range(n_qp):
            w = detw[e, q]
            for a in range(n_loc):
                wa = w * vals[e, q, a]
                for b in range(n_loc):
                    out[e, a, b] += wa * vals[e, q, b]
    return out


def source_local_numpy(vals, detw, f):
    return f * np.einsum("eq,eqa->ea", detw, vals)


@njit
def source_local_numba(vals, detw, f):
    n_el, n_qp, n_loc = vals.shape
    out = np.zeros((n_el, n_loc))
    for e in range(n_el):
        for q in range(n_qp):
            w = f * detw[e, q]
            for a in range(n_loc):
                out[e, a] += w * vals[e, q, a]
    return out


def voigt_stiffness(lam, mu, dim):
    """Isotropic stiffness in Voigt form (engineering shear strains).

    Ordering is ``[xx, yy, xy]`` in 2D (plane strain) and
    ``[xx, yy, zz, yz, xz, xy]`` in 3D.
    """
    if dim == 2:
        d = np.array([[lam + 2 * mu, lam, 0.0],
                      [lam, lam + 2 * mu, 0.0],
                      [0.0, 0.0, mu]])
    elif dim == 3:
        d = np.zeros((6, 6))
        d[:3, :3] = lam
        d[[0, 1, 2], [0, 1, 2]] = lam + 2 * mu
        d[[3, 4, 5], [3, 4, 5]] = mu
    else:
        raise ValueError(f"elasticity needs dim 2 or 3, got {dim}")
    return d


def strain_displacement(grads):
    """Voigt strain-displacement matrices, shape (..., n_voigt, n_loc * dim).

    Local DOFs are interleaved component-fastest: column ``a * dim + c``.
    """
    grads = np.asarray(grads)
    *lead, n_loc, dim = grads.shape
    if dim == 2:
        b = np.zeros((*lead, 3, n_loc * 2))
        gx, gy = grads[..., 0], grads[..., 1]
        b[..., 0, 0::2] = gx
        b[..., 1, 1::2] = gy
        b[..., 2, 0::2] = gy
        b[..., 2, 1::2] = gx
    elif dim == 3:
        b = np.zeros((*lead, 6, n_loc * 3))
        gx, gy, gz = grads[..., 0], grads[..., 1], grads[..., 2]
        b[..., 0, 0::3] = gx
        b[..., 1, 1::3] = gy
        b[..., 2, 2::3] = gz
        b[..., 3, 1::3] = gz
        b[..., 3, 2::3] = gy
        b[..., 4, 0::3] = gz
        b[..., 4, 2::3] = gx
        b[..., 5, 0::3] = gy
        b[..., 5, 1::3] = gx
    else:
        raise ValueError(f"elasticity needs dim 2 or 3, got {dim}")
    return b


def lin_elastic_local_numpy(grads, detw, lam, mu):
    dim = grads.shape[-1]
    d = voigt_stiffness(lam, mu, dim)
    b = strain_displacement(grads)
    return np.einsum("eq,eqvi,vw,eqwj->eij", detw, b, d, b, optimize=True)


@njit
def lin_elastic_local_numba(grads, detw, lam, mu):
    # Index form: lam * d_i phi_a d_k phi_b
    #             + mu * (d_k phi_a d_i phi_b + delta_ik grad phi_a . grad phi_b)
    n_el, n_qp, n_loc, sd = grads.shape
    nd = n_loc * sd
    out = np.zeros((n_el, nd, nd))
    for e in range(n_el):
        for q in range(n_qp):
            w = detw[e, q]
            for a in range(n_loc):
                for b in range(n_loc):
                    dot = 0.0
                    for j in range(sd):
                        dot += grads[e, q, a, j] * grads[e, q, b, j]
                    for i in range(sd):
                        gai = grads[e, q, a, i]
                        gbi = grads[e, q, b, i]
                        for k in range(sd):
                            v = lam * gai * grads[e, q, b, k] + mu * grads[e, q, a, k] * gbi
                            if i == k:
                                v += mu * dot
                            out[e, a * sd + i, b * sd + k] += w * v
    return out


_impl = {
    "numba": {
        "bspline": bspline_basis_batch_numba,
        "laplace": laplace_local_numba,
        "mass": mass_local_numba,
        "source": source_local_numba,
        "elastic": lin_elastic_local_numba,
    },
    "numpy": {
        "bspline": bspline_basis_batch_numpy,
        "laplace": laplace_local_numpy,
        "mass": mass_local_numpy,
        "source": source_local_numpy,
        "elastic": lin_elastic_local_numpy,
    },
}

BACKEND = "numba" if USE_NUMBA else "numpy"
_K = _impl[BACKEND]


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def bspline_basis_batch(knots, degree, xs):
    return _K["bspline"](_f64(knots), int(degree), _f64(np.atleast_1d(xs)))


def laplace_local(grads, detw):
    return _K["laplace"](_f64(grads), _f64(detw))


def mass_local(vals, detw):
    return _K["mass"](_f64(vals), _f64(detw))


def source_local(vals, detw, f):
    return _K["source"](_f64(vals), _f64(detw), float(f))


def lin_elastic_local(grads, detw, lam, mu):
    return _K["elastic"](_f64(grads), _f64(detw), float(lam), float(mu))
