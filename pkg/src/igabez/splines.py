"""Univariate Bernstein, B-spline and NURBS bases.

Indices are 0-based: for a knot vector ``xi_0 .. xi_{n+p}`` the basis
functions are ``N_0 .. N_{n-1}``. Spans are half-open,
``xi_k <= x < xi_{k+1}``, except that the right end of the parameter range
belongs to the last non-empty span.
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from . import kernels

MAX_DEGREE = 10


class DomainError(ValueError):
    """A parameter value lies outside the domain of a basis."""


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Non-decreasing knots together with the polynomial degree."""

    knots: np.ndarray
    degree: int

    def __post_init__(self):
        knots = np.array(self.knots, dtype=np.float64)
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        p = self.degree
        if not isinstance(p, (int, np.integer)) or p < 0:
            raise ValueError(f"degree must be a non-negative integer, got {p!r}")
        if p > MAX_DEGREE:
            raise ValueError(f"degree {p} exceeds the supported maximum {MAX_DEGREE}")
        object.__setattr__(self, "degree", int(p))
        if knots.ndim != 1 or not np.all(np.isfinite(knots)):
            raise ValueError("knots must be a 1D array of finite values")
        if np.any(np.diff(knots) < 0.0):
            i = int(np.argmax(np.diff(knots) < 0.0))
            raise ValueError(f"knots must be non-decreasing (knot {i + 1} < knot {i})")
        n = len(knots) - p - 1
        if n < p + 1:
            raise ValueError(
                f"{len(knots)} knots give {n} basis functions of degree {p}; "
                f"at least {p + 1} are required")
        if knots[-1] <= knots[0]:
            raise ValueError("degenerate knot vector: zero parametric length")
        _, counts = np.unique(knots, return_counts=True)
        if counts.max() > p + 1:
            raise ValueError(f"knot multiplicity {counts.max()} exceeds degree + 1 = {p + 1}")

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.knots, other.knots)

    __hash__ = None

    @property
    def n(self):
        """Number of basis functions."""
        return len(self.knots) - self.degree - 1

    @property
    def bounds(self):
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def is_open(self):
        p, k = self.degree, self.knots
        return bool(np.all(k[: p + 1] == k[0]) and np.all(k[-p - 1:] == k[-1]))

    def unique(self):
        return np.unique(self.knots)

    def multiplicity(self, value):
        return int(np.count_nonzero(self.knots == value))

    def spans(self):
        """Indices ``k`` of all non-empty spans ``[xi_k, xi_{k+1})``."""
        k = self.knots
        return np.nonzero(k[1:] > k[:-1])[0]

    def find_span(self, x):
        lo, hi = self.bounds
        if not lo <= x <= hi:
            raise DomainError(f"parameter {x!r} outside knot range [{lo}, {hi}]")
        return int(kernels.find_spans_numpy(self.knots, self.degree, [x])[0])

    def greville(self):
        """Greville abscissae (knot averages), one per basis function."""
        p, k = self.degree, self.knots
        if p == 0:
            return 0.5 * (k[:-1] + k[1:])
        return np.array([k[i + 1: i + p + 1].mean() for i in range(self.n)])


def open_knot_vector(degree, interior=(), bounds=(0.0, 1.0)):
    lo, hi = bounds
    knots = [lo] * (degree + 1) + sorted(interior) + [hi] * (degree + 1)
    return KnotVector(knots, degree)


def uniform_knot_vector(degree, n_elements, bounds=(0.0, 1.0)):
    lo, hi = bounds
    interior = np.linspace(lo, hi, n_elements + 1)[1:-1]
    return open_knot_vector(degree, interior, bounds)


@dataclass(frozen=True)
class BernsteinBasisValues:
    values: np.ndarray
    derivatives: np.ndarray


@dataclass(frozen=True)
class BSplineBasisValues:
    first_active: int
    values: np.ndarray
    derivatives: np.ndarray

    @property
    def indices(self):
        return np.arange(self.first_active, self.first_active + len(self.values))


def _bernstein_table(p, x):
    # Row k holds the degree-k values B_{0..k,k}.
    rows = [np.ones(1)]
    for k in range(1, p + 1):
        prev = rows[-1]
        cur = np.zeros(k + 1)
        cur[:k] += (1.0 - x) * prev
        cur[1:] += x * prev
        rows.append(cur)
    return rows


def bernstein_eval(p, xi):
    """Bernstein polynomials of degree ``p`` and their derivatives at ``xi``."""
    if not isinstance(p, (int, np.integer)) or p < 0:
        raise ValueError(f"degree must be a non-negative integer, got {p!r}")
    if not 0.0 <= xi <= 1.0:
        raise DomainError(f"Bernstein basis is defined on [0, 1], got {xi!r}")
    rows = _bernstein_table(p, float(xi))
    ders = np.zeros(p + 1)
    if p > 0:
        low = rows[p - 1]
        ders[1:] += p * low
        ders[:p] -= p * low
    return BernsteinBasisValues(rows[p], ders)


def bernstein_batch(p, xs):
    """Vectorized Bernstein values and derivatives, shapes (m, p + 1)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    prev = np.ones((len(xs), 1))
    low = prev
    for k in range(1, p + 1):
        cur = np.zeros((len(xs), k + 1))
        cur[:, :k] += (1.0 - xs)[:, None] * prev
        cur[:, 1:] += xs[:, None] * prev
        low, prev = prev, cur
    ders = np.zeros((len(xs), p + 1))
    if p > 0:
        ders[:, 1:] += p * low
        ders[:, :p] -= p * low
    return prev, ders


def bernstein_closed_form(p, xi):
    """Binomial formula, used as an independent check of the recursion."""
    return np.array([comb(p, a) * xi**a * (1.0 - xi) ** (p - a) for a in range(p + 1)])


def bspline_eval(kv, xi):
    """Active B-spline values and first derivatives at ``xi``."""
    span = kv.find_span(xi)
    _, vals, ders = kernels.bspline_basis_batch_numpy(kv.knots, kv.degree, [xi])
    return BSplineBasisValues(span - kv.degree, vals[0], ders[0])


def bspline_eval_all(kv, xi):
    """All ``n`` basis values (mostly zero) at ``xi``."""
    b = bspline_eval(kv, xi)
    out = np.zeros(kv.n)
    out[b.indices] = b.values
    return out


def knot_insertion_matrix(kv, xibar):
    """Insert ``xibar`` once; return ``(new_kv, A)`` with new control ``A @ P``."""
    lo, hi = kv.bounds
    if not lo < xibar < hi:
        raise ValueError(f"inserted knot {xibar!r} must lie strictly inside ({lo}, {hi})")
    p, knots = kv.degree, kv.knots
    s = kv.multiplicity(xibar)
    if s + 1 > p + 1:
        raise ValueError(f"inserting {xibar!r} would raise its multiplicity to {s + 1} > {p + 1}")
    k = int(np.searchsorted(knots, xibar, side="right") - 1)
    n = kv.n
    a = np.zeros((n + 1, n))
    for i in range(n + 1):
        if i <= k - p:
            a[i, i] = 1.0
        elif i <= k:
            alpha = (xibar - knots[i]) / (knots[i + p] - knots[i])
            a[i, i] = alpha
            a[i, i - 1] = 1.0 - alpha
        else:
            a[i, i - 1] = 1.0
    new_kv = KnotVector(np.insert(knots, k + 1, xibar), p)
    return new_kv, a


def insert_knot(kv, control, xibar):
    """Boehm knot insertion on projective control points.

    ``control`` has shape (n, d); pass weighted points ``(w P, w)`` to refine
    a NURBS curve. The curve is unchanged.
    """
    control = np.asarray(control, dtype=np.float64)
    if control.shape[0] != kv.n:
        raise ValueError(f"expected {kv.n} control points, got {control.shape[0]}")
    new_kv, a = knot_insertion_matrix(kv, xibar)
    return new_kv, a @ control


def bspline_curve_eval(kv, control, xi):
    """Point and tangent of a polynomial B-spline curve."""
    b = bspline_eval(kv, xi)
    pts = np.asarray(control, dtype=np.float64)[b.indices]
    return b.values @ pts, b.derivatives @ pts


def _check_weights(kv, control, weights):
    control = np.asarray(control, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if control.shape[0] != kv.n or weights.shape != (kv.n,):
        raise ValueError(
            f"expected {kv.n} control points and weights, got "
            f"{control.shape[0]} and {weights.shape}")
    if np.any(weights <= 0.0):
        raise ValueError("NURBS weights must be strictly positive")
    return control, weights


def nurbs_eval_1d(kv, control, weights, xi):
    """Point and tangent of a NURBS curve via the rational basis."""
    control, weights = _check_weights(kv, control, weights)
    b = bspline_eval(kv, xi)
    w = weights[b.indices]
    wn = w * b.values
    wd = w * b.derivatives
    big_w = wn.sum()
    dbig_w = wd.sum()
    r = wn / big_w
    dr = (wd - r * dbig_w) / big_w
    pts = control[b.indices]
    return r @ pts, dr @ pts


def nurbs_eval_projective(kv, control, weights, xi):
    """Same curve as :func:`nurbs_eval_1d`, through the lifted B-spline curve."""
    control, weights = _check_weights(kv, control, weights)
    lifted = np.column_stack([control * weights[:, None], weights])
    h, dh = bspline_curve_eval(kv, lifted, xi)
    point = h[:-1] / h[-1]
    tangent = (dh[:-1] - point * dh[-1]) / h[-1]
    return point, tangent


def nurbs_basis_1d(kv, weights, xi):
    """All ``n`` rational basis values at ``xi``."""
    weights = np.asarray(weights, dtype=np.float64)
    wn = weights * bspline_eval_all(kv, xi)
    return wn / wn.sum()
