"""Linear solvers and the Newton wrapper used by problem descriptions."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

METHODS = ("direct", "cg")


class SolverError(RuntimeError):
    """Singular matrix or iterative non-convergence.

    ``history`` holds the residual norms recorded before the failure.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


@dataclass(frozen=True)
class SolverConfig:
    method: str = "direct"
    cg_rtol: float = 1e-12
    cg_maxiter: int = 10000
    i_max: int = 1
    eps_a: float = 1e-10
    pivot_rtol: float = 1e-14

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"linear method must be one of {METHODS}, got {self.method!r}")
        if self.cg_rtol <= 0 or self.eps_a <= 0 or self.pivot_rtol <= 0:
            raise ValueError("tolerances must be positive")
        if self.i_max < 1 or self.cg_maxiter < 1:
            raise ValueError("i_max and cg_maxiter must be >= 1")


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residuals: list = field(default_factory=list)
    energies: list = field(default_factory=list)


def pcg(a, b, x0=None, rtol=1e-12, maxiter=10000):
    """Conjugate gradients with a Jacobi preconditioner.

    Records the residual norm and the energy functional
    ``0.5 x.A.x - b.x`` after every iterate; the latter equals the squared
    A-norm of the error up to a constant and never increases.
    """
    a = sp.csr_matrix(a)
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    diag = a.diagonal()
    if np.any(diag <= 0.0):
        raise SolverError("Jacobi preconditioner needs a positive diagonal")
    minv = 1.0 / diag
    r = b - a @ x
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(np.zeros_like(b), 0, [0.0], [0.0])
    ax = a @ x
    res = [float(np.linalg.norm(r))]
    energies = [float(0.5 * x @ ax - b @ x)]
    z = minv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        if res[-1] <= rtol * bnorm:
            return CGResult(x, it - 1, res, energies)
        ap = a @ p
        pap = p @ ap
        if pap <= 0.0:
            raise SolverError(f"matrix not positive definite (p.A.p = {pap:.3e})", res)
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        ax = ax + alpha * ap
        res.append(float(np.linalg.norm(r)))
        energies.append(float(0.5 * x @ ax - b @ x))
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if res[-1] <= rtol * bnorm:
        return CGResult(x, maxiter, res, energies)
    raise SolverError(f"CG did not converge in {maxiter} iterations "
                      f"(relative residual {res[-1] / bnorm:.3e})", res)


def _direct(a, b, pivot_rtol):
    a = sp.csc_matrix(a)
    scale = np.abs(a.diagonal()).max() if a.shape[0] else 1.0
    try:
        lu = spla.splu(a)
    except RuntimeError as exc:
        raise SolverError(f"singular matrix: {exc}") from exc
    piv = np.abs(lu.U.diagonal())
    if piv.min() < pivot_rtol * scale:
        raise SolverError(f"singular matrix: pivot {piv.min():.3e} below "
                          f"{pivot_rtol:g} x max diagonal {scale:.3e}")
    return lu.solve(b)


def solve_matrix(matrix, rhs, config=SolverConfig()):
    rhs = np.asarray(rhs, dtype=np.float64)
    if config.method == "direct":
        x = _direct(matrix, rhs, config.pivot_rtol)
    else:
        x = pcg(matrix, rhs, rtol=config.cg_rtol, maxiter=config.cg_maxiter).x
    bnorm = np.linalg.norm(rhs)
    res = np.linalg.norm(matrix @ x - rhs)
    if bnorm > 0 and res / bnorm >= 1e-9:
        raise SolverError(f"relative residual {res / bnorm:.3e} too large", [res])
    return x


def solve_linear(system, config=SolverConfig()):
    """Solve a system whose essential BCs have already been applied."""
    return solve_matrix(system.matrix, system.rhs, config)


@dataclass
class NewtonReport:
    x: np.ndarray
    converged: bool
    iterations: int
    residuals: list
    corrections: list

    def summary(self):
        state = "converged" if self.converged else "NOT converged"
        return (f"newton: {state} after {self.iterations} iteration(s), "
                f"residual {self.residuals[-1]:.3e}")


def newton_solve(residual, tangent, x0, config=SolverConfig()):
    """Plain Newton iteration ``x <- x - K(x)^-1 r(x)``.

    ``residual`` and ``tangent`` are callables of the current iterate. Stops
    when ``|r| < eps_a`` or after ``i_max`` corrections; non-convergence is
    reported, not raised.
    """
    x = np.array(x0, dtype=np.float64)
    residuals = [float(np.linalg.norm(residual(x)))]
    corrections = []
    it = 0
    while residuals[-1] >= config.eps_a and it < config.i_max:
        dx = solve_matrix(tangent(x), -residual(x), config)
        x = x + dx
        it += 1
        corrections.append(float(np.linalg.norm(dx)))
        residuals.append(float(np.linalg.norm(residual(x))))
    return NewtonReport(x, residuals[-1] < config.eps_a, it, residuals, corrections)


def newton_solve_system(system, config=SolverConfig(), x0=None):
    """Newton on a linear system with BCs applied (``r = K x - b``).

    The start vector carries the prescribed values, so the iteration works in
    the space of admissible fields like the solver it mirrors.
    """
    k = system.matrix
    x = np.zeros(system.n_dofs) if x0 is None else np.array(x0, dtype=np.float64)
    x[system.fixed_dofs] = system.fixed_values
    return newton_solve(lambda v: k @ v - system.rhs, lambda v: k, x, config)
