"""Solvers for SPD tridiagonal systems.

Conjugate gradient is the production path; the Thomas elimination is an
independent direct solver used to cross-check it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import SymTridiagonal

__all__ = ["CgOptions", "ConvergenceError", "cg_solve", "thomas_solve"]


class ConvergenceError(RuntimeError):
    """Raised when CG fails to reach the requested residual reduction."""

    def __init__(self, message, final_residual, iterations):
        super().__init__(message)
        self.final_residual = final_residual
        self.iterations = iterations


@dataclass
class CgOptions:
    rel_tolerance: float = 1e-10
    max_iterations: int | None = None  # None means 10*n
    jacobi: bool = False

    def __post_init__(self):
        if not 0.0 < self.rel_tolerance < 1.0:
            raise ValueError("rel_tolerance must be in (0, 1)")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def cg_solve(A: SymTridiagonal, b: np.ndarray, x0: np.ndarray | None = None,
             opts: CgOptions | None = None, callback=None):
    """Conjugate gradient for an SPD system A x = b.

    Parameters
    ----------
    A : SymTridiagonal
        Symmetric positive definite matrix.
    b : ndarray
        Right-hand side.
    x0 : ndarray, optional
        Starting guess (zeros by default).
    opts : CgOptions, optional
        Tolerance is on the residual reduction ||b - A x|| / ||b||.
    callback : callable, optional
        Called with a copy of the iterate after each iteration.

    Returns
    -------
    (x, iterations, final_residual)
        final_residual is the achieved relative residual.

    Raises
    ------
    ConvergenceError
        If max_iterations is exhausted first.
    """
    opts = opts or CgOptions()
    n = A.n
    b = np.asarray(b, dtype=float)
    if len(b) != n:
        raise ValueError(f"dimension mismatch: matrix is {n}, rhs is {len(b)}")
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros(n), 0, 0.0

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if len(x) != n:
        raise ValueError("x0 has wrong length")
    max_iter = opts.max_iterations if opts.max_iterations is not None else 10 * n

    precond = (1.0 / A.diag) if opts.jacobi else None
    r = b - A @ x
    res = np.linalg.norm(r)
    if res <= opts.rel_tolerance * b_norm:
        return x, 0, res / b_norm
    z = precond * r if precond is not None else r
    p = z.copy()
    rz = float(r @ z)

    for k in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if callback is not None:
            callback(x.copy())
        res = np.linalg.norm(r)
        if res <= opts.rel_tolerance * b_norm:
            return x, k, res / b_norm
        z = precond * r if precond is not None else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    raise ConvergenceError(
        f"CG did not converge in {max_iter} iterations "
        f"(relative residual {res / b_norm:.3e})", res / b_norm, max_iter)


def thomas_solve(A: SymTridiagonal, b: np.ndarray) -> np.ndarray:
    """Direct tridiagonal elimination (no pivoting).

    Exact to round-off for well-conditioned systems; used as the oracle
    against which cg_solve is validated.
    """
    n = A.n
    b = np.asarray(b, dtype=float)
    if len(b) != n:
        raise ValueError(f"dimension mismatch: matrix is {n}, rhs is {len(b)}")
    d = A.diag
    e = A.off
    scale = np.max(np.abs(d)) + (np.max(np.abs(e)) if n > 1 else 0.0)

    cp = np.empty(n - 1) if n > 1 else np.empty(0)
    dp = np.empty(n)
    piv = d[0]
    if abs(piv) <= 1e-300 * max(scale, 1.0):
        raise ZeroDivisionError("zero pivot in tridiagonal elimination at row 0")
    dp[0] = b[0] / piv
    if n > 1:
        cp[0] = e[0] / piv
    for i in range(1, n):
        piv = d[i] - e[i - 1] * cp[i - 1]
        if abs(piv) <= 1e-300 * max(scale, 1.0):
            raise ZeroDivisionError(f"zero pivot in tridiagonal elimination at row {i}")
        dp[i] = (b[i] - e[i - 1] * dp[i - 1]) / piv
        if i < n - 1:
            cp[i] = e[i] / piv

    x = np.empty(n)
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x
