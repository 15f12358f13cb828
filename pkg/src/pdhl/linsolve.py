"""Iterative solvers for the SPD systems produced by the discretization.

A single hand-rolled preconditioned conjugate gradient covers everything:
plain Poisson solves, Schrödinger-type shifted systems, and the inner
solves of inverse power iteration.  The default preconditioner is Jacobi
(the operators here have constant diagonal, so it is just a scaling); for
grids beyond a few hundred thousand unknowns pass the output of
:func:`amg_preconditioner`, which wraps a classical Ruge-Stuben hierarchy
and brings iteration counts down from thousands to dozens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotConverged


@dataclass
class SolveReport:
    """Outcome of an iterative solve."""

    iterations: int
    final_residual: float
    converged: bool


def _as_apply(M, A):
    """Normalize the preconditioner argument to a callable r -> z."""
    if M is None:
        d = A.diagonal()
        inv = 1.0 / d
        return lambda r: inv * r
    if callable(M) and not hasattr(M, "matvec"):
        return M
    return M.matvec


def conjugate_gradient(A, b, tol=1e-10, maxiter=None, M=None, x0=None, callback=None):
    """Preconditioned conjugate gradient for SPD systems.

    Parameters
    ----------
    A : sparse matrix or LinearOperator
        Symmetric positive definite.
    b : ndarray
    tol : float
        Relative residual target ``||b - Ax|| <= tol * ||b||``.
    maxiter : int, optional
        Defaults to the system size.
    M : optional
        Preconditioner: ``None`` for Jacobi, or any object with a
        ``matvec`` (e.g. from :func:`amg_preconditioner`), or a callable.
    x0 : ndarray, optional
        Initial guess (default zero).
    callback : callable, optional
        Invoked as ``callback(x)`` after every iteration.

    Returns
    -------
    (x, SolveReport)

    Raises
    ------
    NotConverged
        After ``maxiter`` iterations; the exception carries the last
        iterate and a report, so callers may inspect or reuse it.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    if maxiter is None:
        maxiter = n
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)
    apply_m = _as_apply(M, A)

    if x0 is None:
        x = np.zeros(n)
        r = b.copy()
    else:
        x = np.asarray(x0, dtype=float).copy()
        r = b - A @ x
    if float(np.linalg.norm(r)) <= tol * bnorm:
        return x, SolveReport(0, float(np.linalg.norm(r)) / bnorm, True)
    z = apply_m(r)
    p = z.copy()
    rz = float(r @ z)
    rnorm = float(np.linalg.norm(r))

    for it in range(1, int(maxiter) + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rnorm = float(np.linalg.norm(r))
        if callback is not None:
            callback(x)
        if rnorm <= tol * bnorm:
            return x, SolveReport(it, rnorm / bnorm, True)
        z = apply_m(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    report = SolveReport(int(maxiter), rnorm / bnorm, False)
    raise NotConverged(
        f"CG did not reach tol={tol} in {maxiter} iterations "
        f"(relative residual {report.final_residual:.3e})",
        x=x,
        report=report,
    )


def amg_preconditioner(A):
    """One V-cycle of a classical AMG hierarchy, as a preconditioner.

    Setup is deterministic for a fixed matrix.  The returned object has a
    ``matvec`` method and can be passed as ``M=`` to
    :func:`conjugate_gradient`; reuse it across solves that share a matrix.
    """
    import pyamg

    ml = pyamg.ruge_stuben_solver(A.tocsr())
    return ml.aspreconditioner(cycle="V")


def auto_preconditioner(A, threshold=200_000):
    """Jacobi below ``threshold`` unknowns, AMG above."""
    if A.shape[0] >= threshold:
        return amg_preconditioner(A)
    return None


def smallest_eigenvalue(A, tol=1e-8, maxiter=100, M=None, return_vector=False):
    """Smallest eigenvalue of an SPD matrix by inverse power iteration.

    Starts from the normalized all-ones vector (deterministic), solves
    ``A y = x`` with CG at each step, and returns the Rayleigh quotient
    once its relative change drops below ``tol``.

    Parameters
    ----------
    A : sparse matrix
    tol : float
        Relative change target for the eigenvalue.
    maxiter : int
        Outer iteration cap.
    M : optional
        Preconditioner for the inner CG solves (reused across steps).
    return_vector : bool
        Also return the normalized eigenvector estimate.

    Raises
    ------
    NotConverged
        If the Rayleigh quotient has not settled after ``maxiter`` steps.
    """
    n = A.shape[0]
    x = np.ones(n) / np.sqrt(n)
    lam = float(x @ (A @ x))
    inner_tol = min(1e-10, tol * 1e-2)
    for it in range(1, int(maxiter) + 1):
        y, _ = conjugate_gradient(A, x, tol=inner_tol, M=M)
        x = y / float(np.linalg.norm(y))
        lam_new = float(x @ (A @ x))
        if abs(lam_new - lam) <= tol * abs(lam_new):
            if return_vector:
                return lam_new, x
            return lam_new
        lam = lam_new
    raise NotConverged(
        f"inverse power iteration did not settle in {maxiter} steps",
        x=x,
        report=SolveReport(int(maxiter), abs(lam_new - lam), False),
    )
