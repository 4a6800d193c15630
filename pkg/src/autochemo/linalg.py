"""Sparse symmetric systems: CSR storage plus Jacobi-preconditioned CG.

Matrices are plain scipy CSR (sorted, duplicate-free column indices);
the solver is a hand-rolled preconditioned conjugate gradient so that
iteration counts and residual histories are available to diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

SparseMatrix = sp.csr_matrix

DEFAULT_TOL = 1e-10


class DimensionMismatchError(ValueError):
    """Matrix and vector shapes disagree."""


class SolverError(RuntimeError):
    """CG failed to reach the requested tolerance within max_iter."""

    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


@dataclass
class SolveReport:
    iterations: int
    residual: float          # final relative residual ||b - Ax|| / ||b||
    converged: bool
    residual_history: list = field(default_factory=list, repr=False)


def cg_solve(A, b, x0=None, tol: float = DEFAULT_TOL, max_iter: int | None = None):
    """Solve A x = b for symmetric positive definite A.

    Jacobi (diagonal) preconditioning; convergence when the relative
    residual drops below tol.  Raises SolverError (with the report
    attached) if max_iter iterations do not suffice, which also surfaces
    indefinite systems.
    """
    n = A.shape[0]
    if A.shape[0] != A.shape[1] or b.shape != (n,):
        raise DimensionMismatchError(f"A is {A.shape}, b is {b.shape}")
    if not (0.0 < tol < 1.0):
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    if max_iter is None:
        max_iter = 10 * n

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros(n), SolveReport(iterations=0, residual=0.0, converged=True)

    if x0 is None:
        x = np.zeros(n)
        r = b.copy()
    else:
        if x0.shape != (n,):
            raise DimensionMismatchError(f"x0 is {x0.shape}, expected ({n},)")
        x = x0.astype(float, copy=True)
        r = b - A @ x

    diag = A.diagonal()
    if np.any(diag == 0.0):
        raise SolverError("zero diagonal entry, Jacobi preconditioner undefined",
                          SolveReport(iterations=0, residual=np.inf, converged=False))
    inv_diag = 1.0 / diag

    history = [float(np.linalg.norm(r) / b_norm)]
    if history[0] <= tol:
        return x, SolveReport(iterations=0, residual=history[0], converged=True,
                              residual_history=history)

    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            report = SolveReport(iterations=it, residual=history[-1], converged=False,
                                 residual_history=history)
            raise SolverError(f"matrix not positive definite (p'Ap = {pAp:g})", report)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r) / b_norm)
        history.append(res)
        if res <= tol:
            return x, SolveReport(iterations=it, residual=res, converged=True,
                                  residual_history=history)
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    report = SolveReport(iterations=max_iter, residual=history[-1], converged=False,
                         residual_history=history)
    raise SolverError(
        f"no convergence after {max_iter} iterations (relative residual {history[-1]:.3e})",
        report)
