"""Krylov solvers for the pressure and momentum systems.

Both solvers take a sparse matrix (or anything supporting ``@``), return the
iterate together with a :class:`SolveReport`, and never raise on
non-convergence: the caller inspects ``report.converged``.  The reported
residual is always recomputed as ``||b - A x|| / ||b||``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_iters: int | None = None  # None means 10 * n
    preconditioner: str = "none"  # "none" or "diagonal"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("solver tolerances must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.preconditioner not in ("none", "diagonal"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")

    def iteration_cap(self, n: int) -> int:
        return 10 * n if self.max_iters is None else self.max_iters


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool
    rhs_mean: float = 0.0
    message: str = ""


def _diag_inverse(A, cfg):
    if cfg.preconditioner != "diagonal":
        return None
    d = np.asarray(A.diagonal(), dtype=float)
    d[d == 0] = 1.0
    return 1.0 / d


def _report(A, x, b, bnorm, it, cfg, rhs_mean=0.0, message=""):
    r = np.linalg.norm(b - A @ x)
    rel = r / bnorm if bnorm > 0 else 0.0
    ok = rel <= cfg.rel_tol or r <= cfg.abs_tol
    return SolveReport(it, float(rel), bool(ok), float(rhs_mean), message)


def solve_spd(A, b, cfg: SolverConfig = SolverConfig(), x0=None,
              constant_nullspace: bool = False):
    """Conjugate gradients for symmetric positive (semi-)definite ``A``.

    With ``constant_nullspace`` the arithmetic mean of ``b`` is removed before
    the solve (its size is returned as ``report.rhs_mean``) and the iterates
    are kept orthogonal to the constant vector.
    """
    b = np.array(b, dtype=float)
    n = len(b)
    rhs_mean = 0.0

    def project(z):
        return z - z.mean() if constant_nullspace else z

    if constant_nullspace:
        rhs_mean = float(b.mean())
        b = project(b)
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else project(np.array(x0, dtype=float))
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True, rhs_mean)

    minv = _diag_inverse(A, cfg)
    stop = max(cfg.rel_tol * bnorm, cfg.abs_tol)
    cap = cfg.iteration_cap(n)
    r = project(b - A @ x)
    z = r * minv if minv is not None else r
    z = project(z)
    p = z.copy()
    rz = r @ z
    it = 0
    message = ""
    while it < cap:
        if np.linalg.norm(r) <= stop:
            break
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0.0:
            message = "breakdown: non-positive curvature"
            break
        step = rz / pAp
        x += step * p
        r -= step * Ap
        r = project(r)
        it += 1
        # periodic true-residual refresh limits drift of the recurrence
        if it % 50 == 0:
            r = project(b - A @ x)
        z = project(r * minv) if minv is not None else r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    x = project(x)
    rep = _report(A, x, b, bnorm, it, cfg, rhs_mean, message)
    if not rep.converged and not message:
        rep = SolveReport(rep.iterations, rep.final_residual, False, rhs_mean,
                          "iteration limit reached")
    return x, rep


def solve_krylov(A, b, cfg: SolverConfig = SolverConfig(preconditioner="diagonal"),
                 x0=None):
    """Right-preconditioned BiCGSTAB for a general nonsingular ``A``."""
    b = np.array(b, dtype=float)
    n = len(b)
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)

    minv = _diag_inverse(A, cfg)

    def prec(z):
        return z * minv if minv is not None else z

    stop = max(cfg.rel_tol * bnorm, cfg.abs_tol)
    cap = cfg.iteration_cap(n)
    r = b - A @ x
    r_hat = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    it = 0
    message = ""
    while it < cap and np.linalg.norm(r) > stop:
        rho_new = r_hat @ r
        if rho_new == 0.0:
            message = "breakdown: rho = 0"
            break
        if it == 0:
            p = r.copy()
        else:
            beta = (rho_new / rho) * (alpha / omega)
            p = r + beta * (p - omega * v)
        rho = rho_new
        phat = prec(p)
        v = A @ phat
        denom = r_hat @ v
        if denom == 0.0:
            message = "breakdown: r_hat . v = 0"
            break
        alpha = rho / denom
        s = r - alpha * v
        it += 1
        if np.linalg.norm(s) <= stop:
            x += alpha * phat
            r = s
            break
        shat = prec(s)
        t = A @ shat
        tt = t @ t
        if tt == 0.0:
            message = "breakdown: t = 0"
            x += alpha * phat
            break
        omega = (t @ s) / tt
        x += alpha * phat + omega * shat
        r = s - omega * t
        if omega == 0.0:
            message = "stagnation: omega = 0"
            break
    rep = _report(A, x, b, bnorm, it, cfg, message=message)
    if not rep.converged and not message:
        rep = SolveReport(rep.iterations, rep.final_residual, False, 0.0,
                          "iteration limit reached")
    return x, rep
