"""BDF2 projection scheme for the incompressible Navier-Stokes equations.

Velocity and pressure are both piecewise constant.  One composite step:

1. momentum: ``(3 u~ - 4 u^n + u^{n-1}) / 2k - lap~ u~ / Re + b~(2u^n - u^{n-1}, u~)
   + grad p^n = f^{n+1}``
2. pressure increment: ``lap_h phi = (3 / 2k) div u~``, ``p^{n+1} = p^n + phi``
3. correction: ``u^{n+1} = u~ - (2k/3) grad phi``

The first step is a semi-implicit Euler projection started from the RT0
projection of the initial velocity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp

from . import fields as fld
from . import operators as ops
from .analytic import ZERO_VECTOR, AnalyticField
from .mesh import Mesh
from .solver import SolveReport, SolverConfig, solve_krylov, solve_spd

log = logging.getLogger(__name__)


class SchemeError(RuntimeError):
    pass


class SolverFailure(SchemeError):
    def __init__(self, stage: str, report: SolveReport):
        super().__init__(f"{stage} solve failed: {report.message or 'not converged'} "
                         f"(iterations={report.iterations}, residual={report.final_residual:.3e})")
        self.stage = stage
        self.report = report


class CompatibilityError(SchemeError):
    """Pressure right-hand side is not orthogonal to constants."""


@dataclass(frozen=True)
class SchemeConfig:
    reynolds: float = 1.0
    dt: float = 0.01
    t_end: float = 0.1
    forcing: AnalyticField = ZERO_VECTOR
    initial_velocity: AnalyticField = ZERO_VECTOR
    solver: SolverConfig = SolverConfig(rel_tol=1e-12)
    momentum_solver: SolverConfig = SolverConfig(rel_tol=1e-12, preconditioner="diagonal")
    output_every: int = 1

    def __post_init__(self):
        for name in ("reynolds", "dt"):
            val = getattr(self, name)
            if not np.isfinite(val) or val <= 0:
                raise ValueError(f"{name} must be positive and finite, got {val!r}")
        if not np.isfinite(self.t_end) or self.t_end < self.dt:
            raise ValueError(f"t_end must be >= dt, got t_end={self.t_end!r}, dt={self.dt!r}")
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-12 * self.t_end:
            raise ValueError(f"t_end={self.t_end!r} is not a whole number of steps dt={self.dt!r}")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class SchemeState:
    step: int
    u_prev: np.ndarray
    u_curr: np.ndarray
    u_tilde: np.ndarray
    p_curr: np.ndarray
    f_curr: np.ndarray
    warnings: list = field(default_factory=list)

    @property
    def time_index(self) -> int:
        return self.step


@dataclass(frozen=True)
class StepDiagnostics:
    step: int
    time: float
    kinetic_energy: float
    tilde_h_norm: float
    div_inf: float
    increment: float
    pressure_p1nc_norm: float
    pythagoras: float  # relative defect of |u|^2 - |u~|^2 + |u - u~|^2 = 0
    momentum: SolveReport
    pressure: SolveReport


@dataclass
class RunResult:
    state: SchemeState
    diagnostics: list
    energy: list  # |u^m|^2 + k sum_{n=2}^m ||u~^n||_h^2, for m >= 1
    pressure_sum: list  # k sum_{n=2}^m |P1nc p^n|^2
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def max_energy(self) -> float:
        return max(self.energy, default=0.0)

    @property
    def max_increment(self) -> float:
        return max((d.increment for d in self.diagnostics), default=0.0)

    @property
    def max_pressure_sum(self) -> float:
        return max(self.pressure_sum, default=0.0)

    @property
    def max_pythagoras(self) -> float:
        return max((d.pythagoras for d in self.diagnostics), default=0.0)

    @property
    def max_div(self) -> float:
        return max((d.div_inf for d in self.diagnostics), default=0.0)


class _Operators:
    """Assembled operators reused across steps."""

    def __init__(self, m: Mesh):
        self.grad = ops.assemble_grad(m)
        self.div = ops.assemble_div(m, self.grad)
        self.lap = ops.assemble_lap_h(m, self.grad, self.div)
        self.lap_tilde = ops.assemble_lap_tilde(m)
        self.neg_lap = sp.csr_matrix(-self.lap.weighted)


_CACHE: dict = {}


def _operators(m: Mesh) -> _Operators:
    key = id(m)
    hit = _CACHE.get(key)
    if hit is None or hit[0] is not m:
        _CACHE.clear()
        hit = (m, _Operators(m))
        _CACHE[key] = hit
    return hit[1]


def momentum_operator(advecting, coef: float, cfg: SchemeConfig, m: Mesh) -> ops.SparseOperator:
    """``coef * v - lap~ v / Re + b~(advecting, v)`` as a scalar-block operator."""
    o = _operators(m)
    conv = ops.assemble_conv(advecting, m)
    w = (sp.diags(coef * m.areas) - o.lap_tilde.weighted / cfg.reynolds + conv.weighted)
    return ops.SparseOperator(sp.csr_matrix(w), m.areas.copy())


def _solve_momentum(op: ops.SparseOperator, rhs, cfg: SchemeConfig, m: Mesh, x0):
    out = np.empty_like(rhs)
    worst = None
    for c in range(2):
        x, rep = solve_krylov(op.weighted, m.areas * rhs[:, c], cfg.momentum_solver,
                              x0=None if x0 is None else x0[:, c])
        if not rep.converged:
            raise SolverFailure("momentum", rep)
        out[:, c] = x
        if worst is None or rep.iterations > worst.iterations:
            worst = rep
    return out, worst


def _pressure_increment(u_tilde, scale: float, cfg: SchemeConfig, m: Mesh, x0=None):
    """Solve ``lap_h phi = scale * div_h u_tilde`` for area-mean-zero ``phi``."""
    o = _operators(m)
    flat = u_tilde.reshape(-1)
    rhs = -scale * o.div.weighted @ flat
    norm = np.linalg.norm(rhs)
    # cancellation inside div_h leaves round-off proportional to the summed terms
    terms = scale * np.linalg.norm(abs(o.div.weighted) @ np.abs(flat))
    if abs(rhs.mean()) > 1e-10 * max(norm, terms) and norm > 0:
        raise CompatibilityError(f"pressure right-hand side mean {rhs.mean():.3e} "
                                 f"exceeds tolerance (norm {norm:.3e})")
    phi, rep = solve_spd(o.neg_lap, rhs, cfg.solver, x0=x0, constant_nullspace=True)
    if not rep.converged:
        raise SolverFailure("pressure", rep)
    return fld.mean_zero(phi, m), rep


def _forcing(cfg: SchemeConfig, m: Mesh, t: float) -> np.ndarray:
    return fld.project_p0(cfg.forcing, m, t)


def initialize(cfg: SchemeConfig, m: Mesh):
    """Startup: ``u^0`` from the RT0 projection, then one semi-implicit Euler projection.

    Returns ``(state, diagnostics)`` for step 1.
    """
    k = cfg.dt
    fluxes = fld.project_rt0(cfg.initial_velocity, m, 0.0, zero_boundary=True)
    rec = fld.reconstruct_rt0(fluxes, m)
    u0 = rec.values
    warnings = []
    div0 = float(np.abs(ops.div_h(u0, m)).max())
    scale = max(float(np.abs(u0).max()), 1.0) / m.h
    if div0 > 1e-10 * scale:
        msg = f"initial velocity is not discretely divergence-free (max |div_h u0| = {div0:.3e})"
        log.warning(msg)
        warnings.append(msg)
    f1 = _forcing(cfg, m, k)
    op = momentum_operator(u0, 1.0 / k, cfg, m)
    ut, mrep = _solve_momentum(op, u0 / k + f1, cfg, m, x0=u0)
    phi, prep = _pressure_increment(ut, 1.0 / k, cfg, m)
    u1 = ut - k * ops.grad_h(phi, m)
    state = SchemeState(1, u0, u1, ut, phi, f1, warnings)
    return state, _diagnostics(state, cfg, m, mrep, prep)


def momentum_step(state: SchemeState, cfg: SchemeConfig, m: Mesh):
    """Predicted velocity ``u~^{n+1}``; returns ``(u_tilde, report, f^{n+1})``."""
    k = cfg.dt
    f_next = _forcing(cfg, m, (state.step + 1) * k)
    u_star = 2.0 * state.u_curr - state.u_prev
    op = momentum_operator(u_star, 1.5 / k, cfg, m)
    rhs = ((4.0 * state.u_curr - state.u_prev) / (2.0 * k)
           - ops.grad_h(state.p_curr, m) + f_next)
    ut, rep = _solve_momentum(op, rhs, cfg, m, x0=state.u_curr)
    return ut, rep, f_next


def pressure_step(state: SchemeState, u_tilde, cfg: SchemeConfig, m: Mesh):
    """New pressure ``p^{n+1}``; returns ``(p_new, report)``."""
    phi, rep = _pressure_increment(u_tilde, 1.5 / cfg.dt, cfg, m)
    return fld.mean_zero(state.p_curr + phi, m), rep


def correction_step(u_tilde, p_new, p_old, cfg: SchemeConfig, m: Mesh) -> np.ndarray:
    return u_tilde - (2.0 * cfg.dt / 3.0) * ops.grad_h(np.asarray(p_new) - p_old, m)


def advance(state: SchemeState, cfg: SchemeConfig, m: Mesh):
    """One composite BDF2 step; returns the new state and its diagnostics."""
    ut, mrep, f_next = momentum_step(state, cfg, m)
    p_new, prep = pressure_step(state, ut, cfg, m)
    u_new = correction_step(ut, p_new, state.p_curr, cfg, m)
    new = SchemeState(state.step + 1, state.u_curr, u_new, ut, p_new, f_next, state.warnings)
    return new, _diagnostics(new, cfg, m, mrep, prep)


def _diagnostics(state: SchemeState, cfg: SchemeConfig, m: Mesh, mrep, prep) -> StepDiagnostics:
    u, ut = state.u_curr, state.u_tilde
    e_u = fld.inner(u, u, m)
    e_t = fld.inner(ut, ut, m)
    e_d = fld.inner(u - ut, u - ut, m)
    denom = e_u + e_t + e_d
    pyth = abs(e_u - e_t + e_d) / denom if denom > 0 else 0.0
    return StepDiagnostics(
        step=state.step,
        time=state.step * cfg.dt,
        kinetic_energy=e_u,
        tilde_h_norm=fld.norm_h(ut, m),
        div_inf=float(np.abs(ops.div_h(u, m)).max()),
        increment=fld.norm_l2(u - state.u_prev, m) / cfg.dt,
        pressure_p1nc_norm=fld.norm_p1nc(fld.project_p1nc_from_p0(state.p_curr, m), m),
        pythagoras=float(pyth),
        momentum=mrep,
        pressure=prep,
    )


Sink = Callable[[SchemeState, StepDiagnostics], None]


def run(cfg: SchemeConfig, m: Mesh, sinks: Iterable[Sink] = ()) -> RunResult:
    """Run ``cfg.n_steps`` steps.

    Sinks are called with ``(state, diagnostics)`` at step 1, every
    ``output_every`` steps and at the final step.  A solver failure stops the
    run; the partial series is returned with ``failure`` set.
    """
    sinks = list(sinks)
    k = cfg.dt
    diags: list = []
    energy: list = []
    psum: list = []
    dissipation = 0.0
    pressure_acc = 0.0

    def record(state, d):
        nonlocal dissipation, pressure_acc
        diags.append(d)
        if state.step >= 2:
            dissipation += k * d.tilde_h_norm**2
            pressure_acc += k * d.pressure_p1nc_norm**2
        energy.append(d.kinetic_energy + dissipation)
        psum.append(pressure_acc)
        if state.step == 1 or state.step % cfg.output_every == 0 or state.step == cfg.n_steps:
            for sink in sinks:
                sink(state, d)

    try:
        state, d = initialize(cfg, m)
    except SolverFailure as exc:
        empty = np.zeros((m.n_triangles, 2))
        state = SchemeState(0, empty, empty, empty, np.zeros(m.n_triangles), empty)
        return RunResult(state, diags, energy, psum, failure=str(exc))
    record(state, d)
    while state.step < cfg.n_steps:
        try:
            state, d = advance(state, cfg, m)
        except SolverFailure as exc:
            return RunResult(state, diags, energy, psum,
                             failure=f"step {state.step + 1}: {exc}")
        record(state, d)
    return RunResult(state, diags, energy, psum)


def with_problem(cfg: SchemeConfig, problem) -> SchemeConfig:
    return replace(cfg, forcing=problem.forcing, initial_velocity=problem.initial_velocity)
