"""Executable checks of the discrete identities, bounds and consistency orders.

Each check returns :class:`CheckResult` records.  Measured values are
formatted with a fixed precision so reports are byte-reproducible for a fixed
mesh specification and seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import analytic as an
from . import fields as fld
from . import operators as ops
from .mesh import Mesh, build_equilateral_mesh, is_uniform, refine_uniform
from .problems import make_problem
from .scheme import SchemeConfig, _pressure_increment, correction_step, run, with_problem
from .solver import SolverConfig

IDENTITY_TOL = 1e-12
GROWTH_FACTOR = 3.0
INFSUP_FLOOR = 0.5
INFSUP_MAX_TRIANGLES = 600
_EPS = 1e-300


@dataclass(frozen=True)
class CheckResult:
    name: str
    kind: str  # "identity", "bound" or "order"
    measured: tuple
    threshold: float
    passed: bool
    context: str = ""

    def line(self) -> str:
        vals = " ".join(f"{v:.6e}" for v in self.measured)
        status = "PASS" if self.passed else "FAIL"
        ctx = f" [{self.context}]" if self.context else ""
        return f"{status} {self.kind:<8} {self.name}: measured={vals} threshold={self.threshold:.3e}{ctx}"


@dataclass(frozen=True)
class RefinementSweep:
    h: tuple
    values: tuple

    def __post_init__(self):
        if len(self.h) != len(self.values):
            raise ValueError("h and values must have equal length")

    @property
    def slope(self) -> float:
        """Least-squares slope of ``log(values)`` against ``log(h)``."""
        if len(self.h) < 3:
            raise ValueError("an order needs at least 3 refinement levels")
        v = np.maximum(np.asarray(self.values, float), _EPS)
        return float(np.polyfit(np.log(self.h), np.log(v), 1)[0])


def _identity(name, value, ctx, tol=IDENTITY_TOL):
    return CheckResult(name, "identity", (float(value),), tol, bool(value <= tol), ctx)


def _order(name, sweep: RefinementSweep, threshold, ctx):
    s = sweep.slope
    return CheckResult(name, "order", (s,) + tuple(float(v) for v in sweep.values),
                       threshold, bool(s >= threshold), ctx)


def _bounded(name, values, ctx, factor=GROWTH_FACTOR):
    """Pass iff ``max / min`` over the family stays below ``factor``."""
    v = np.asarray(values, float)
    ratio = float(v.max() / max(v.min(), _EPS))
    return CheckResult(name, "bound", (ratio,) + tuple(v), factor, bool(ratio < factor), ctx)


def _not_growing(name, values, ctx, factor=GROWTH_FACTOR):
    """Pass iff no level exceeds ``factor`` times the coarsest level."""
    v = np.asarray(values, float)
    ratio = float(v.max() / max(v[0], _EPS))
    return CheckResult(name, "bound", (ratio,) + tuple(v), factor, bool(ratio <= factor), ctx)


def uniform_family(rows: int, cols: int, side: float, levels: int) -> list:
    m = build_equilateral_mesh(rows, cols, side)
    out = [m]
    for _ in range(levels - 1):
        m = refine_uniform(m)
        out.append(m)
    return out


def refine_family(m: Mesh, levels: int) -> list:
    out = [m]
    for _ in range(levels - 1):
        out.append(refine_uniform(out[-1]))
    return out


def _ctx(m: Mesh, seed=None) -> str:
    s = f"nt={m.n_triangles} h={m.h:.6e}"
    return s if seed is None else f"{s} seed={seed}"


def _rel(a, b):
    return abs(a) / max(abs(b), _EPS)


# -- identities ---------------------------------------------------------------

def check_identities(m: Mesh, seed: int = 0, n_fields: int = 20) -> list:
    """Worst case over ``n_fields`` seeded random fields of each identity."""
    rng = np.random.default_rng(seed)
    ctx = _ctx(m, seed)
    nt = m.n_triangles
    grad = ops.assemble_grad(m)
    div = ops.assemble_div(m, grad)
    lap = ops.assemble_lap_h(m, grad, div)
    worst = dict.fromkeys(("adjoint", "adjoint_assembled", "coercivity", "cauchy_schwarz",
                           "lap_h_energy", "lap_h_mean", "rt0_div", "positivity",
                           "orthogonality", "assembled_vs_free"), 0.0)
    bdry = np.zeros(nt, bool)
    bdry[m.edge_k[m.boundary_edges]] = True
    for _ in range(n_fields):
        q = rng.uniform(-1, 1, nt)
        v = rng.uniform(-1, 1, (nt, 2))
        w = rng.uniform(-1, 1, (nt, 2))
        gq = ops.grad_h(q, m)
        scale = fld.norm_l2(v, m) * fld.norm_l2(gq, m) + _EPS
        worst["adjoint"] = max(worst["adjoint"],
                               abs(fld.inner(v, gq, m) + fld.inner(q, ops.div_h(v, m), m)) / scale)
        worst["adjoint_assembled"] = max(worst["adjoint_assembled"], abs(
            fld.inner(v, grad(q), m) + fld.inner(q, div(v), m)) / scale)
        hv = fld.norm_h(v, m) ** 2
        worst["coercivity"] = max(worst["coercivity"],
                                  _rel(-fld.inner(ops.lap_tilde_h(v, m), v, m) - hv, hv))
        cs = -fld.inner(ops.lap_tilde_h(v, m), w, m) - fld.norm_h(v, m) * fld.norm_h(w, m)
        worst["cauchy_schwarz"] = max(worst["cauchy_schwarz"],
                                      max(cs, 0.0) / (fld.norm_h(v, m) * fld.norm_h(w, m)))
        g2 = fld.norm_l2(gq, m) ** 2
        lq = ops.lap_h(q, m)
        worst["lap_h_energy"] = max(worst["lap_h_energy"], _rel(fld.inner(lq, q, m) + g2, g2))
        worst["lap_h_mean"] = max(worst["lap_h_mean"], abs(m.areas @ lq)
                                  / (np.sqrt(m.total_area) * fld.norm_l2(lq, m) + _EPS))
        for a, b in ((grad(q), gq), (div(v), ops.div_h(v, m)), (lap(q), lq)):
            worst["assembled_vs_free"] = max(worst["assembled_vs_free"],
                                             np.linalg.norm(a - b) / (np.linalg.norm(b) + _EPS))

        # divergence-free RT0 field from a random P1 stream function
        psi = rng.uniform(-1, 1, m.n_vertices)
        psi[np.unique(m.edges[m.boundary_edges])] = 0.0
        u = fld.curl_p1(psi, m)
        umax = np.abs(u).max() + _EPS
        worst["rt0_div"] = max(worst["rt0_div"], np.abs(ops.div_h(u, m)).max() * m.h / umax)
        bvv = ops.trilinear_b(u, v, v, m)
        worst["positivity"] = max(worst["positivity"],
                                  max(-bvv, 0.0) / (fld.norm_l2(u, m) * hv + _EPS))

        # one projection: (u_new, grad_h p) vanishes for every pressure p
        k = 0.1
        cfg = SchemeConfig(dt=k, t_end=k, solver=SolverConfig(rel_tol=1e-13))
        phi, _ = _pressure_increment(w, 1.5 / k, cfg, m)
        u_new = correction_step(w, phi, np.zeros(nt), cfg, m)
        gp = ops.grad_h(rng.uniform(-1, 1, nt), m)
        worst["orthogonality"] = max(worst["orthogonality"], abs(fld.inner(u_new, gp, m))
                                     / (fld.norm_l2(u_new, m) * fld.norm_l2(gp, m) + _EPS))

    out = [
        _identity("adjointness (v, grad_h q) + (q, div_h v) = 0", worst["adjoint"], ctx),
        _identity("adjointness, assembled operators", worst["adjoint_assembled"], ctx),
        _identity("coercivity -(lap~ v, v) = ||v||_h^2", worst["coercivity"], ctx),
        _identity("bound -(lap~ u, v) <= ||u||_h ||v||_h", worst["cauchy_schwarz"], ctx),
        _identity("(lap_h q, q) = -|grad_h q|^2", worst["lap_h_energy"], ctx),
        _identity("(lap_h q, 1) = 0", worst["lap_h_mean"], ctx),
        _identity("assembled = matrix-free", worst["assembled_vs_free"], ctx, 1e-14),
        _identity("div_h of RT0 n P0 field = 0", worst["rt0_div"], ctx),
        _identity("upwind positivity b_h(u, v, v) >= 0", worst["positivity"], ctx),
        _identity("projection orthogonality (u, grad_h p) = 0", worst["orthogonality"], ctx),
    ]
    c = ops.grad_h(np.full(nt, 1.0), m)
    out.append(_identity("grad_h of constant = 0", np.abs(c).max() * m.h, ctx))

    # analytic divergence-free field through the RT0 projection
    psi = an.stream_bump(domain_map(m), 50.0)
    rec = fld.reconstruct_rt0(fld.project_rt0(an.curl_field(psi), m), m)
    umax = np.abs(rec.values).max() + _EPS
    out.append(_identity("RT0 reconstruction of div-free field has b_K = 0", rec.max_b * m.h / umax, ctx))
    out.append(_identity("div_h of projected div-free field = 0",
                         np.abs(ops.div_h(rec.values, m)).max() * m.h / umax, ctx))
    return out


def domain_map(m: Mesh) -> an.AffineMap:
    """Parallelogram spanned by the mesh if it is one, else its bounding box."""
    lo = m.vertices[np.argmin(m.vertices[:, 0] + 1e-9 * m.vertices[:, 1])]
    # rhombus corners: origin, origin + a1 (max x on bottom row), origin + a2
    bottom = np.isclose(m.vertices[:, 1], lo[1])
    a1 = m.vertices[bottom][np.argmax(m.vertices[bottom, 0])] - lo
    top_y = m.vertices[:, 1].max()
    top = np.isclose(m.vertices[:, 1], top_y)
    a2 = m.vertices[top][np.argmin(m.vertices[top, 0])] - lo
    cand = an.AffineMap(tuple(lo), tuple(a1), tuple(a2))
    s, t = cand.to_reference(m.vertices[:, 0], m.vertices[:, 1])
    if s.min() < -1e-9 or t.min() < -1e-9 or s.max() > 1 + 1e-9 or t.max() > 1 + 1e-9:
        return an.bbox_map(m.vertices)
    return cand


# -- orders -------------------------------------------------------------------

def _sin2_product(domain):
    # sin^2(pi s) sin^2(pi t) = (1 - cos 2 pi s)(1 - cos 2 pi t) / 4
    one = an.Poly((1.0,))
    c = an.Cos(2 * np.pi)
    return an.Separable(domain, ((0.25, one, one), (-0.25, c, one), (-0.25, one, c), (0.25, c, c)))


def gradient_test_functions(domain) -> dict:
    """Smooth scalars whose gradient vanishes on the boundary of ``domain``."""
    return {
        "bump(s) bump(t)": an.Separable(domain, ((16.0, an.bump(), an.bump()),)),
        "sin^2(pi s) sin^2(pi t)": _sin2_product(domain),
    }


def gradient_errors(q: an.Separable, meshes) -> RefinementSweep:
    h, err = [], []
    for m in meshes:
        exact = fld.project_p0(an.gradient_field(q), m)
        disc = ops.grad_h(fld.interpolate_p0(an.scalar_field(q), m), m)
        h.append(m.h)
        err.append(fld.norm_l2(exact - disc, m))
    return RefinementSweep(tuple(h), tuple(err))


def convection_errors(domain, meshes) -> RefinementSweep:
    psi = an.stream_bump(domain, 50.0)
    u = an.curl_field(psi)
    phi1 = an.Separable(domain, ((1.0, an.Cos(np.pi), an.Poly((0.0, 1.0))),))
    phi2 = an.Separable(domain, ((1.0, an.Poly((0.0, 0.0, 1.0)), an.Cos(np.pi, 0.3)),))
    v = an.vector_field(phi1, phi2)
    exact = an.convection_of(psi, phi1, phi2)
    h, err = [], []
    for m in meshes:
        uh = fld.reconstruct_rt0(fld.project_rt0(u, m), m).values
        vh = fld.interpolate_p0(v, m)
        e = fld.project_p0(exact, m) - ops.conv_upwind(uh, vh, m)
        h.append(m.h)
        err.append(fld.norm_dual_h(e, m))
    return RefinementSweep(tuple(h), tuple(err))


def projection_errors(f: an.AnalyticField, meshes) -> RefinementSweep:
    return RefinementSweep(tuple(m.h for m in meshes),
                           tuple(fld.l2_error_p0(f, fld.project_p0(f, m), m) for m in meshes))


def measure_orders(meshes: Sequence[Mesh], domain=None, convection_levels: int = 4) -> list:
    """Consistency orders over a refinement family (coarse to fine)."""
    meshes = list(meshes)
    if len(meshes) < 3:
        raise ValueError("an order needs at least 3 refinement levels")
    domain = domain_map(meshes[0]) if domain is None else domain
    ctx = f"levels={len(meshes)} nt={meshes[0].n_triangles}..{meshes[-1].n_triangles}"
    out = []
    for name, q in gradient_test_functions(domain).items():
        out.append(_order(f"gradient consistency, q = {name}", gradient_errors(q, meshes), 0.9, ctx))

    scalar = an.scalar_field(_sin2_product(domain))
    out.append(_order("P0 projection error", projection_errors(scalar, meshes), 0.9, ctx))
    diff = RefinementSweep(tuple(m.h for m in meshes), tuple(
        fld.norm_l2(fld.project_p0(scalar, m) - fld.interpolate_p0(scalar, m), m) for m in meshes))
    out.append(_order("P0 projection vs circumcenter interpolation", diff, 0.9, ctx))

    conv_meshes = meshes[:max(3, convection_levels)]
    cctx = f"levels={len(conv_meshes)} nt={conv_meshes[0].n_triangles}..{conv_meshes[-1].n_triangles}"
    out.append(_order("convection consistency in the dual norm",
                      convection_errors(domain, conv_meshes), 0.8, cctx))

    # affine q is reproduced exactly on triangles away from the boundary of uniform meshes
    m = meshes[-1]
    if is_uniform(m):
        g = np.array([0.7, -1.3])
        q = m.circumcenters @ g + 0.25
        inner_tri = np.ones(m.n_triangles, bool)
        inner_tri[m.edge_k[m.boundary_edges]] = False
        err = np.abs(ops.grad_h(q, m)[inner_tri] - g).max() / np.abs(g).max()
        out.append(_identity("gradient of affine q exact on interior triangles", err, _ctx(m)))

    # lap~ of the interpolant of a field vanishing on the boundary stays bounded
    psi = an.stream_bump(domain, 50.0)
    v = an.curl_field(psi)
    norm_ref = fld.l2_norm_analytic(an.curl_laplacian(psi), meshes[-1])
    ratios = [fld.norm_l2(ops.lap_tilde_h(fld.interpolate_p0(v, mm), mm), mm) / norm_ref
              for mm in meshes[:max(3, convection_levels)]]
    out.append(_bounded("lap~ stability |lap~ interp v| / |lap v|", ratios, ctx, factor=2.0))
    return out


# -- inverse inequalities and Poincare ----------------------------------------

def _power_max(apply, mass, x0, iters=60):
    """Largest generalized Rayleigh quotient ``x.Ax / x.Mx`` by power iteration."""
    x = x0 / np.sqrt(x0 @ (mass * x0))
    val = 0.0
    for _ in range(iters):
        y = apply(x) / mass
        val = float(x @ (mass * y))
        x = y / np.sqrt(y @ (mass * y))
    return max(val, float(x @ (mass * (apply(x) / mass))))


def inverse_constants(m: Mesh, rng, n_fields: int = 20) -> dict:
    """Extremal ratios over random fields, sharpened by eigenvalue estimates."""
    nt = m.n_triangles
    grad = ops.assemble_grad(m)
    gram = sp.csc_matrix(-ops.assemble_lap_tilde(m).weighted)
    mass = sp.diags(m.areas).tocsc()
    wg = grad.weights

    c_grad = c_h = poinc = 0.0
    for _ in range(n_fields):
        q = rng.uniform(-1, 1, nt)
        v = rng.uniform(-1, 1, nt)
        c_grad = max(c_grad, m.h * fld.norm_l2(grad(q), m) / fld.norm_l2(q, m))
        c_h = max(c_h, m.h * fld.norm_h(v, m) / fld.norm_l2(v, m))
        poinc = max(poinc, fld.norm_l2(v, m) / fld.norm_h(v, m))

    start = rng.uniform(-1, 1, nt)
    gtg = lambda x: grad.weighted.T @ ((grad.weighted @ x) / wg)
    c_grad = max(c_grad, m.h * np.sqrt(_power_max(gtg, m.areas, start)))
    c_h = max(c_h, m.h * np.sqrt(_power_max(lambda x: gram @ x, m.areas, start)))
    lam = spla.eigsh(gram, k=1, M=mass, sigma=0.0, which="LM", v0=start,
                     return_eigenvectors=False)[0]
    poinc = max(poinc, 1.0 / np.sqrt(lam))
    return {"grad": c_grad, "h": c_h, "poincare": poinc}


def trilinear_constant(m: Mesh, rng, n_fields: int = 5, iters: int = 40) -> float:
    """``max |b_h(u, v, w)| / (|u| ||v||_h ||w||_h)`` over discretely div-free ``u``.

    For each ``u`` the sup over ``(v, w)`` is the top singular value of
    ``L^-1 C L^-T`` with ``L L^T`` the Gram matrix of ``||.||_h``, found by
    power iteration.
    """
    gram = sp.csc_matrix(-ops.assemble_lap_tilde(m).weighted)
    lu = spla.splu(gram)
    bverts = np.unique(m.edges[m.boundary_edges])
    worst = 0.0
    for _ in range(n_fields):
        psi = rng.uniform(-1, 1, m.n_vertices)
        psi[bverts] = 0.0
        u = fld.curl_p1(psi, m)
        c = ops.assemble_conv(u, m).weighted
        # sup_{v,w} v.Cw / (|v|_A |w|_A)  =  sqrt(lambda_max(A^-1 C^T A^-1 C))
        x = rng.uniform(-1, 1, m.n_triangles)
        val = 0.0
        for _ in range(iters):
            y = lu.solve(c.T @ lu.solve(c @ x))
            val = float(np.sqrt(max(x @ (gram @ y), 0.0) / (x @ (gram @ x))))
            x = y / np.sqrt(y @ (gram @ y))
        worst = max(worst, val / fld.norm_l2(u, m))
    return worst


def measure_inverse_constants(meshes: Sequence[Mesh], seed: int = 0, n_fields: int = 20) -> list:
    rng = np.random.default_rng(seed)
    meshes = list(meshes)
    consts = [inverse_constants(m, rng, n_fields) for m in meshes]
    tri = [trilinear_constant(m, rng) for m in meshes]
    ctx = f"levels={len(meshes)} seed={seed}"
    return [
        _bounded("inverse inequality h |grad_h q| <= C |q|", [c["grad"] for c in consts], ctx),
        _bounded("inverse inequality h ||v||_h <= C |v|", [c["h"] for c in consts], ctx),
        _bounded("Poincare |v| <= C ||v||_h", [c["poincare"] for c in consts], ctx),
        _not_growing("trilinear stability |b_h(u,v,w)| <= C |u| ||v||_h ||w||_h", tri, ctx),
    ]


# -- inf-sup ------------------------------------------------------------------

class HypothesisError(ValueError):
    """Input violates a hypothesis of the check (e.g. a non-uniform mesh)."""


def p1nc_projection_matrix(m: Mesh) -> sp.csr_matrix:
    ie = m.interior_edges
    be = m.boundary_edges
    k = m.edge_k[ie]
    l = m.edge_l[ie]
    s = m.areas[k] + m.areas[l]
    rows = np.concatenate([ie, ie, be])
    cols = np.concatenate([k, l, m.edge_k[be]])
    vals = np.concatenate([m.areas[k] / s, m.areas[l] / s, np.ones(len(be))])
    return sp.csr_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(m.n_edges, m.n_triangles)))


def infsup_constant(m: Mesh) -> float:
    """``beta_h = min_q ||grad_h q||_{-1,h} / |P1nc q|`` over area-mean-zero ``q``."""
    if not is_uniform(m):
        raise HypothesisError("inf-sup check requires a uniform (equilateral) mesh")
    if m.n_triangles > INFSUP_MAX_TRIANGLES:
        raise HypothesisError(f"dense inf-sup solve limited to {INFSUP_MAX_TRIANGLES} triangles")
    nt = m.n_triangles
    g = ops.assemble_grad(m).weighted.toarray()  # rows interleave (x, y)
    gram = -ops.assemble_lap_tilde(m).weighted.toarray()
    gram2 = np.kron(gram, np.eye(2))
    s = g.T @ np.linalg.solve(gram2, g)
    p = p1nc_projection_matrix(m).toarray()
    wts = np.zeros(m.n_edges)
    np.add.at(wts, m.tri_edges.ravel(), np.repeat(m.areas / 3.0, 3))
    b = p.T @ (wts[:, None] * p)
    z = sla.null_space(m.areas[None, :])
    sz = z.T @ s @ z
    bz = z.T @ b @ z
    sz = 0.5 * (sz + sz.T)
    bz = 0.5 * (bz + bz.T)
    # S is definite on mean-zero fields, B may be singular, so take 1 / max eig of (B, S)
    mu = sla.eigh(bz, sz, eigvals_only=True, subset_by_index=[nt - 2, nt - 2])[0]
    return float(1.0 / np.sqrt(mu))


def measure_infsup(meshes: Sequence[Mesh], seed: int = 0, n_fields: int = 20) -> list:
    meshes = list(meshes)
    for m in meshes:
        if not is_uniform(m):
            raise HypothesisError("inf-sup check requires uniform (equilateral) meshes")
    if len(meshes) < 3:
        raise ValueError("inf-sup robustness needs at least 3 refinement levels")
    rng = np.random.default_rng(seed)
    betas = [infsup_constant(m) for m in meshes]
    ratio = min(betas) / betas[0]
    ctx = f"levels={len(meshes)} nt={meshes[0].n_triangles}..{meshes[-1].n_triangles}"
    out = [CheckResult("inf-sup beta_h / beta_coarsest", "bound", (ratio,) + tuple(betas),
                       INFSUP_FLOOR, bool(ratio >= INFSUP_FLOOR), ctx)]
    worst = 0.0
    for m in meshes:
        for _ in range(n_fields):
            q = rng.uniform(-1, 1, m.n_triangles)
            lhs = ops.grad_h(q, m)
            rhs = fld.tilde_grad_p1nc(fld.project_p1nc_from_p0(q, m), m)
            worst = max(worst, np.abs(lhs - rhs).max() * m.h / np.abs(q).max())
    out.append(_identity("grad_h q = grad~(P1nc q) on uniform meshes", worst, f"{ctx} seed={seed}"))
    return out


# -- stability sweep ----------------------------------------------------------

@dataclass(frozen=True)
class SweepCell:
    h: float
    dt: float
    energy: float
    increment: float
    pressure: float
    pythagoras: float
    div_inf: float
    failure: str | None = None


@dataclass(frozen=True)
class SweepSpec:
    problem: str = "spinup"
    rows: int = 4
    cols: int = 4
    side: float = 0.25
    h_levels: int = 3
    dts: tuple = (0.04, 0.02, 0.01)
    t_end: float = 1.0
    reynolds: float = 1.0
    amplitude: float = 10.0
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(rel_tol=1e-12))


def stability_cells(spec: SweepSpec, base: Mesh | None = None) -> list:
    """Run the scheme on every (h, k) cell; ``base`` overrides the generated mesh."""
    if base is None:
        meshes = uniform_family(spec.rows, spec.cols, spec.side, spec.h_levels)
        domain = an.rhombus_map(spec.rows, spec.cols, spec.side)
    else:
        meshes = refine_family(base, spec.h_levels)
        domain = domain_map(base)
    prob = make_problem(spec.problem, domain, spec.reynolds, spec.amplitude)
    cells = []
    for m in meshes:
        for dt in spec.dts:
            cfg = with_problem(SchemeConfig(reynolds=spec.reynolds, dt=dt, t_end=spec.t_end,
                                            solver=spec.solver), prob)
            res = run(cfg, m)
            cells.append(SweepCell(m.h, dt, res.max_energy, res.max_increment,
                                   res.max_pressure_sum, res.max_pythagoras, res.max_div,
                                   res.failure))
    return cells


def stability_sweep(spec: SweepSpec = SweepSpec(), base: Mesh | None = None) -> list:
    """Energy, increment and pressure monitors over an (h, k) grid.

    Each monitor passes iff no cell exceeds 3x the coarsest cell (largest h,
    largest k); the Pythagoras relation must hold at every step of every cell.
    """
    cells = stability_cells(spec, base)
    ctx = f"problem={spec.problem} grid={spec.h_levels}x{len(spec.dts)} T={spec.t_end:g} Re={spec.reynolds:g}"
    out = []
    ref = cells[0]
    for name, attr in (("energy |u^m|^2 + k sum ||u~^n||_h^2", "energy"),
                       ("increment max |u^m - u^(m-1)| / k", "increment"),
                       ("pressure k sum |P1nc p^n|^2", "pressure")):
        vals = [getattr(c, attr) for c in cells]
        limit = GROWTH_FACTOR * getattr(ref, attr)
        worst = max(vals) / max(getattr(ref, attr), _EPS)
        ok = all(c.failure is None for c in cells) and max(vals) <= limit * (1 + 1e-12)
        out.append(CheckResult(f"stability, {name}", "bound", (worst,) + tuple(vals),
                               GROWTH_FACTOR, bool(ok), ctx))
    pyth = max(c.pythagoras for c in cells)
    out.append(_identity("Pythagoras |u|^2 - |u~|^2 + |u - u~|^2 = 0", pyth, ctx))
    for c in cells:
        if c.failure is not None:
            out.append(CheckResult("scheme run", "bound", (c.h, c.dt), 0.0, False,
                                   f"{ctx} failure: {c.failure}"))
    return out
