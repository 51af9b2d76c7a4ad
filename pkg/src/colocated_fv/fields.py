"""Discrete fields, norms and projection/interpolation operators.

Fields are plain arrays:

=============  ============  =============================================
space          shape         meaning
=============  ============  =============================================
scalar P0      ``(nt,)``     one value per triangle
vector P0      ``(nt, 2)``   one 2-vector per triangle
P1nc           ``(ne,)``     value at each edge midpoint
RT0            ``(ne,)``     mean normal component along ``edge_normals``
=============  ============  =============================================
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .analytic import AnalyticField
from .mesh import Mesh, MeshGeometryError
from .operators import assemble_lap_tilde
from .solver import SolverConfig, solve_spd

# Seven-point degree-5 triangle rule (barycentric coordinates, weights sum to 1).
_A1 = (6.0 - np.sqrt(15.0)) / 21.0
_A2 = (6.0 + np.sqrt(15.0)) / 21.0
_W1 = (155.0 - np.sqrt(15.0)) / 1200.0
_W2 = (155.0 + np.sqrt(15.0)) / 1200.0
RULE7_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2],
])
RULE7_WEIGHTS = np.array([9 / 40, _W1, _W1, _W1, _W2, _W2, _W2])


def triangle_points(m: Mesh, bary) -> np.ndarray:
    """Physical points ``(nt, nq, 2)`` for barycentric coordinates ``(nq, 3)``."""
    p = m.vertices[m.triangles]
    return np.einsum("qj,tjd->tqd", np.asarray(bary, float), p)


def _eval(f, pts, t):
    if isinstance(f, AnalyticField):
        return f(pts, t)
    return AnalyticField(f)(pts, t)


def project_p0(f: AnalyticField, m: Mesh, t: float = 0.0) -> np.ndarray:
    """Cell means by the edge-midpoint rule (exact up to degree 2)."""
    mid = m.edge_midpoints[m.tri_edges]  # (nt, 3, 2)
    return _eval(f, mid, t).mean(axis=1)


def project_p0_high(f: AnalyticField, m: Mesh, t: float = 0.0) -> np.ndarray:
    """Cell means by the seven-point degree-5 rule; used for error norms."""
    vals = _eval(f, triangle_points(m, RULE7_BARY), t)
    return np.tensordot(RULE7_WEIGHTS, vals, axes=(0, 1))


def l2_error_p0(f: AnalyticField, q, m: Mesh, t: float = 0.0) -> float:
    """``||f - q||_{L2}`` for a P0 field ``q``, integrated with the seven-point rule."""
    vals = _eval(f, triangle_points(m, RULE7_BARY), t)
    q = np.asarray(q, float)
    diff = vals - q[:, None, ...]
    sq = diff**2 if diff.ndim == 2 else (diff**2).sum(-1)
    return float(np.sqrt(np.sum(m.areas * (sq @ RULE7_WEIGHTS))))


def l2_norm_analytic(f: AnalyticField, m: Mesh, t: float = 0.0) -> float:
    vals = _eval(f, triangle_points(m, RULE7_BARY), t)
    sq = vals**2 if vals.ndim == 2 else (vals**2).sum(-1)
    return float(np.sqrt(np.sum(m.areas * (sq @ RULE7_WEIGHTS))))


def interpolate_p0(f: AnalyticField, m: Mesh, t: float = 0.0) -> np.ndarray:
    """Point values at the circumcenters."""
    return _eval(f, m.circumcenters, t)


def project_p1nc_from_p0(q, m: Mesh) -> np.ndarray:
    """L2 projection of a P0 field onto P1nc, as area-weighted edge averages."""
    q = np.asarray(q, dtype=float)
    out = q[m.edge_k].copy()
    ie = m.interior_edges
    k = m.edge_k[ie]
    l = m.edge_l[ie]
    ak = m.areas[k]
    al = m.areas[l]
    out[ie] = (ak * q[k] + al * q[l]) / (ak + al)
    return out


def project_rt0(f: AnalyticField, m: Mesh, t: float = 0.0, n_gauss: int = 2,
                zero_boundary: bool = False) -> np.ndarray:
    """Mean normal component of ``f`` on every edge (sign along ``edge_normals``).

    Fields carrying a stream function get exact edge integrals
    ``psi(end) - psi(start)``, which keeps discrete fluxes divergence-free to
    round-off; otherwise ``n_gauss``-point Gauss-Legendre is used.
    """
    a = m.vertices[m.edges[:, 0]]
    b = m.vertices[m.edges[:, 1]]
    if isinstance(f, AnalyticField) and f.stream is not None:
        tangent = (b - a) / m.edge_lengths[:, None]
        # (t_y, -t_x) is outward for a counterclockwise traversal a -> b
        orient = np.sign(tangent[:, 1] * m.edge_normals[:, 0]
                         - tangent[:, 0] * m.edge_normals[:, 1])
        psi_a = f.stream_values(a, t)
        psi_b = f.stream_values(b, t)
        flux = orient * (psi_b - psi_a) / m.edge_lengths
    else:
        xg, wg = np.polynomial.legendre.leggauss(n_gauss)
        lam = 0.5 * (xg + 1.0)
        pts = a[:, None, :] + lam[None, :, None] * (b - a)[:, None, :]
        vals = _eval(f, pts, t)  # (ne, ng, 2)
        normal_comp = (vals * m.edge_normals[:, None, :]).sum(-1)
        flux = normal_comp @ (0.5 * wg)
    if zero_boundary:
        flux = flux.copy()
        flux[m.boundary_edges] = 0.0
    return flux


def rt0_from_stream(psi_vertices, m: Mesh) -> np.ndarray:
    """Fluxes of the curl of the continuous P1 function with vertex values ``psi``.

    The result is exactly divergence-free on every triangle; boundary fluxes
    vanish when ``psi`` is constant on the boundary.
    """
    psi = np.asarray(psi_vertices, dtype=float)
    a = m.vertices[m.edges[:, 0]]
    b = m.vertices[m.edges[:, 1]]
    tangent = (b - a) / m.edge_lengths[:, None]
    orient = np.sign(tangent[:, 1] * m.edge_normals[:, 0] - tangent[:, 0] * m.edge_normals[:, 1])
    return orient * (psi[m.edges[:, 1]] - psi[m.edges[:, 0]]) / m.edge_lengths


class RT0Reconstruction(NamedTuple):
    values: np.ndarray  # (nt, 2), field at the circumcenters
    b: np.ndarray  # (nt,), coefficient of x in a_K + b_K x

    @property
    def max_b(self) -> float:
        return float(np.abs(self.b).max()) if len(self.b) else 0.0


def reconstruct_rt0(fluxes, m: Mesh) -> RT0Reconstruction:
    """Recover ``v(x) = a_K + b_K (x - x_K)`` on each triangle from its three fluxes."""
    fluxes = np.asarray(fluxes, dtype=float)
    n = m.tri_normals()  # (nt, 3, 2)
    mid = m.edge_midpoints[m.tri_edges] - m.circumcenters[:, None, :]
    mat = np.concatenate([n, (mid * n).sum(-1)[..., None]], axis=-1)  # (nt, 3, 3)
    rhs = fluxes[m.tri_edges] * m.tri_edge_sign
    try:
        sol = np.linalg.solve(mat, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        raise MeshGeometryError("singular RT0 reconstruction system") from None
    return RT0Reconstruction(sol[:, :2], sol[:, 2])


def curl_p1(psi_vertices, m: Mesh) -> np.ndarray:
    """Piecewise-constant curl of a continuous P1 stream function (lies in P0 and RT0)."""
    return reconstruct_rt0(rt0_from_stream(psi_vertices, m), m).values


# -- norms --------------------------------------------------------------------

def inner(a, b, m: Mesh) -> float:
    """L2 inner product of two P0 fields of the same rank."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    prod = a * b if a.ndim == 1 else (a * b).sum(-1)
    return float(m.areas @ prod)


def norm_l2(v, m: Mesh) -> float:
    return float(np.sqrt(max(inner(v, v, m), 0.0)))


def norm_h(v, m: Mesh) -> float:
    """Discrete H1 norm: tau-weighted jumps plus boundary values."""
    v = np.asarray(v, dtype=float)
    vv = v[:, None] if v.ndim == 1 else v
    ie = m.interior_edges
    be = m.boundary_edges
    jump = vv[m.edge_l[ie]] - vv[m.edge_k[ie]]
    s = m.tau[ie] @ (jump**2).sum(-1) + m.tau[be] @ (vv[m.edge_k[be]] ** 2).sum(-1)
    return float(np.sqrt(s))


def norm_dual_h(v, m: Mesh, cfg: SolverConfig = SolverConfig(rel_tol=1e-12),
                return_maximizer: bool = False):
    """Dual of ``norm_h`` against the L2 pairing.

    The supremum is attained at ``x = A^{-1} M v`` where ``A`` is the Gram
    matrix of ``norm_h``, giving ``sqrt((M v) . x)``.
    """
    v = np.asarray(v, dtype=float)
    gram = -assemble_lap_tilde(m).weighted
    vv = v[:, None] if v.ndim == 1 else v
    x = np.empty_like(vv)
    total = 0.0
    for c in range(vv.shape[1]):
        mv = m.areas * vv[:, c]
        xc, rep = solve_spd(gram, mv, cfg)
        if not rep.converged:
            raise RuntimeError(f"dual norm solve did not converge: {rep}")
        x[:, c] = xc
        total += mv @ xc
    val = float(np.sqrt(max(total, 0.0)))
    if return_maximizer:
        return val, (x[:, 0] if v.ndim == 1 else x)
    return val


def mean(q, m: Mesh):
    q = np.asarray(q, dtype=float)
    return np.tensordot(m.areas, q, axes=(0, 0)) / m.total_area


def mean_zero(q, m: Mesh) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q - mean(q, m)


def tilde_grad_p1nc(q, m: Mesh) -> np.ndarray:
    """Cell gradient of the P1nc function with edge-midpoint values ``q``."""
    q = np.asarray(q, dtype=float)
    n = m.tri_normals()
    w = (m.edge_lengths[m.tri_edges] * q[m.tri_edges])[..., None] * n
    if np.any(m.areas <= 0):
        raise MeshGeometryError("degenerate triangle")
    return w.sum(axis=1) / m.areas[:, None]


def norm_p1nc(q, m: Mesh) -> float:
    """L2 norm of a P1nc function (edge-midpoint rule, exact for quadratics)."""
    q = np.asarray(q, dtype=float)
    return float(np.sqrt(np.sum(m.areas / 3.0 * (q[m.tri_edges] ** 2).sum(1))))


def norm_1h(q, m: Mesh) -> float:
    return float(np.hypot(norm_p1nc(q, m), norm_l2(tilde_grad_p1nc(q, m), m)))
