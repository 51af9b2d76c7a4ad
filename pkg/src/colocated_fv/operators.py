"""Discrete gradient, divergence, Laplacians and upwind convection on P0.

Scalar P0 fields are arrays of shape ``(nt,)`` and vector fields ``(nt, 2)``.
Each operator exists twice: a matrix-free vectorised evaluation and an
assembled :class:`SparseOperator`.  The two are kept independent on purpose
so that one can check the other.

Assembled operators are stored in integrated ("flux") form, i.e. multiplied
by the cell area.  In that form ``div = -grad^T`` and the vector Laplacian is
symmetric by construction; the plain operator is recovered by dividing each
row by its cell area.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Linear map ``x -> weighted @ x / weights`` between P0 spaces.

    ``vector_in`` / ``vector_out`` mark maps acting on or producing vector
    fields, whose unknowns are ordered like ``v.ravel()`` (x and y
    interleaved).  Scalar operators such as the Laplacians are applied to
    each component of a vector field separately.
    """

    weighted: sp.csr_matrix
    weights: np.ndarray
    symmetric: bool = False
    vector_in: bool = False
    vector_out: bool = False

    @property
    def shape(self):
        return self.weighted.shape

    @property
    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(sp.diags(1.0 / self.weights) @ self.weighted)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.vector_in:
            y = self.weighted @ x.reshape(-1)
        else:
            y = self.weighted @ x
        if y.ndim == 2:
            y = y / self.weights[:, None]
        else:
            y = y / self.weights
        if self.vector_out:
            y = y.reshape(-1, 2)
        return y

    __call__ = apply


def _csr(rows, cols, vals, shape):
    # coo -> csr sums duplicates in a fixed order
    a = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    a.sum_duplicates()
    a.sort_indices()
    return a


def _interior(m: Mesh):
    ie = m.interior_edges
    return ie, m.edge_k[ie], m.edge_l[ie], m.alpha[ie]


# -- gradient ---------------------------------------------------------------

def grad_h(q, m: Mesh) -> np.ndarray:
    """Cell gradient from edge values interpolated linearly between circumcenters."""
    q = np.asarray(q, dtype=float)
    nt = m.n_triangles
    ie, k, l, a = _interior(m)
    face = m.edge_lengths[ie] * (a * q[k] + (1.0 - a) * q[l])
    flux = face[:, None] * m.edge_normals[ie]
    be = m.boundary_edges
    bflux = (m.edge_lengths[be] * q[m.edge_k[be]])[:, None] * m.edge_normals[be]
    out = np.empty((nt, 2))
    for c in range(2):
        out[:, c] = (np.bincount(k, flux[:, c], nt) - np.bincount(l, flux[:, c], nt)
                     + np.bincount(m.edge_k[be], bflux[:, c], nt))
    return out / m.areas[:, None]


def div_h(v, m: Mesh) -> np.ndarray:
    """Cell divergence; sums over interior edges only, with swapped weights."""
    v = np.asarray(v, dtype=float)
    nt = m.n_triangles
    ie, k, l, a = _interior(m)
    vs = (1.0 - a)[:, None] * v[k] + a[:, None] * v[l]
    flux = m.edge_lengths[ie] * (vs * m.edge_normals[ie]).sum(1)
    out = np.bincount(k, flux, nt) - np.bincount(l, flux, nt)
    return out / m.areas


def lap_h(q, m: Mesh) -> np.ndarray:
    return div_h(grad_h(q, m), m)


def lap_tilde_h(v, m: Mesh) -> np.ndarray:
    """Two-point flux Laplacian with homogeneous Dirichlet data, per component."""
    v = np.asarray(v, dtype=float)
    nt = m.n_triangles
    ie, k, l, _ = _interior(m)
    t = m.tau[ie]
    be = m.boundary_edges
    kb = m.edge_k[be]
    tb = m.tau[be]
    squeeze = v.ndim == 1
    vv = v[:, None] if squeeze else v
    out = np.empty_like(vv)
    for c in range(vv.shape[1]):
        jump = t * (vv[l, c] - vv[k, c])
        out[:, c] = (np.bincount(k, jump, nt) - np.bincount(l, jump, nt)
                     - np.bincount(kb, tb * vv[kb, c], nt))
    out /= m.areas[:, None]
    return out[:, 0] if squeeze else out


def edge_velocity_flux(u, m: Mesh) -> np.ndarray:
    """``|sigma| u_sigma . n_{K,sigma}`` on interior edges (same order as ``interior_edges``)."""
    u = np.asarray(u, dtype=float)
    ie, k, l, a = _interior(m)
    us = (1.0 - a)[:, None] * u[k] + a[:, None] * u[l]
    return m.edge_lengths[ie] * (us * m.edge_normals[ie]).sum(1)


def conv_upwind(u, v, m: Mesh) -> np.ndarray:
    """Upwind convection of ``v`` by the face-interpolated velocity ``u``.

    A zero face flux contributes nothing, so no tie-break is needed.
    """
    v = np.asarray(v, dtype=float)
    nt = m.n_triangles
    _, k, l, _ = _interior(m)
    f = edge_velocity_flux(u, m)
    fp = np.maximum(f, 0.0)
    fm = np.minimum(f, 0.0)
    squeeze = v.ndim == 1
    vv = v[:, None] if squeeze else v
    out = np.empty_like(vv)
    for c in range(vv.shape[1]):
        # seen from L the flux changes sign, so its outflow part is -fm
        to_k = fp * vv[k, c] + fm * vv[l, c]
        to_l = -fm * vv[l, c] - fp * vv[k, c]
        out[:, c] = np.bincount(k, to_k, nt) + np.bincount(l, to_l, nt)
    out /= m.areas[:, None]
    return out[:, 0] if squeeze else out


def trilinear_b(u, v, w, m: Mesh) -> float:
    w = np.asarray(w, dtype=float)
    return float(np.sum(m.areas[:, None] * w * conv_upwind(u, v, m)))


# -- assembly ---------------------------------------------------------------

def assemble_grad(m: Mesh) -> SparseOperator:
    nt = m.n_triangles
    ie, k, l, a = _interior(m)
    be = m.boundary_edges
    kb = m.edge_k[be]
    rows, cols, vals = [], [], []
    for c in range(2):
        nk = m.edge_lengths[ie] * m.edge_normals[ie, c]
        nb = m.edge_lengths[be] * m.edge_normals[be, c]
        rows += [2 * k + c, 2 * k + c, 2 * l + c, 2 * l + c, 2 * kb + c]
        cols += [k, l, k, l, kb]
        vals += [a * nk, (1 - a) * nk, -a * nk, -(1 - a) * nk, nb]
    w = _csr(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (2 * nt, nt))
    return SparseOperator(w, np.repeat(m.areas, 2), vector_out=True)


def assemble_div(m: Mesh, grad: SparseOperator | None = None) -> SparseOperator:
    """Integrated divergence, built as the negative transpose of the gradient."""
    g = assemble_grad(m) if grad is None else grad
    return SparseOperator(sp.csr_matrix(-g.weighted.T), m.areas.copy(), vector_in=True)


def assemble_div_direct(m: Mesh) -> SparseOperator:
    """Divergence stencil written out edge by edge, independent of the gradient."""
    nt = m.n_triangles
    ie, k, l, a = _interior(m)
    rows, cols, vals = [], [], []
    for c in range(2):
        nk = m.edge_lengths[ie] * m.edge_normals[ie, c]
        rows += [k, k, l, l]
        cols += [2 * k + c, 2 * l + c, 2 * k + c, 2 * l + c]
        vals += [(1 - a) * nk, a * nk, -(1 - a) * nk, -a * nk]
    w = _csr(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (nt, 2 * nt))
    return SparseOperator(w, m.areas.copy(), vector_in=True)


def assemble_lap_h(m: Mesh, grad: SparseOperator | None = None,
                   div: SparseOperator | None = None) -> SparseOperator:
    """Pressure Laplacian as the product of assembled divergence and gradient."""
    g = assemble_grad(m) if grad is None else grad
    d = assemble_div(m, g) if div is None else div
    w = d.weighted @ sp.diags(1.0 / g.weights) @ g.weighted
    return SparseOperator(sp.csr_matrix(w), m.areas.copy(), symmetric=True)


def assemble_lap_tilde(m: Mesh) -> SparseOperator:
    """Integrated two-point Laplacian (scalar block, symmetric negative definite)."""
    nt = m.n_triangles
    ie, k, l, _ = _interior(m)
    t = m.tau[ie]
    be = m.boundary_edges
    kb = m.edge_k[be]
    rows = np.concatenate([k, k, l, l, kb])
    cols = np.concatenate([l, k, k, l, kb])
    vals = np.concatenate([t, -t, t, -t, -m.tau[be]])
    return SparseOperator(_csr(rows, cols, vals, (nt, nt)), m.areas.copy(), symmetric=True)


def assemble_conv(u, m: Mesh) -> SparseOperator:
    """Integrated upwind convection for a frozen advecting field ``u`` (scalar block)."""
    nt = m.n_triangles
    _, k, l, _ = _interior(m)
    f = edge_velocity_flux(u, m)
    fp = np.maximum(f, 0.0)
    fm = np.minimum(f, 0.0)
    rows = np.concatenate([k, k, l, l])
    cols = np.concatenate([k, l, l, k])
    vals = np.concatenate([fp, fm, -fm, -fp])
    return SparseOperator(_csr(rows, cols, vals, (nt, nt)), m.areas.copy())


def mass_matrix(m: Mesh) -> sp.csr_matrix:
    return sp.diags(m.areas).tocsr()
