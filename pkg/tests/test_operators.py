import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colocated_fv.fields import curl_p1, inner, mean_zero, norm_h, norm_l2
from colocated_fv.mesh import build_equilateral_mesh
from colocated_fv.operators import (assemble_conv, assemble_div, assemble_div_direct,
                                    assemble_grad, assemble_lap_h, assemble_lap_tilde,
                                    conv_upwind, div_h, grad_h, lap_h, lap_tilde_h, trilinear_b)

from conftest import perturbed_mesh


def rel(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


# -- naive per-edge oracles, written independently of the vectorised code ---

def naive_grad(q, m):
    out = np.zeros((m.n_triangles, 2))
    for e in range(m.n_edges):
        k, l = m.edge_k[e], m.edge_l[e]
        s, n = m.edge_lengths[e], m.edge_normals[e]
        if l < 0:
            out[k] += s * q[k] * n
        else:
            a = m.alpha[e]
            qs = a * q[k] + (1 - a) * q[l]
            out[k] += s * qs * n
            out[l] -= s * qs * n
    return out / m.areas[:, None]


def naive_conv(u, v, m):
    out = np.zeros_like(v)
    for e in m.interior_edges:
        k, l = m.edge_k[e], m.edge_l[e]
        a = m.alpha[e]
        us = (1 - a) * u[k] + a * u[l]
        f = m.edge_lengths[e] * (us @ m.edge_normals[e])
        # K side with outward normal n, L side with -n
        out[k] += max(f, 0) * v[k] + min(f, 0) * v[l]
        out[l] += max(-f, 0) * v[l] + min(-f, 0) * v[k]
    return out / m.areas[:, None]


def naive_trilinear(u, v, w, m):
    c = naive_conv(u, v, m)
    return sum(m.areas[i] * (w[i] @ c[i]) for i in range(m.n_triangles))


def div_free(m, rng):
    # stream vanishing on the boundary, so the field has no boundary flux
    psi = rng.standard_normal(m.n_vertices)
    psi[np.unique(m.edges[m.boundary_edges])] = 0.0
    return curl_p1(psi, m)


# -- gradient / divergence ---------------------------------------------------

def test_grad_matches_naive(any_mesh, rng):
    q = rng.standard_normal(any_mesh.n_triangles)
    assert rel(grad_h(q, any_mesh), naive_grad(q, any_mesh)) < 1e-13


def test_grad_of_constant_vanishes(any_mesh):
    g = grad_h(np.full(any_mesh.n_triangles, 3.0), any_mesh)
    assert np.abs(g).max() <= 1e-13 * 3.0 / any_mesh.h


def test_grad_affine_exact_on_interior_triangles():
    m = build_equilateral_mesh(4, 4, 0.25)
    c = m.circumcenters
    q = 1.0 + 2.0 * c[:, 0] - 3.0 * c[:, 1]
    interior = np.ones(m.n_triangles, bool)
    interior[m.edge_k[m.boundary_edges]] = False
    assert interior.any()
    assert np.allclose(grad_h(q, m)[interior], [2.0, -3.0], atol=1e-12)


def test_grad_kernel_is_constants(eq_mesh):
    g = assemble_grad(eq_mesh).weighted.toarray()
    s = np.linalg.svd(g, compute_uv=False)
    # only one zero singular value, the constant vector
    assert s[-1] < 1e-12 * s[0]
    assert s[-2] > 1e-6 * s[0]


def test_adjointness(any_mesh, rng):
    m = any_mesh
    for _ in range(20):
        q = rng.standard_normal(m.n_triangles)
        v = rng.standard_normal((m.n_triangles, 2))
        lhs = inner(v, grad_h(q, m), m)
        rhs = -inner(q, div_h(v, m), m)
        assert abs(lhs - rhs) <= 1e-13 * norm_l2(v, m) * norm_l2(grad_h(q, m), m)


def test_div_of_constant_on_interior_triangle():
    m = build_equilateral_mesh(4, 4, 0.25)
    d = div_h(np.tile([0.7, -0.2], (m.n_triangles, 1)), m)
    interior = np.ones(m.n_triangles, bool)
    interior[m.edge_k[m.boundary_edges]] = False
    assert np.abs(d[interior]).max() < 1e-13


def test_div_of_p1_curl_vanishes(any_mesh, rng):
    u = div_free(any_mesh, rng)
    assert np.abs(div_h(u, any_mesh)).max() <= 1e-12 * np.abs(u).max() / any_mesh.h


# -- Laplacians ----------------------------------------------------------------

def test_lap_h_properties(any_mesh, rng):
    m = any_mesh
    assert np.abs(lap_h(np.ones(m.n_triangles), m)).max() < 1e-12 / m.h**2
    for _ in range(5):
        q = rng.standard_normal(m.n_triangles)
        lq = lap_h(q, m)
        g2 = norm_l2(grad_h(q, m), m) ** 2
        assert inner(lq, q, m) == pytest.approx(-g2, rel=1e-13)
        assert abs(m.areas @ lq) <= 1e-13 * np.abs(m.areas * lq).sum()


def test_lap_tilde_coercivity(any_mesh, rng):
    m = any_mesh
    assert not lap_tilde_h(np.zeros((m.n_triangles, 2)), m).any()
    for _ in range(5):
        v = rng.standard_normal((m.n_triangles, 2))
        assert -inner(lap_tilde_h(v, m), v, m) == pytest.approx(norm_h(v, m) ** 2, rel=1e-13)


# -- convection ----------------------------------------------------------------

def test_conv_zero_velocity(eq_mesh, rng):
    v = rng.standard_normal((eq_mesh.n_triangles, 2))
    assert not conv_upwind(np.zeros_like(v), v, eq_mesh).any()


def test_conv_matches_naive(any_mesh, rng):
    m = any_mesh
    u = rng.standard_normal((m.n_triangles, 2))
    v = rng.standard_normal((m.n_triangles, 2))
    assert rel(conv_upwind(u, v, m), naive_conv(u, v, m)) < 1e-13
    w = rng.standard_normal((m.n_triangles, 2))
    assert trilinear_b(u, v, w, m) == pytest.approx(naive_trilinear(u, v, w, m), rel=1e-12)
    assert trilinear_b(u, v, np.zeros_like(w), m) == 0.0


def test_conv_of_constant_is_net_flux(jitter_mesh, rng):
    m = jitter_mesh
    u = rng.standard_normal((m.n_triangles, 2))
    c = np.array([2.0, -1.0])
    out = conv_upwind(u, np.tile(c, (m.n_triangles, 1)), m)
    net = np.zeros(m.n_triangles)
    for e in m.interior_edges:
        k, l = m.edge_k[e], m.edge_l[e]
        a = m.alpha[e]
        f = m.edge_lengths[e] * (((1 - a) * u[k] + a * u[l]) @ m.edge_normals[e])
        net[k] += f
        net[l] -= f
    assert np.allclose(out, (net / m.areas)[:, None] * c, rtol=1e-12, atol=1e-12)


def test_conv_linear_in_v(eq_mesh, rng):
    u, v, w = (rng.standard_normal((eq_mesh.n_triangles, 2)) for _ in range(3))
    lhs = conv_upwind(u, 2 * v - 3 * w, eq_mesh)
    rhs = 2 * conv_upwind(u, v, eq_mesh) - 3 * conv_upwind(u, w, eq_mesh)
    assert rel(lhs, rhs) < 1e-13


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_upwind_positivity_for_divergence_free_u(seed):
    m = perturbed_mesh(3, 3, 0.3, 0.05, seed % 17)
    rng = np.random.default_rng(seed)
    u = div_free(m, rng)
    v = rng.standard_normal((m.n_triangles, 2))
    b = trilinear_b(u, v, v, m)
    assert b >= -1e-12 * norm_l2(u, m) * norm_h(v, m) ** 2


# -- assembled operators -------------------------------------------------------

def test_assembled_match_matrix_free(any_mesh, rng):
    m = any_mesh
    g, lt, lh = assemble_grad(m), assemble_lap_tilde(m), assemble_lap_h(m)
    d = assemble_div(m, g)
    # entrywise relative error; the 2-norm version at 1e-14 is in the acceptance suite
    for _ in range(50):
        q = rng.standard_normal(m.n_triangles)
        v = rng.standard_normal((m.n_triangles, 2))
        u = rng.standard_normal((m.n_triangles, 2))
        assert rel(g.apply(q), grad_h(q, m)) <= 1e-13
        assert rel(d.apply(v), div_h(v, m)) <= 1e-13
        assert rel(lt.apply(v), lap_tilde_h(v, m)) <= 1e-13
        assert rel(lh.apply(q), lap_h(q, m)) <= 1e-13
        assert rel(assemble_conv(u, m).apply(v), conv_upwind(u, v, m)) <= 1e-13


def test_assembled_structure(any_mesh):
    m = any_mesh
    g = assemble_grad(m)
    lt = assemble_lap_tilde(m).weighted
    assert abs(lt - lt.T).max() == 0.0
    d = assemble_div(m, g)
    assert abs(d.weighted + g.weighted.T).max() == 0.0
    direct = assemble_div_direct(m)
    assert abs(direct.weighted - d.weighted).max() <= 1e-15 * abs(d.weighted).max()
    lh = assemble_lap_h(m, g, d).weighted
    product = d.weighted @ np.diag(1 / g.weights) @ g.weighted.toarray()
    assert np.abs(lh.toarray() - product).max() <= 1e-14 * np.abs(product).max()


def test_mean_zero_grad_kernel(eq_mesh, rng):
    # a mean-zero field with (numerically) zero gradient must be zero
    g = assemble_grad(eq_mesh).weighted.toarray()
    _, _, vt = np.linalg.svd(g)
    null = vt[-1]
    assert np.abs(mean_zero(null / np.abs(null).max(), eq_mesh)).max() < 1e-10
