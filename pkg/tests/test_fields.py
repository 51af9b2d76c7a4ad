import math

import numpy as np
import pytest

from colocated_fv.analytic import AnalyticField, constant, curl_field, rhombus_map, stream_bump
from colocated_fv.fields import (RULE7_WEIGHTS, interpolate_p0, l2_error_p0, mean, mean_zero,
                                 norm_dual_h, norm_h, norm_l2, norm_p1nc, project_p0,
                                 project_p0_high, project_p1nc_from_p0, project_rt0,
                                 reconstruct_rt0, rt0_from_stream, tilde_grad_p1nc)
from colocated_fv.mesh import build_equilateral_mesh, from_arrays, refine_uniform
from colocated_fv.operators import div_h
from colocated_fv.verify import domain_map


def linear(a, b, c):
    return AnalyticField(lambda x, y: a + b * x + c * y)


def test_quadrature_weights_sum_to_one():
    assert RULE7_WEIGHTS.sum() == pytest.approx(1.0, abs=1e-15)


def test_project_p0_constant(any_mesh):
    assert np.allclose(project_p0(constant(2.5), any_mesh), 2.5, rtol=0, atol=1e-15)
    v = project_p0(constant([1.0, -3.0]), any_mesh)
    assert v.shape == (any_mesh.n_triangles, 2)
    assert np.allclose(v, [1.0, -3.0], atol=1e-15)


def test_project_p0_linear_is_centroid():
    m = from_arrays([[0.1, 0.0], [1.3, 0.2], [0.5, 0.9]], [[0, 1, 2]])
    centroid = m.vertices.mean(axis=0)
    assert project_p0(AnalyticField(lambda x, y: x), m)[0] == pytest.approx(centroid[0], abs=1e-15)
    assert project_p0_high(AnalyticField(lambda x, y: y), m)[0] == pytest.approx(centroid[1], abs=1e-15)


def test_project_p0_quadratic_exact():
    # mean of x^2 over a triangle = (sum x_i^2 + sum_{i<j} x_i x_j) / 6
    m = from_arrays([[0.1, 0.0], [1.3, 0.2], [0.5, 0.9]], [[0, 1, 2]])
    xs = m.vertices[:, 0]
    exact = (np.sum(xs**2) + xs[0] * xs[1] + xs[0] * xs[2] + xs[1] * xs[2]) / 6
    f = AnalyticField(lambda x, y: x**2)
    assert project_p0(f, m)[0] == pytest.approx(exact, rel=1e-14)
    assert project_p0_high(f, m)[0] == pytest.approx(exact, rel=1e-14)


def test_project_p0_sharp_function_within_bounds(eq_mesh):
    f = AnalyticField(lambda x, y: np.tanh(200 * (x - 0.51)))
    q = project_p0(f, eq_mesh)
    assert np.all((q >= -1) & (q <= 1))


def test_interpolate_p0_linear_exact(any_mesh):
    c = any_mesh.circumcenters
    q = interpolate_p0(linear(0.3, -1.0, 2.0), any_mesh)
    assert np.allclose(q, 0.3 - c[:, 0] + 2 * c[:, 1], atol=1e-14)
    assert np.all(interpolate_p0(constant(4.0), any_mesh) == 4.0)


def test_projection_vs_interpolation_is_first_order():
    f = AnalyticField(lambda x, y: np.sin(3 * x) * np.cos(2 * y))
    m = build_equilateral_mesh(2, 2, 0.5)
    hs, errs = [], []
    for _ in range(4):
        errs.append(norm_l2(project_p0_high(f, m) - interpolate_p0(f, m), m))
        hs.append(m.h)
        m = refine_uniform(m)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope > 0.9


def test_l2_error_of_exact_projection_of_constant(eq_mesh):
    assert l2_error_p0(constant(1.0), np.ones(eq_mesh.n_triangles), eq_mesh) == 0.0


def test_p1nc_constant(any_mesh):
    assert np.allclose(project_p1nc_from_p0(np.full(any_mesh.n_triangles, 7.0), any_mesh), 7.0,
                       rtol=1e-15)


def test_p1nc_equal_area_average():
    m = build_equilateral_mesh(1, 1, 1.0)
    q = np.zeros(2)
    (ie,) = m.interior_edges
    q[m.edge_l[ie]] = 1.0
    assert project_p1nc_from_p0(q, m)[ie] == 0.5


def test_p1nc_boundary_takes_adjacent_value(jitter_mesh, rng):
    q = rng.standard_normal(jitter_mesh.n_triangles)
    be = jitter_mesh.boundary_edges
    assert np.array_equal(project_p1nc_from_p0(q, jitter_mesh)[be], q[jitter_mesh.edge_k[be]])


def test_p1nc_weighting_on_unequal_areas(jitter_mesh, rng):
    m = jitter_mesh
    q = rng.standard_normal(m.n_triangles)
    r = project_p1nc_from_p0(q, m)
    for e in m.interior_edges[:10]:
        k, l = m.edge_k[e], m.edge_l[e]
        ak, al = m.areas[k], m.areas[l]
        assert r[e] == pytest.approx(ak / (ak + al) * q[k] + al / (ak + al) * q[l], rel=1e-14)


def test_rt0_constant_field(any_mesh):
    flux = project_rt0(constant([1.0, 0.0]), any_mesh)
    assert np.allclose(flux, any_mesh.edge_normals[:, 0], atol=1e-15)
    rec = reconstruct_rt0(flux, any_mesh)
    assert np.allclose(rec.values, [1.0, 0.0], atol=1e-13)
    assert rec.max_b < 1e-13


def test_rt0_zero_fluxes(eq_mesh):
    rec = reconstruct_rt0(np.zeros(eq_mesh.n_edges), eq_mesh)
    assert not rec.values.any() and rec.max_b == 0.0


def test_rt0_of_divergence_free_field(any_mesh):
    m = any_mesh
    u = curl_field(stream_bump(domain_map(m), 30.0))
    flux = project_rt0(u, m)
    rec = reconstruct_rt0(flux, m)
    scale = np.abs(flux).max()
    assert rec.max_b <= 1e-12 * scale
    assert np.abs(flux[m.boundary_edges]).max() <= 1e-12 * scale
    assert np.abs(div_h(rec.values, m)).max() <= 1e-12 * scale / m.h


def test_rt0_gauss_agrees_with_stream_integral(eq_mesh):
    u = curl_field(stream_bump(rhombus_map(4, 4, 0.25), 5.0))
    exact = project_rt0(u, eq_mesh)
    plain = AnalyticField(u.func, vector=True)
    approx = project_rt0(plain, eq_mesh, n_gauss=6)
    assert np.allclose(exact, approx, atol=1e-10 * np.abs(exact).max())


def test_rt0_from_random_stream_is_divergence_free(jitter_mesh, rng):
    m = jitter_mesh
    psi = rng.standard_normal(m.n_vertices)
    rec = reconstruct_rt0(rt0_from_stream(psi, m), m)
    assert rec.max_b < 1e-11 * np.abs(psi).max() / m.h**2


def test_norm_l2_basic(any_mesh, rng):
    m = any_mesh
    assert norm_l2(np.zeros(m.n_triangles), m) == 0.0
    assert norm_l2(np.ones(m.n_triangles), m) == pytest.approx(math.sqrt(m.total_area), rel=1e-14)
    v = rng.standard_normal((m.n_triangles, 2))
    naive = math.sqrt(sum(m.areas[i] * (v[i, 0] ** 2 + v[i, 1] ** 2) for i in range(m.n_triangles)))
    assert norm_l2(v, m) == pytest.approx(naive, rel=1e-14)


def test_norm_h_constant_field(any_mesh):
    m = any_mesh
    c = np.array([3.0, -4.0])
    v = np.tile(c, (m.n_triangles, 1))
    expected = math.sqrt(m.tau[m.boundary_edges].sum()) * 5.0
    assert norm_h(v, m) == pytest.approx(expected, rel=1e-14)
    assert norm_h(np.zeros(m.n_triangles), m) == 0.0


def test_norm_h_naive(jitter_mesh, rng):
    m = jitter_mesh
    v = rng.standard_normal((m.n_triangles, 2))
    s = 0.0
    for e in range(m.n_edges):
        k, l = m.edge_k[e], m.edge_l[e]
        d = v[l] - v[k] if l >= 0 else v[k]
        s += m.tau[e] * (d @ d)
    assert norm_h(v, m) == pytest.approx(math.sqrt(s), rel=1e-14)


def test_dual_norm_zero(eq_mesh):
    assert norm_dual_h(np.zeros((eq_mesh.n_triangles, 2)), eq_mesh) == 0.0


def test_dual_norm_inequality_and_maximizer(any_mesh, rng):
    m = any_mesh
    v = rng.standard_normal((m.n_triangles, 2))
    dual, x = norm_dual_h(v, m, return_maximizer=True)
    for _ in range(100):
        psi = rng.standard_normal((m.n_triangles, 2))
        pair = float(np.sum(m.areas[:, None] * v * psi))
        assert pair <= dual * norm_h(psi, m) * (1 + 1e-12)
    ratio = float(np.sum(m.areas[:, None] * v * x)) / norm_h(x, m)
    assert ratio == pytest.approx(dual, rel=1e-10)


def test_mean_zero(any_mesh, rng):
    m = any_mesh
    assert np.allclose(mean_zero(np.full(m.n_triangles, 5.0), m), 0.0, atol=1e-14)
    q = mean_zero(rng.standard_normal(m.n_triangles), m)
    assert abs(mean(q, m)) < 1e-15
    assert np.allclose(mean_zero(q, m), q, rtol=0, atol=1e-15)


def test_tilde_grad_p1nc(any_mesh):
    m = any_mesh
    assert np.allclose(tilde_grad_p1nc(np.full(m.n_edges, 2.0), m), 0.0, atol=1e-12)
    mid = m.edge_midpoints
    q = 0.5 + 1.5 * mid[:, 0] - 0.25 * mid[:, 1]
    assert np.allclose(tilde_grad_p1nc(q, m), [1.5, -0.25], atol=1e-12)


def test_norm_p1nc_of_constant(eq_mesh):
    assert norm_p1nc(np.full(eq_mesh.n_edges, 2.0), eq_mesh) == pytest.approx(
        2 * math.sqrt(eq_mesh.total_area), rel=1e-14)
