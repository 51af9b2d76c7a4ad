"""Acceptance criteria 1-11, each at its stated tolerance.

Every test records a PASS/FAIL line before asserting; the lines are printed
in the "acceptance criteria" section of the pytest terminal summary.
"""
import math
import subprocess
import sys

import numpy as np
import pytest

from colocated_fv import verify as vf
from colocated_fv.analytic import rhombus_map
from colocated_fv.fields import (inner, norm_h, norm_l2, reconstruct_rt0, rt0_from_stream)
from colocated_fv.mesh import build_equilateral_mesh, refine_uniform
from colocated_fv.operators import (assemble_conv, assemble_div, assemble_grad, assemble_lap_h,
                                    assemble_lap_tilde, conv_upwind, div_h, grad_h, lap_h,
                                    lap_tilde_h, trilinear_b)
from colocated_fv.problems import make_problem
from colocated_fv.scheme import SchemeConfig, run, with_problem

EPS = 1e-300


@pytest.fixture(scope="module")
def meshes(eq_mesh, fine_mesh, jitter_mesh):
    return [eq_mesh, fine_mesh, jitter_mesh]


def test_c01_adjointness(meshes, record):
    rng = np.random.default_rng(101)
    worst = 0.0
    for m in meshes:
        for _ in range(20):
            q = rng.standard_normal(m.n_triangles)
            v = rng.standard_normal((m.n_triangles, 2))
            g = grad_h(q, m)
            gap = abs(inner(v, g, m) + inner(q, div_h(v, m), m))
            worst = max(worst, gap / (norm_l2(v, m) * norm_l2(g, m) + EPS))
    ok = record(1, worst <= 1e-12, f"adjointness max rel gap {worst:.2e} <= 1e-12")
    assert ok


def test_c02_incompressibility(record):
    m = refine_uniform(build_equilateral_mesh(4, 4, 0.25))
    cfg = with_problem(SchemeConfig(dt=0.002, t_end=1.0), make_problem("forced", rhombus_map(4, 4, 0.25)))
    worst = []

    def sink(state, diag):
        worst.append(diag.div_inf / np.abs(state.u_curr).max())

    res = run(cfg, m, [sink])
    ok = res.ok and len(worst) == 500 and max(worst) <= 1e-8
    record(2, ok, f"|div_h u^n|_inf / max|u| over {len(worst)} steps: {max(worst):.2e} <= 1e-8")
    assert res.ok, res.failure
    assert len(worst) == 500
    assert max(worst) <= 1e-8


def test_c03_coercivity(meshes, record):
    rng = np.random.default_rng(103)
    worst = 0.0
    for m in meshes:
        for _ in range(20):
            v = rng.standard_normal((m.n_triangles, 2))
            nh2 = norm_h(v, m) ** 2
            worst = max(worst, abs(-inner(lap_tilde_h(v, m), v, m) - nh2) / nh2)
    ok = record(3, worst <= 1e-12, f"coercivity identity max rel gap {worst:.2e} <= 1e-12")
    assert ok


def test_c04_upwind_positivity(meshes, record):
    rng = np.random.default_rng(104)
    worst = math.inf
    for m in meshes:
        boundary = np.unique(m.edges[m.boundary_edges])
        for _ in range(20):
            psi = rng.standard_normal(m.n_vertices)
            psi[boundary] = 0.0
            u = reconstruct_rt0(rt0_from_stream(psi, m), m).values
            assert np.abs(div_h(u, m)).max() <= 1e-12 * np.abs(u).max() / m.h
            v = rng.standard_normal((m.n_triangles, 2))
            b = trilinear_b(u, v, v, m)
            worst = min(worst, b / (np.abs(u).max() * norm_h(v, m) ** 2))
    ok = record(4, worst >= -1e-12, f"min b_h(u,v,v) / (|u| ||v||_h^2) = {worst:.2e} >= -1e-12")
    assert ok


def test_c05_gradient_order(record):
    family = vf.uniform_family(2, 2, 0.5, 5)
    slopes = {name: vf.gradient_errors(q, family).slope
              for name, q in vf.gradient_test_functions(vf.domain_map(family[0])).items()}
    text = ", ".join(f"{k}: {s:.3f}" for k, s in slopes.items())
    ok = record(5, len(slopes) == 2 and min(slopes.values()) >= 0.9,
                f"gradient slopes over 4 refinements {text} >= 0.9")
    assert ok


def test_c06_convection_order(record):
    family = vf.uniform_family(2, 2, 0.5, 4)
    slope = vf.convection_errors(vf.domain_map(family[0]), family).slope
    ok = record(6, slope >= 0.8, f"convection dual-norm slope over 3 refinements {slope:.3f} >= 0.8")
    assert ok


def test_c07_infsup(record):
    family = vf.uniform_family(4, 4, 0.25, 3)
    assert max(m.n_triangles for m in family) <= 600
    ratio, lemma = vf.measure_infsup(family, seed=7)
    ok = record(7, ratio.passed and lemma.passed and lemma.measured[0] <= 1e-12,
                f"beta_h/beta_coarsest {ratio.measured[0]:.3f} >= 0.5, "
                f"lemma identity {lemma.measured[0]:.2e} <= 1e-12")
    assert ok


@pytest.fixture(scope="module")
def sweep():
    return {r.name.split(",")[-1].strip().split()[0]: r for r in vf.stability_sweep(vf.SweepSpec())}


def test_c08_energy_stability(sweep, record):
    energy = sweep["energy"]
    pyth = sweep["Pythagoras"]
    failed = [r.context for r in sweep.values() if r.name == "scheme run"]
    ok = energy.passed and pyth.passed and pyth.measured[0] <= 1e-12 and not failed
    record(8, ok, f"energy growth {energy.measured[0]:.3f} <= 3, Pythagoras {pyth.measured[0]:.2e} <= 1e-12")
    assert not failed
    assert energy.passed and pyth.passed


def test_c09_increment_and_pressure(sweep, record):
    inc, pres = sweep["increment"], sweep["pressure"]
    ok = inc.passed and pres.passed
    record(9, ok, f"increment growth {inc.measured[0]:.3f} <= 3, pressure growth {pres.measured[0]:.3f} <= 3")
    assert ok


def rel2(a, b):
    return np.linalg.norm(np.ravel(a - b)) / max(np.linalg.norm(np.ravel(b)), EPS)


def naive_norm_l2(v, m):
    return math.sqrt(math.fsum(m.areas[i] * float(v[i] @ v[i]) for i in range(m.n_triangles)))


def naive_norm_h(v, m):
    terms = []
    for e in range(m.n_edges):
        k, l = m.edge_k[e], m.edge_l[e]
        d = v[k] if l < 0 else v[l] - v[k]
        terms.append(m.tau[e] * float(d @ d))
    return math.sqrt(math.fsum(terms))


def test_c10_oracle_equivalence(meshes, record):
    rng = np.random.default_rng(110)
    worst_op, worst_norm = 0.0, 0.0
    for m in meshes:
        g, lt, lh = assemble_grad(m), assemble_lap_tilde(m), assemble_lap_h(m)
        d = assemble_div(m, g)
        for _ in range(50):
            q = rng.standard_normal(m.n_triangles)
            v = rng.standard_normal((m.n_triangles, 2))
            u = rng.standard_normal((m.n_triangles, 2))
            worst_op = max(worst_op, rel2(g.apply(q), grad_h(q, m)), rel2(d.apply(v), div_h(v, m)),
                           rel2(lt.apply(v), lap_tilde_h(v, m)), rel2(lh.apply(q), lap_h(q, m)),
                           rel2(assemble_conv(u, m).apply(v), conv_upwind(u, v, m)))
            worst_norm = max(worst_norm,
                             abs(norm_l2(v, m) / naive_norm_l2(v, m) - 1),
                             abs(norm_h(v, m) / naive_norm_h(v, m) - 1))
    ok = record(10, worst_op <= 1e-14 and worst_norm <= 1e-14,
                f"assembled vs matrix-free {worst_op:.2e}, norms vs naive {worst_norm:.2e} <= 1e-14")
    assert ok


def test_c11_determinism(tmp_path, record):
    reports = []
    for i in range(2):
        path = tmp_path / f"report{i}.txt"
        out = subprocess.run([sys.executable, "-m", "colocated_fv", "verify", "--suite", "all",
                              "--seed", "7", "--report", str(path)], capture_output=True)
        reports.append((out.returncode, out.stdout, path.read_bytes()))
    same = reports[0] == reports[1]
    ok = record(11, same and reports[0][0] == 0,
                f"two 'verify --suite all --seed 7' reports byte-identical: {same} "
                f"({len(reports[0][2])} bytes, exit {reports[0][0]})")
    assert ok
