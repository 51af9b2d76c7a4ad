import numpy as np
import pytest

from colocated_fv.mesh import build_equilateral_mesh, from_arrays, refine_uniform


def perturbed_mesh(rows=4, cols=4, side=0.25, amount=0.04, seed=3):
    """Equilateral mesh with jittered interior vertices (still acute, not uniform)."""
    m = build_equilateral_mesh(rows, cols, side)
    rng = np.random.default_rng(seed)
    v = m.vertices.copy()
    interior = np.setdiff1d(np.arange(m.n_vertices), np.unique(m.edges[m.boundary_edges]))
    v[interior] += amount * side * rng.uniform(-1, 1, (len(interior), 2))
    return from_arrays(v, m.triangles)


@pytest.fixture(scope="session")
def eq_mesh():
    return build_equilateral_mesh(4, 4, 0.25)


@pytest.fixture(scope="session")
def fine_mesh():
    return refine_uniform(build_equilateral_mesh(3, 4, 0.25))


@pytest.fixture(scope="session")
def jitter_mesh():
    return perturbed_mesh()


@pytest.fixture(scope="session", params=["equilateral", "refined", "perturbed"])
def any_mesh(request, eq_mesh, fine_mesh, jitter_mesh):
    return {"equilateral": eq_mesh, "refined": fine_mesh, "perturbed": jitter_mesh}[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[dict]()
N_CRITERIA = 11


@pytest.fixture
def record(request):
    """Store ``(passed, detail)`` for an acceptance criterion, keyed by its number."""
    table = request.config.stash.setdefault(ACCEPTANCE, {})

    def _record(number, passed, detail):
        table[number] = (bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(ACCEPTANCE, None)
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        passed, detail = table.get(n, (False, "not run"))
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {n:2d}: {detail}")
