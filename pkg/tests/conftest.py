import numpy as np
import pytest

from ddrjump.cutting import cut_mesh
from ddrjump.interface import Circle, DeformedCircle, PolygonCurve, discretize_interface
from ddrjump.mesh import build_cartesian_mesh, build_triangular_mesh
from ddrjump.studies import fitted_mesh

# acceptance outcomes collected by tests/test_acceptance.py
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda s: (int(s.split()[0].rstrip(".")), s)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")


def _small_meshes():
    out = {
        "cartesian-square": fitted_mesh("cartesian", 8, PolygonCurve.square()),
        "perturbed-square": fitted_mesh("perturbed", 8, PolygonCurve.square(), seed=3),
        "triangular-circle": fitted_mesh("triangular", 8, Circle(), M=1),
        "triangular-generic": fitted_mesh("triangular", 8, DeformedCircle(), M=1),
        "cartesian-circle": cut_mesh(build_cartesian_mesh(6), discretize_interface(Circle(0.3), 0, 1 / 6)),
    }
    return out


_MESHES = None


def small_meshes():
    global _MESHES
    if _MESHES is None:
        _MESHES = _small_meshes()
    return _MESHES


@pytest.fixture(params=["cartesian-square", "perturbed-square", "triangular-circle", "triangular-generic",
                        "cartesian-circle"])
def test_mesh(request):
    return small_meshes()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def triangle_background():
    return build_triangular_mesh(1 / 8)
