import numpy as np
import pytest
from conftest import small_meshes
from hypothesis import given, settings
from hypothesis import strategies as st

from ddrjump.interface import Circle, PolygonCurve, discretize_interface, segment_count
from ddrjump.mesh import EXT, INT, build_cartesian_mesh, build_triangular_mesh, check_mesh, perturb_vertices
from ddrjump.studies import fitted_mesh

MESH_NAMES = sorted(small_meshes())


def shoelace(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * (x @ np.roll(y, -1) - np.roll(x, -1) @ y)


def test_cartesian_counts():
    m = build_cartesian_mesh(1, (0.0, 1.0, 0.0, 1.0))
    assert (m.n_elements, m.n_edges, m.n_vertices) == (1, 4, 4)
    assert m.areas.sum() == 1.0
    m = build_cartesian_mesh(2)
    assert (m.n_elements, m.n_edges, m.n_vertices) == (4, 12, 9)
    assert abs(build_cartesian_mesh(8).areas.sum() - 1.0) <= 1e-12


def test_triangular_counts_and_manifold():
    assert build_triangular_mesh(0.5).n_elements == 8
    m = build_triangular_mesh(1 / 8, kind="delaunay", seed=1)
    counts = np.bincount(np.concatenate(m.element_edges), minlength=m.n_edges)
    assert counts.max() <= 2


def test_triangular_refinement_halves_h():
    hs = [build_triangular_mesh(1 / n).diameters.max() for n in (4, 8, 16)]
    for a, b in zip(hs, hs[1:]):
        assert a / b == pytest.approx(2.0, rel=0.5)


@pytest.mark.parametrize("name", MESH_NAMES)
def test_mesh_invariants(name):
    m = small_meshes()[name]
    assert check_mesh(m) == []
    # area conservation against an independent shoelace sum
    total = sum(shoelace(m.element_points(t)) for t in range(m.n_elements))
    assert abs(total - m.domain_area) <= 1e-12 * m.domain_area
    for t in range(m.n_elements):
        ee, w = m.element_edges[t], m.orientations[t]
        # closed boundary: sum omega |E| n_E = 0
        flux = (w[:, None] * m.edge_normals[ee] * m.edge_lengths[ee, None]).sum(0)
        assert np.abs(flux).max() <= 1e-12
        # divergence identity for tau(x) = x (midpoint rule is exact for linear integrands)
        rhs = (w * m.edge_lengths[ee] * (m.edge_midpoints[ee] * m.edge_normals[ee]).sum(1)).sum()
        assert rhs == pytest.approx(2 * shoelace(m.element_points(t)), abs=1e-12)
    # interface edges: one interior and one exterior neighbour
    for e, ti, te in m.interface_edges:
        assert m.regions[ti] == INT and m.regions[te] == EXT
        assert set(m.edge_elements[e]) == {ti, te}


def test_interface_normals_point_outward_for_circle():
    m = small_meshes()["triangular-circle"]
    curve = Circle()
    for e, ti, te in m.interface_edges:
        mid = m.edge_midpoints[e]
        n = m.edge_normals[e]
        assert curve.level_set(mid - 1e-3 * n)[0] < curve.level_set(mid + 1e-3 * n)[0]


def test_winding_labels_agree_with_level_set():
    m = small_meshes()["triangular-circle"]
    chain_inside = m.regions == INT
    phi = Circle().level_set(m.centers)
    # the chain is inscribed: centres far from the circle must agree with its sign
    far = np.abs(phi) > 0.05
    assert np.all(chain_inside[far] == (phi[far] < 0))


def test_perturb_zero_and_frozen():
    m = fitted_mesh("cartesian", 8, PolygonCurve.square())
    assert perturb_vertices(m, 0.0) is m
    p1 = perturb_vertices(m, 0.2, seed=7)
    p2 = perturb_vertices(m, 0.2, seed=7)
    np.testing.assert_array_equal(p1.vertices, p2.vertices)
    frozen = np.concatenate([m.interface_vertices, m.boundary_vertices])
    np.testing.assert_array_equal(p1.vertices[frozen], m.vertices[frozen])
    assert np.all(p1.areas > 0)
    assert abs(p1.areas.sum() - 1.0) <= 1e-12
    assert np.abs(p1.vertices - m.vertices).max() > 0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 0.45))
def test_perturbed_meshes_stay_valid(seed, amp):
    m = perturb_vertices(build_cartesian_mesh(6), amp, seed=seed)
    assert check_mesh(m) == []


def test_discretize_circle_octagon():
    c = Circle(0.25)
    chain = discretize_interface(c, 0, c.perimeter / 8)
    assert chain.n_segments == 8
    np.testing.assert_allclose(np.linalg.norm(chain.vertices, axis=1), 0.25)
    np.testing.assert_allclose(chain.segment_lengths, chain.segment_lengths[0])


def test_discretize_square_is_exact():
    chain = discretize_interface(PolygonCurve.square(0.25), 1, 1 / 8)
    v = chain.vertices
    on_side = np.isclose(np.abs(v).max(axis=1), 0.25)
    assert on_side.all()
    for corner in [(-0.25, -0.25), (0.25, -0.25), (0.25, 0.25), (-0.25, 0.25)]:
        assert np.any(np.all(np.isclose(v, corner), axis=1))


@pytest.mark.parametrize("M", [0, 1, 2, 3])
def test_refinement_doubles_segments(M):
    c = Circle()
    n0 = discretize_interface(c, M, 1 / 16).n_segments
    assert discretize_interface(c, M + 1, 1 / 16).n_segments == 2 * n0
    assert segment_count(1.0, 0.25, M) == 4 * 2 ** M
