import numpy as np
import pytest
from conftest import small_meshes

from ddrjump.cases import square_case
from ddrjump.ddr import DDRSpace, interpolate
from ddrjump.mesh import EXT, INT, build_cartesian_mesh, build_fitted_mesh
from ddrjump.polyquad import element_quadrature, monomial_exponents, poly_dim

UNIT_DOMAIN = (0.0, 1.0, 0.0, 1.0)


def unit_square_space(k):
    return DDRSpace(build_cartesian_mesh(1, UNIT_DOMAIN), k)


def both(f):
    return lambda r, x: f(x)


def eval_potential(space, v, t, x):
    lo = space.local[t]
    return lo.basis.values(x) @ (lo.potential @ space.restrict(v, t))


def eval_gradient(space, v, t, x):
    lo = space.local[t]
    nk = poly_dim(space.k)
    G = (lo.gradient @ space.restrict(v, t)).reshape(2, nk)
    phi = lo.basis.values(x)[:, :nk]
    return np.column_stack([phi @ G[0], phi @ G[1]])


def eval_edge_potential(space, v, t, e):
    ed = space.edge_data[e]
    x, _, tq = ed.quad
    return x, ed.basis.values_t(tq) @ space.edge_potential(v, t, e)


def test_interpolate_constant_k0():
    sp = DDRSpace(small_meshes()["triangular-circle"], 0)
    v = interpolate(sp, lambda r, x: np.ones(len(x)))
    np.testing.assert_array_equal(v, 1.0)


def test_interpolant_continuous_for_ratio_one():
    sp = DDRSpace(small_meshes()["cartesian-square"], 0)
    v = interpolate(sp, square_case(1.0).u)
    pairs = sp.dofmap.interface_vertex_pairs
    np.testing.assert_allclose(v[pairs[:, 0]], v[pairs[:, 1]], atol=1e-15)


def test_interpolate_x_k1_means():
    m = small_meshes()["perturbed-square"]
    sp = DDRSpace(m, 1)
    v = interpolate(sp, lambda r, x: x[:, 0])
    dm = sp.dofmap
    for t in range(m.n_elements):
        lo = sp.local[t]
        # element dof times the constant basis function equals the cell mean (= centroid x)
        xq, wq = lo.quad
        mean = lo.basis.values(xq[:1])[0, 0] * v[dm.element_offset[t]]
        pts = m.element_points(t)
        xs, ys = pts[:, 0], pts[:, 1]
        cross = xs * np.roll(ys, -1) - np.roll(xs, -1) * ys
        centroid_x = ((xs + np.roll(xs, -1)) * cross).sum() / (3 * cross.sum())
        assert mean == pytest.approx(centroid_x, abs=1e-12)
    for e in range(m.n_edges):
        r = m.regions[m.edge_elements[e, 0]]
        assert v[dm.edge_offset[r, e]] == pytest.approx(m.edge_midpoints[e, 0], abs=1e-13)


def test_edge_potential_k0_linear():
    sp = unit_square_space(0)
    m = sp.mesh
    e = 0
    a, b = m.edges[e]
    v = np.zeros(sp.n_dofs)
    v[sp.dofmap.vertex_dof[EXT, b]] = 1.0
    ed = sp.edge_data[e]
    x, _, tq = ed.quad
    vals = ed.basis.values_t(tq) @ sp.edge_potential(v, 0, e)
    np.testing.assert_allclose(vals, tq + 0.5, atol=1e-15)


def test_zero_traces_on_boundary_for_homogeneous_vectors(rng):
    for k in (0, 1):
        sp = DDRSpace(small_meshes()["triangular-generic"], k)
        v = rng.normal(size=sp.n_dofs)
        v[sp.dofmap.boundary_dofs] = 0.0
        m = sp.mesh
        for e in m.boundary_edges:
            t = m.edge_elements[e, 0]
            np.testing.assert_allclose(sp.edge_potential(v, t, e), 0.0, atol=1e-14)


def test_gradient_unit_square_k0():
    sp = unit_square_space(0)
    G = sp.gradient(interpolate(sp, lambda r, x: x[:, 0]), 0)
    phi0 = sp.local[0].basis.values(np.array([[0.5, 0.5]]))[0, 0]
    np.testing.assert_allclose(G[:, 0] * phi0, [1.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(sp.gradient(interpolate(sp, lambda r, x: 3 + 0 * x[:, 0]), 0), 0, atol=1e-14)


def test_potential_unit_square_k0():
    sp = unit_square_space(0)
    x = np.random.default_rng(0).random((7, 2))
    for f in (lambda p: np.ones(len(p)), lambda p: p[:, 0]):
        v = interpolate(sp, both(f))
        np.testing.assert_allclose(eval_potential(sp, v, 0, x), f(x), atol=1e-14)


def random_polys(rng, deg, count):
    e = monomial_exponents(deg)
    c = rng.normal(size=(count, len(e)))
    return c, e


@pytest.mark.parametrize("k", [0, 1])
@pytest.mark.parametrize("name", sorted(small_meshes()))
def test_polynomial_consistency(name, k, rng):
    """G(I q) = grad q, p(I q) = q, v_TE(I q) = q|_E for 100 random q in P^{k+1}."""
    m = small_meshes()[name]
    sp = DDRSpace(m, k)
    coeffs, ex = random_polys(rng, k + 1, 100)
    # interpolants of the monomials; the interpolator is linear
    mons = [interpolate(sp, (lambda a, b: lambda r, x: x[:, 0] ** a * x[:, 1] ** b)(a, b)) for a, b in ex]
    V = np.column_stack(mons) @ coeffs.T  # (ndofs, 100)

    def q(x):
        return (x[:, 0:1] ** ex[:, 0] * x[:, 1:2] ** ex[:, 1]) @ coeffs.T

    def grad_q(x):
        gx = np.where(ex[:, 0] > 0, ex[:, 0] * x[:, 0:1] ** np.maximum(ex[:, 0] - 1, 0), 0) * x[:, 1:2] ** ex[:, 1]
        gy = x[:, 0:1] ** ex[:, 0] * np.where(ex[:, 1] > 0, ex[:, 1] * x[:, 1:2] ** np.maximum(ex[:, 1] - 1, 0), 0)
        return gx @ coeffs.T, gy @ coeffs.T

    for t in range(m.n_elements):
        lo = sp.local[t]
        xq, _ = lo.quad
        loc = V[sp.local_dofs(t)]
        np.testing.assert_allclose(lo.basis.values(xq) @ (lo.potential @ loc), q(xq), atol=1e-10)
        nk = poly_dim(k)
        G = lo.gradient @ loc
        phi = lo.basis.values(xq)[:, :nk]
        gx, gy = grad_q(xq)
        np.testing.assert_allclose(phi @ G[:nk], gx, atol=1e-10)
        np.testing.assert_allclose(phi @ G[nk:], gy, atol=1e-10)
        for i, e in enumerate(m.element_edges[t]):
            ed = sp.edge_data[e]
            xe, _, te = ed.quad
            np.testing.assert_allclose(ed.basis.values_t(te) @ (lo.edge_potential[i] @ loc), q(xe), atol=1e-10)
            np.testing.assert_allclose(lo.stab_diff[i] @ loc, 0, atol=1e-9)


@pytest.mark.parametrize("k", [0, 1])
def test_integration_by_parts_identity(k, rng):
    """int grad p . tau = int G . tau + sum omega int (p - v_TE) tau . n for constant tau."""
    m = small_meshes()["triangular-generic"]
    sp = DDRSpace(m, k)
    v = rng.normal(size=sp.n_dofs)
    for t in range(m.n_elements):
        lo = sp.local[t]
        xq, wq = lo.quad
        c = lo.potential @ sp.restrict(v, t)
        gp = np.einsum("pic,i->pc", lo.basis.gradients(xq), c)
        lhs = wq @ gp - wq @ eval_gradient(sp, v, t, xq)
        bnd = np.zeros(2)
        for i, e in enumerate(m.element_edges[t]):
            xe, ve = eval_edge_potential(sp, v, t, e)
            we = sp.edge_data[e].quad[1]
            bnd += m.orientations[t][i] * (we @ (eval_potential(sp, v, t, xe) - ve)) * m.edge_normals[e]
        np.testing.assert_allclose(lhs, bnd, atol=1e-10 * max(1, np.abs(v).max()))


def test_gradient_bound(rng):
    worst = 0.0
    for name, m in small_meshes().items():
        sp = DDRSpace(m, 0)
        for t in range(m.n_elements):
            lo = sp.local[t]
            xq, wq = lo.quad
            for _ in range(1000 // m.n_elements + 1):
                loc = rng.normal(size=lo.bulk_matrix.shape[0])
                gp = np.einsum("pic,i->pc", lo.basis.gradients(xq), lo.potential @ loc)
                lhs = wq @ (gp ** 2).sum(1)
                rhs = loc @ lo.bulk_matrix @ loc
                worst = max(worst, np.sqrt(lhs / rhs))
    assert worst <= 10.0


@pytest.mark.parametrize("k", [0, 1])
def test_edge_potential_independent_of_element(k, rng):
    m = small_meshes()["triangular-circle"]
    sp = DDRSpace(m, k)
    v = rng.normal(size=sp.n_dofs)
    iface = set(m.interface_edges[:, 0])
    for e in range(m.n_edges):
        t1, t2 = m.edge_elements[e]
        if t2 < 0 or e in iface:
            continue
        np.testing.assert_allclose(sp.edge_potential(v, t1, e), sp.edge_potential(v, t2, e), atol=1e-12)


def test_interface_edges_have_two_independent_traces():
    m = small_meshes()["cartesian-square"]
    sp = DDRSpace(m, 0)
    e, ti, te = m.interface_edges[0]
    v = np.zeros(sp.n_dofs)
    v[sp.dofmap.region_slice(INT)] = 1.0
    np.testing.assert_allclose(sp.edge_potential(v, ti, e), [1.0, 0.0])
    np.testing.assert_allclose(sp.edge_potential(v, te, e), [0.0, 0.0])


def test_quadratic_trace_k1_on_skewed_element():
    V = np.array([[0.0, 0.0], [1.0, 0.1], [1.2, 0.9], [0.1, 1.1], [-0.3, 0.5]])
    mesh = build_fitted_mesh(V, [np.arange(5)], np.array([EXT]), (-0.3, 1.2, 0.0, 1.1))
    sp = DDRSpace(mesh, 1)
    q = lambda r, x: 1 + x[:, 0] - 2 * x[:, 0] * x[:, 1] + 0.5 * x[:, 1] ** 2
    v = interpolate(sp, q)
    for e in mesh.element_edges[0]:
        x, ve = eval_edge_potential(sp, v, 0, e)
        np.testing.assert_allclose(ve, q(0, x), atol=1e-13)
    x, _ = element_quadrature(V, 4)
    np.testing.assert_allclose(eval_potential(sp, v, 0, x), q(0, x), atol=1e-12)
