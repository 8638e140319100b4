import numpy as np
import pytest
import scipy.sparse as sp
from conftest import small_meshes
from hypothesis import given, settings
from hypothesis import strategies as st

from ddrjump.assembly import (FactorizedSystem, apply_dirichlet, assemble_bilinear, assemble_rhs, backward_error,
                              default_eta, edge_trace_ops, interface_weights, solve, trace_constant,
                              with_default_eta)
from ddrjump.ddr import DDRSpace, interpolate
from ddrjump.exceptions import SolveFailure
from ddrjump.mesh import EXT, INT, build_cartesian_mesh
from ddrjump.polyquad import poly_dim

positive = st.floats(1e-8, 1e8)


def center_cell_space(k=0):
    m = build_cartesian_mesh(3, (0.0, 3.0, 0.0, 3.0))
    return DDRSpace(m.with_regions(np.where(np.arange(9) == 4, INT, EXT)), k)


def test_weight_examples():
    w = interface_weights(1, 1, 5)
    assert (w.lam_int, w.lam_ext, w.alpha, w.eta) == (0.5, 0.5, 1.0, 5.0)
    w = interface_weights(1, 3)
    assert (w.lam_int, w.lam_ext, w.alpha) == (0.75, 0.25, 1.5)
    assert np.isnan(w.eta)
    w = interface_weights(1e-6, 1)
    assert w.alpha == pytest.approx(2e-6, rel=1e-5)
    assert w.lam_int == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(ValueError):
        interface_weights(0, 1)


@given(positive, positive)
def test_weight_identities(si, se):
    w = interface_weights(si, se)
    assert w.lam_int + w.lam_ext == pytest.approx(1.0, rel=2e-16)
    assert 2 * w.lam_int * si == pytest.approx(w.alpha, rel=4e-16)
    assert 2 * w.lam_ext * se == pytest.approx(w.alpha, rel=4e-16)


@given(positive, positive, *[st.floats(-1e3, 1e3)] * 4)
def test_product_jump_identity(si, se, a1, a2, b1, b2):
    w = interface_weights(si, se)
    avg_a = w.lam_int * a1 + w.lam_ext * a2
    skew_b = w.lam_ext * b1 + w.lam_int * b2
    assert a1 * b1 - a2 * b2 == pytest.approx(avg_a * (b1 - b2) + (a1 - a2) * skew_b, abs=1e-9)


def test_trace_ops_continuous_and_mean():
    space = DDRSpace(small_meshes()["triangular-circle"], 0)
    w = interface_weights(2.0, 2.0)
    v = interpolate(space, lambda r, x: 1 + x[:, 0] * x[:, 1])
    for row in space.mesh.interface_edges:
        ops = edge_trace_ops(space, w, row)
        loc = v[ops.dofs]
        np.testing.assert_allclose(ops.jump @ loc, 0, atol=1e-14)
        n = len(ops.dofs) // 2
        half = np.zeros_like(loc)
        half[:n] = loc[:n]
        # sigma equal: skewed average is the arithmetic mean of the traces
        np.testing.assert_allclose(ops.skewed_avg @ half, 0.5 * (ops.jump @ half), atol=1e-14)


def test_single_element_rows_sum_to_zero():
    space = DDRSpace(build_cartesian_mesh(1, (0.0, 1.0, 0.0, 1.0)), 0)
    A = space.local[0].bulk_matrix
    assert A.shape == (4, 4)
    np.testing.assert_allclose(A.sum(axis=1), 0, atol=1e-14)
    forms = assemble_bilinear(space, interface_weights(1, 1, 1))
    d = space.local_dofs(0)
    np.testing.assert_allclose(forms.matrix().toarray()[np.ix_(d, d)], A, atol=1e-15)


def test_penalty_block_is_edge_mass():
    space = center_cell_space()
    m, dm = space.mesh, space.dofmap
    w = interface_weights(1, 1, 10)
    forms = assemble_bilinear(space, w)
    oracle = np.zeros((space.n_dofs, space.n_dofs))
    for e in m.interface_edges[:, 0]:
        hE = m.edge_lengths[e]
        D = np.zeros((2, space.n_dofs))
        for j, v in enumerate(m.edges[e]):
            D[j, dm.vertex_dof[INT, v]] = 1
            D[j, dm.vertex_dof[EXT, v]] = -1
        M = hE * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
        oracle += (10 / hE) * D.T @ M @ D
    np.testing.assert_allclose((forms.matrix(10) - forms.matrix(0)).toarray(), oracle, atol=1e-13)


def a_h_by_quadrature(space, w, v):
    """Integrand-level evaluation of a_h(v, v)."""
    m = space.mesh
    nk = poly_dim(space.k)
    total = 0.0
    for t in range(m.n_elements):
        lo = space.local[t]
        xq, wq = lo.quad
        loc = space.restrict(v, t)
        G = (lo.gradient @ loc).reshape(2, nk)
        phi = lo.basis.values(xq)
        g = np.column_stack([phi[:, :nk] @ G[0], phi[:, :nk] @ G[1]])
        p = lo.potential @ loc
        s = 0.0
        for i, e in enumerate(m.element_edges[t]):
            ed = space.edge_data[e]
            xe, we, te = ed.quad
            diff = lo.basis.values(xe) @ p - ed.basis.values_t(te) @ (lo.edge_potential[i] @ loc)
            s += we @ diff ** 2
        total += w.sigma(m.regions[t]) * (wq @ (g ** 2).sum(1) + s / m.diameters[t])
    for e, ti, te in m.interface_edges:
        ed = space.edge_data[e]
        xe, we, tq = ed.quad
        n = m.edge_normals[e]
        trace = ed.basis.values_t(tq)
        vi = trace @ space.edge_potential(v, ti, e)
        ve = trace @ space.edge_potential(v, te, e)
        flux = 0.0
        for t, lam in ((ti, w.lam_int), (te, w.lam_ext)):
            lo = space.local[t]
            G = (lo.gradient @ space.restrict(v, t)).reshape(2, nk)
            phi = lo.basis.values(xe)[:, :nk]
            flux = flux + lam * w.sigma(m.regions[t]) * (n[0] * phi @ G[0] + n[1] * phi @ G[1])
        jump = vi - ve
        total += -(we @ (flux * jump)) + w.eta * w.alpha / m.edge_lengths[e] * (we @ jump ** 2)
    return total


@pytest.mark.parametrize("k", [0, 1])
def test_quadratic_form_matches_integrands(k, rng):
    space = DDRSpace(small_meshes()["triangular-generic"], k)
    w = interface_weights(0.3, 2.0, 7.0)
    A = assemble_bilinear(space, w).matrix()
    for _ in range(3):
        v = rng.normal(size=space.n_dofs)
        ref = a_h_by_quadrature(space, w, v)
        assert v @ A @ v == pytest.approx(ref, rel=1e-11)


def test_rhs_zero_data():
    space = DDRSpace(small_meshes()["cartesian-square"], 0)
    w = interface_weights(1, 2, 3)
    np.testing.assert_array_equal(assemble_rhs(space, w), 0)
    b = assemble_rhs(space, w, f=lambda r, x: np.zeros(len(x)), flux_jump=lambda x, n: np.zeros(len(x)),
                     jump=lambda x: np.zeros(len(x)))
    np.testing.assert_array_equal(b, 0)


def test_rhs_unit_source_single_element():
    space = DDRSpace(build_cartesian_mesh(1, (0.0, 1.0, 0.0, 1.0)), 0)
    b = assemble_rhs(space, interface_weights(1, 1, 1), f=lambda r, x: np.ones(len(x)))
    # k = 0 on a square: p of a vertex hat dof has mean 1/4 by symmetry
    np.testing.assert_allclose(b, 0.25, atol=1e-14)
    assert b.sum() == pytest.approx(1.0, abs=1e-14)


def test_rhs_unit_jump_k0():
    space = center_cell_space()
    w = interface_weights(1, 1, 1)
    b = assemble_rhs(space, w, jump=lambda x: np.ones(len(x)))
    dm = space.dofmap
    iv = space.mesh.interface_vertices
    expected = np.zeros(space.n_dofs)
    expected[dm.vertex_dof[INT, iv]] = 1.0  # two adjacent edges, (1/h_E) * h_E / 2 each
    expected[dm.vertex_dof[EXT, iv]] = -1.0
    np.testing.assert_allclose(b, expected, atol=1e-14)


def test_dirichlet_and_solve_small_systems():
    A = sp.identity(4, format="csr")
    b = np.arange(4.0)
    np.testing.assert_array_equal(solve(apply_dirichlet(A, b, [], [])), b)
    A = sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    np.testing.assert_allclose(solve(apply_dirichlet(A, np.array([1.0, 1.0]), [], [])), [1.0, 1.0])
    # fixing x1 = 3 in the 2x2 system: 2 x0 = 1 + 3
    np.testing.assert_allclose(solve(apply_dirichlet(A, np.array([1.0, 1.0]), [1], [3.0])), [2.0, 3.0])
    sys_all = apply_dirichlet(A, np.zeros(2), [0, 1], [5.0, 6.0])
    np.testing.assert_array_equal(solve(sys_all), [5.0, 6.0])


def test_singular_system_fails():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SolveFailure):
        solve(apply_dirichlet(A, np.array([1.0, 0.0]), [], []))


def test_factorized_system_reuse(rng):
    space = DDRSpace(small_meshes()["triangular-circle"], 0)
    w = with_default_eta(space, interface_weights(0.1, 1))
    A = assemble_bilinear(space, w).matrix()
    bd = space.dofmap.boundary_dofs
    fs = FactorizedSystem(A, bd)
    for _ in range(3):
        b = rng.normal(size=space.n_dofs)
        g = rng.normal(size=len(bd))
        x1 = fs.solve(b, g)
        x2 = solve(apply_dirichlet(A, b, bd, g))
        np.testing.assert_allclose(x1, x2, atol=1e-10)
        free = np.setdiff1d(np.arange(space.n_dofs), bd)
        assert backward_error(A[free], x1, b[free]) < 1e-10


@pytest.mark.parametrize("name", sorted(small_meshes()))
@pytest.mark.parametrize("ratio", [1e-6, 1.0, 1e6])
def test_coercivity_at_default_eta(name, ratio, rng):
    space = DDRSpace(small_meshes()[name], 0)
    w = with_default_eta(space, interface_weights(ratio, 1.0))
    forms = assemble_bilinear(space, w)
    A, E = forms.matrix(), forms.energy
    free = np.setdiff1d(np.arange(space.n_dofs), space.dofmap.boundary_dofs)
    c = np.inf
    for _ in range(100):
        v = np.zeros(space.n_dofs)
        v[free] = rng.normal(size=len(free))
        a = v @ A @ v
        assert a > 0
        c = min(c, a / (v @ E @ v))
    assert c > 0


def test_monotone_in_eta(rng):
    space = DDRSpace(small_meshes()["triangular-generic"], 0)
    forms = assemble_bilinear(space, interface_weights(0.5, 2.0, 1.0))
    v = rng.normal(size=space.n_dofs)
    vals = [v @ forms.matrix(eta) @ v for eta in (0.0, 1.0, 2.0, 5.0)]
    slope = v @ forms.jump @ v
    assert slope >= 0
    np.testing.assert_allclose(np.diff(vals), slope * np.array([1.0, 1.0, 3.0]), rtol=1e-10)


@pytest.mark.parametrize("ratio", [1e-3, 1.0, 1e3])
def test_consistency_term_bound(ratio, rng):
    space = DDRSpace(small_meshes()["triangular-circle"], 0)
    m = space.mesh
    w = interface_weights(ratio, 1.0, 1.0)
    forms = assemble_bilinear(space, w)
    c_tr2 = trace_constant(space)
    n_b = int(m.interface_edge_count().max())
    nk = poly_dim(space.k)
    for _ in range(20):
        wv, v = rng.normal(size=space.n_dofs), rng.normal(size=space.n_dofs)
        g2 = 0.0
        for t in range(m.n_elements):
            lo = space.local[t]
            G = (lo.gradient @ space.restrict(wv, t)).reshape(2, nk)
            g2 += w.sigma(m.regions[t]) * sum(g @ lo.mass_k @ g for g in G)
        lhs = abs(v @ forms.consistency @ wv)
        assert lhs <= np.sqrt(g2 * c_tr2 * n_b) * np.sqrt(v @ forms.jump @ v) * (1 + 1e-10)


def test_default_eta_positive():
    space = DDRSpace(small_meshes()["cartesian-square"], 0)
    eta = default_eta(space)
    # Cartesian cells: each interior cell touches at most 2 interface edges
    assert eta == pytest.approx(3 * trace_constant(space) * 2)
    assert eta > 0
