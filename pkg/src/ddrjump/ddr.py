"""The two-region DDR space, its interpolator and the local reconstructions.

Local dof layout of an element with n edges (loop order)::

    [ v_T (dim P^{k-1}(T)) | v_E for edge 0..n-1 (k each) | v_V for vertex 0..n-1 ]

Global layout: the interior block (element, edge, vertex dofs of every
entity touching an interior element) followed by the exterior block.  Edges
and vertices on the interface therefore carry one copy per region.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import IllConditioned
from .mesh import EXT, INT
from .polyquad import EdgeBasis, ElementBasis, RolyBasis, edge_quadrature, element_quadrature, poly_dim

COND_LIMIT = 1e12


class DofMap:
    def __init__(self, mesh, k):
        self.k = k
        nk1 = poly_dim(k - 1)
        self.element_dim = nk1
        self.edge_dim = k
        self.element_offset = -np.ones(mesh.n_elements, dtype=int)
        self.edge_offset = -np.ones((2, mesh.n_edges), dtype=int)
        self.vertex_dof = -np.ones((2, mesh.n_vertices), dtype=int)
        self.block_start = np.zeros(3, dtype=int)

        n = 0
        for r in (INT, EXT):
            self.block_start[r] = n
            elems = np.nonzero(mesh.regions == r)[0]
            for t in elems:
                self.element_offset[t] = n
                n += nk1
            in_region = np.zeros(mesh.n_edges, dtype=bool)
            touches = np.zeros(mesh.n_vertices, dtype=bool)
            for t in elems:
                in_region[mesh.element_edges[t]] = True
                touches[mesh.element_vertices[t]] = True
            for e in np.nonzero(in_region)[0]:
                self.edge_offset[r, e] = n
                n += k
            for v in np.nonzero(touches)[0]:
                self.vertex_dof[r, v] = n
                n += 1
        self.block_start[2] = n
        self.n_dofs = n

        self._local = []
        for t in range(mesh.n_elements):
            r = mesh.regions[t]
            ids = [self.element_offset[t] + np.arange(nk1)]
            ids += [self.edge_offset[r, e] + np.arange(k) for e in mesh.element_edges[t]]
            ids.append(self.vertex_dof[r, mesh.element_vertices[t]])
            self._local.append(np.concatenate(ids).astype(int))

        bdofs = []
        for e in mesh.boundary_edges:
            t = mesh.edge_elements[e, 0]
            r = mesh.regions[t]
            bdofs.append(self.edge_offset[r, e] + np.arange(k))
            bdofs.append(self.vertex_dof[r, mesh.edges[e]])
        self.boundary_dofs = np.unique(np.concatenate(bdofs)).astype(int) if bdofs else np.zeros(0, int)

        iv = mesh.interface_vertices
        self.interface_vertex_pairs = np.column_stack([self.vertex_dof[INT, iv], self.vertex_dof[EXT, iv]]).reshape(-1, 2)

    def local_dofs(self, t):
        return self._local[t]

    def region_slice(self, r):
        return slice(self.block_start[r], self.block_start[r + 1])


@dataclass
class EdgeData:
    basis: EdgeBasis
    quad: tuple  # points, weights, t
    gram: np.ndarray  # P^{k+1}(E)
    potential_map: np.ndarray  # (k+2, k+2): [v_E (k), v_start, v_end] -> P^{k+1}(E)


@dataclass
class LocalOperators:
    """Reconstruction matrices of one element, acting on its local dofs."""

    basis: ElementBasis  # P^{k+1}(T); prefixes span P^{k-1}, P^k
    quad: tuple
    edge_potential: list  # per loop edge, (k+2, nl)
    gradient: np.ndarray  # (2 dim P^k, nl): x-component then y-component
    potential: np.ndarray  # (dim P^{k+1}, nl)
    stab_diff: list  # per loop edge, (k+2, nl): coefficients of p_T - v_TE
    mass_k: np.ndarray  # Gram of P^k(T)
    bulk_matrix: np.ndarray  # G^T M G + h^{-1} sum stab, without sigma
    extras: dict = field(default_factory=dict)


def _check_cond(mat, what):
    c = np.linalg.cond(mat)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise IllConditioned(f"{what}: condition number {c:.3e}")


def build_edge_data(mesh, k):
    out = []
    for e in range(mesh.n_edges):
        a, b = mesh.vertices[mesh.edges[e]]
        basis = EdgeBasis(a, b, k + 1)
        quad = edge_quadrature(a, b, 2 * k + 4)
        gram = basis.gram()
        ends = basis.values_t(np.array([-0.5, 0.5]))
        S = np.vstack([ends, gram[:k, :]])  # endpoint rows, then moments against t^j, j < k
        R = np.zeros((k + 2, k + 2))
        R[0, k] = 1.0
        R[1, k + 1] = 1.0
        R[2:, :k] = gram[:k, :k]
        _check_cond(S, f"edge {e} potential system")
        out.append(EdgeData(basis, quad, gram, np.linalg.solve(S, R)))
    return out


def build_local_operators(mesh, k, edge_data=None, orthonormal=None):
    """Local operators for every element of ``mesh``."""
    if edge_data is None:
        edge_data = build_edge_data(mesh, k)
    if orthonormal is None:
        orthonormal = k >= 1
    return [_local_operators(mesh, t, k, edge_data, orthonormal) for t in range(mesh.n_elements)], edge_data


def _local_operators(mesh, t, k, edge_data, orthonormal):
    pts = mesh.element_points(t)
    center = mesh.centers[t]
    hT = mesh.diameters[t]
    n = len(pts)
    nk1, nk, nkp = poly_dim(k - 1), poly_dim(k), poly_dim(k + 1)
    nl = nk1 + n * k + n
    off_edge, off_vert = nk1, nk1 + n * k

    quad = element_quadrature(pts, 2 * k + 5, center)
    xq, wq = quad
    basis = ElementBasis.on_element(center, hT, k + 1, quad, orthonormal)
    phi = basis.values(xq)
    dphi = basis.gradients(xq)

    # edge potentials expressed on local dofs
    loop = mesh.element_vertices[t]
    edge_pot = []
    for i, e in enumerate(mesh.element_edges[t]):
        Pi = np.zeros((k + 2, nl))
        pm = edge_data[e].potential_map
        Pi[:, off_edge + i * k: off_edge + (i + 1) * k] = pm[:, :k]
        vi, vj = off_vert + i, off_vert + (i + 1) % n
        start, end = (vi, vj) if mesh.orientations[t][i] > 0 else (vj, vi)
        Pi[:, start] += pm[:, k]
        Pi[:, end] += pm[:, k + 1]
        edge_pot.append(Pi)

    # gradient: tau = phi_j e_c, j < dim P^k
    mass_k = phi[:, :nk].T @ (wq[:, None] * phi[:, :nk])
    _check_cond(mass_k, f"element {t} mass matrix")
    rhs = np.zeros((2, nk, nl))
    for c in range(2):
        rhs[c, :, :nk1] = -(dphi[:, :nk, c].T @ (wq[:, None] * phi[:, :nk1]))
    for i, e in enumerate(mesh.element_edges[t]):
        ed = edge_data[e]
        xe, we, te = ed.quad
        w = mesh.orientations[t][i]
        nE = mesh.edge_normals[e]
        trace = ed.basis.values_t(te)  # t^m, m <= k+1
        B = basis.values(xe)[:, :nk].T @ (we[:, None] * trace)  # (nk, k+2)
        for c in range(2):
            rhs[c] += w * nE[c] * (B @ edge_pot[i])
    G = np.vstack([np.linalg.solve(mass_k, rhs[0]), np.linalg.solve(mass_k, rhs[1])])

    # potential: tau in R^{c,k+2}(T)
    roly = RolyBasis(center, hT, k + 2)
    tau = roly.values(xq)  # (nq, nkp, 2)
    D = roly.divergence_values(xq).T @ (wq[:, None] * phi[:, :nkp])
    _check_cond(D, f"element {t} potential system")
    rhs_p = np.zeros((nkp, nl))
    for c in range(2):
        Qc = tau[:, :, c].T @ (wq[:, None] * phi[:, :nk])  # (nkp, nk)
        rhs_p -= Qc @ G[c * nk:(c + 1) * nk]
    for i, e in enumerate(mesh.element_edges[t]):
        ed = edge_data[e]
        xe, we, te = ed.quad
        w = mesh.orientations[t][i]
        tn = roly.values(xe) @ mesh.edge_normals[e]  # (nqe, nkp)
        trace = ed.basis.values_t(te)
        rhs_p += w * (tn.T @ (we[:, None] * trace)) @ edge_pot[i]
    P = np.linalg.solve(D, rhs_p)

    # stabilisation differences p_T - v_TE in P^{k+1}(E)
    stab = []
    K = G[:nk].T @ mass_k @ G[:nk] + G[nk:].T @ mass_k @ G[nk:]
    for i, e in enumerate(mesh.element_edges[t]):
        ed = edge_data[e]
        xe, we, te = ed.quad
        trace = ed.basis.values_t(te)
        diff = basis.values(xe)[:, :nkp] @ P - trace @ edge_pot[i]
        coeffs = np.linalg.solve(ed.gram, trace.T @ (we[:, None] * diff))
        stab.append(coeffs)
        K = K + (diff.T @ (we[:, None] * diff)) / hT

    return LocalOperators(basis=basis, quad=quad, edge_potential=edge_pot, gradient=G, potential=P,
                          stab_diff=stab, mass_k=mass_k, bulk_matrix=K)


class DDRSpace:
    """Mesh + degree + dof map + all local operators.

    The space does not depend on the diffusion coefficients, so one space can
    serve every contrast ratio of a study.
    """

    def __init__(self, mesh, k=0, orthonormal=None):
        self.mesh = mesh
        self.k = k
        self.dofmap = DofMap(mesh, k)
        self.local, self.edge_data = build_local_operators(mesh, k, orthonormal=orthonormal)

    @property
    def n_dofs(self):
        return self.dofmap.n_dofs

    def local_dofs(self, t):
        return self.dofmap.local_dofs(t)

    def restrict(self, v, t):
        return np.asarray(v)[self.dofmap.local_dofs(t)]

    def edge_position(self, t, e):
        return int(np.nonzero(self.mesh.element_edges[t] == e)[0][0])

    def edge_potential(self, v, t, e):
        """Coefficients of v_TE in the edge monomials t^m, m <= k+1."""
        return self.local[t].edge_potential[self.edge_position(t, e)] @ self.restrict(v, t)

    def gradient(self, v, t):
        """(2, dim P^k) coefficients of G_T v in the element basis."""
        return (self.local[t].gradient @ self.restrict(v, t)).reshape(2, -1)

    def potential(self, v, t):
        return self.local[t].potential @ self.restrict(v, t)


def interpolate(space, func):
    """Interpolate a two-region function ``func(region, points) -> values``.

    Element and edge components are L2 projections; vertex components are
    point values taken from the side that owns the dof.
    """
    mesh, dm, k = space.mesh, space.dofmap, space.k
    out = np.zeros(dm.n_dofs)
    nk1 = poly_dim(k - 1)
    if nk1:
        for t in range(mesh.n_elements):
            lo = space.local[t]
            xq, wq = lo.quad
            vals = func(mesh.regions[t], xq)
            B = lo.basis.values(xq)[:, :nk1]
            gram = B.T @ (wq[:, None] * B)
            out[dm.element_offset[t] + np.arange(nk1)] = np.linalg.solve(gram, B.T @ (wq * vals))
    for r in (INT, EXT):
        if k:
            for e in np.nonzero(dm.edge_offset[r] >= 0)[0]:
                ed = space.edge_data[e]
                xe, we, te = ed.quad
                out[dm.edge_offset[r, e] + np.arange(k)] = np.linalg.solve(
                    ed.gram[:k, :k], ed.basis.values_t(te, k - 1).T @ (we * func(r, xe)))
        vs = np.nonzero(dm.vertex_dof[r] >= 0)[0]
        if len(vs):
            out[dm.vertex_dof[r, vs]] = func(r, mesh.vertices[vs])
    return out
