"""Explicit-Euler evolution of an interface potential jump (k = 0).

At each step the stationary problem is solved with the affine chain
function induced by the nodal jump J^n as jump data, then J is updated
from the averaged interface flux of the discrete potential:

    (C / tau) M (J^{n+1} - J^n) = -r(u^n),   r[V] = sum_E int_E {sigma G u}.n_E phi_V

The sign makes J relax towards equilibrium for the closed-form relaxation
solution, which satisfies C dJ/dt = -sigma grad u . n with n pointing from
the interior to the exterior region.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (FactorizedSystem, assemble_bilinear, edge_trace_ops, interface_weights,
                       jump_load_operator, with_default_eta)
from .ddr import DDRSpace, interpolate
from .exceptions import Instability
from .mesh import EXT, INT
from .norms import energy_norm
from .polyquad import poly_dim


def _hat_values(space, e):
    _, _, tq = space.edge_data[e].quad
    return np.column_stack([0.5 - tq, 0.5 + tq])  # hats of edges[e, 0], edges[e, 1]


def interface_mass_matrix(mesh):
    """P1 mass matrix on the interface chain (vertices in chain order)."""
    pos = {int(v): i for i, v in enumerate(mesh.interface_vertices)}
    n = len(pos)
    rows, cols, vals = [], [], []
    for e in mesh.interface_edges[:, 0]:
        a, b = (pos[int(v)] for v in mesh.edges[e])
        L = mesh.edge_lengths[e]
        rows += [a, a, b, b]
        cols += [a, b, a, b]
        vals += [L / 3, L / 6, L / 6, L / 3]
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def flux_operator(space, w):
    """Sparse (n_Gamma x n_dofs) map u -> r with r[V] = sum_E int_E {sigma G u}.n_E phi_V."""
    mesh = space.mesh
    pos = {int(v): i for i, v in enumerate(mesh.interface_vertices)}
    rows, cols, vals = [], [], []
    for row in mesh.interface_edges:
        ops = edge_trace_ops(space, w, row)
        hats = _hat_values(space, ops.edge)
        block = hats.T @ (ops.weights[:, None] * ops.flux_avg(w))  # (2, ndofs_pair)
        for j, v in enumerate(mesh.edges[ops.edge]):
            rows.append(np.full(len(ops.dofs), pos[int(v)]))
            cols.append(ops.dofs)
            vals.append(block[j])
    n = len(mesh.interface_vertices)
    if not rows:
        return sp.csr_matrix((n, space.n_dofs))
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, space.n_dofs)).tocsr()


def jump_rhs(space, w, u_h):
    return flux_operator(space, w) @ u_h


def advance_jump(J, r, mass_lu, capacitance, tau):
    """J^{n+1} = J^n - (tau / C) M^{-1} r."""
    J = np.asarray(J, dtype=float)
    if not np.isfinite(capacitance):
        return J.copy()
    delta = mass_lu.solve(np.asarray(r, dtype=float))
    return J - (tau / capacitance) * delta


def factor_mass(M):
    return spla.splu(sp.csc_matrix(M))


def jump_error(space, J, exact_jump):
    """||J_h - exact||_{L2(chain)} with J_h affine on each interface edge."""
    mesh = space.mesh
    pos = {int(v): i for i, v in enumerate(mesh.interface_vertices)}
    total = 0.0
    for e in mesh.interface_edges[:, 0]:
        x, wq, _ = space.edge_data[e].quad
        hats = _hat_values(space, e)
        a, b = (pos[int(v)] for v in mesh.edges[e])
        Jh = hats @ np.array([J[a], J[b]])
        total += float(wq @ (Jh - exact_jump(x)) ** 2)
    return float(np.sqrt(total))


def interior_flux_norm(space, u_h):
    """||G_h u_h||_{L2(Omega_int)}."""
    mesh = space.mesh
    nk = poly_dim(space.k)
    total = 0.0
    for t in np.nonzero(mesh.regions == INT)[0]:
        lo = space.local[t]
        G = (lo.gradient @ space.restrict(u_h, t)).reshape(2, nk)
        total += float(sum(g @ lo.mass_k @ g for g in G))
    return float(np.sqrt(total))


@dataclass
class LdmState:
    t: float
    J: np.ndarray
    u: np.ndarray
    capacitance: float
    tau: float
    step: int = 0


@dataclass
class LdmRun:
    times: np.ndarray
    err_energy: np.ndarray
    err_jump: np.ndarray
    flux_int: np.ndarray
    states: list = field(default_factory=list)
    eta: float = float("nan")
    n_dofs: int = 0

    @property
    def tau(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def temporal_norm(self, which="energy"):
        """sqrt(tau sum_{n>=1} e_n^2)."""
        e = self.err_energy if which == "energy" else self.err_jump
        return float(np.sqrt(self.tau * np.sum(e[1:] ** 2)))

    def rows(self):
        return [{"step": n, "t": float(t), "err_energy": float(a), "err_jump": float(b), "flux_int": float(c)}
                for n, (t, a, b, c) in enumerate(zip(self.times, self.err_energy, self.err_jump, self.flux_int))]


def run_ldm(scenario, mesh, N, tau=None, eta=None, keep_states=False, blowup=1e3):
    """Run N explicit steps on ``mesh`` (k = 0); returns per-step errors.

    ``N = 0`` returns the initial state only.  Raises :class:`Instability`
    when max |J^n| exceeds ``blowup`` times the equilibrium jump amplitude.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    if tau is None:
        tau = scenario.t_final / N if N else 0.0
    space = DDRSpace(mesh, 0)
    w = with_default_eta(space, interface_weights(scenario.sigma_int, scenario.sigma_ext), eta)
    forms = assemble_bilinear(space, w)
    bd = space.dofmap.boundary_dofs
    system = FactorizedSystem(forms.matrix(), bd)
    B = w.eta * jump_load_operator(space, w)
    F = flux_operator(space, w)
    mass_lu = factor_mass(interface_mass_matrix(mesh))
    xG = mesh.vertices[mesh.interface_vertices]

    # the exact solution is affine in the decay factor a(t): u = a u0 + (1 - a) u_inf
    I0 = interpolate(space, scenario.u_initial)
    Iinf = interpolate(space, scenario.u_equilibrium)
    J_eq = np.abs(scenario.u_equilibrium(INT, xG) - scenario.u_equilibrium(EXT, xG)).max()
    limit = blowup * max(J_eq, 1e-300)

    J = scenario.jump(xG, 0.0)
    times, e_en, e_j, fl, states = [], [], [], [], []
    for n in range(N + 1):
        t = n * tau
        a = scenario.decay(t)
        ref = a * I0 + (1 - a) * Iinf
        u = system.solve(B @ J, ref[bd])
        times.append(t)
        e_en.append(energy_norm(u - ref, forms))
        e_j.append(jump_error(space, J, lambda x: scenario.jump(x, t)))
        fl.append(interior_flux_norm(space, u))
        if keep_states:
            states.append(LdmState(t, J.copy(), u, scenario.capacitance, tau, n))
        if n == N:
            break
        J = advance_jump(J, F @ u, mass_lu, scenario.capacitance, tau)
        if not np.all(np.isfinite(J)) or np.abs(J).max() > limit:
            raise Instability(f"jump blew up at step {n + 1} (max |J| = {np.abs(J).max():.3e}); reduce tau")
    return LdmRun(np.array(times), np.array(e_en), np.array(e_j), np.array(fl), states, w.eta, space.n_dofs)


@dataclass
class LdmStudy:
    levels: list
    steps: list
    runs: list

    @property
    def h(self):
        return np.array([1.0 / n for n in self.levels])

    def temporal(self, which="energy"):
        return np.array([r.temporal_norm(which) for r in self.runs])

    def eoc(self, which="energy"):
        from .norms import eoc

        return eoc(self.h, self.temporal(which))


def run_ldm_study(scenario, levels, n0=4, M=2, eta=None, progress=None):
    """Mesh/time-step sequence: background n x n triangles cut by the chain,
    with N = n0 * 4**level steps (tau quartered whenever h halves)."""
    from .studies import fitted_mesh

    steps, runs = [], []
    for i, n in enumerate(levels):
        N = n0 * 4 ** i
        mesh = fitted_mesh("triangular", n, scenario.curve, M=M)
        run = run_ldm(scenario, mesh, N, eta=eta)
        steps.append(N)
        runs.append(run)
        if progress:
            progress(n, N, run)
    return LdmStudy(list(levels), steps, runs)
