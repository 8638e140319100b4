"""Global forms, Dirichlet elimination and the sparse solve."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import SolveFailure
from .mesh import INT
from .polyquad import poly_dim

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class InterfaceWeights:
    sigma_int: float
    sigma_ext: float
    lam_int: float
    lam_ext: float
    alpha: float
    eta: float

    def sigma(self, region):
        return self.sigma_int if region == INT else self.sigma_ext


def interface_weights(sigma_int, sigma_ext, eta=None):
    """Averaging weights and harmonic-mean coefficient of the interface terms.

    ``eta=None`` leaves the penalty unset (``nan``) until a mesh-dependent
    default is computed with :func:`default_eta`.
    """
    si, se = float(sigma_int), float(sigma_ext)
    if si <= 0 or se <= 0:
        raise ValueError("diffusion coefficients must be positive")
    s = si + se
    return InterfaceWeights(si, se, se / s, si / s, 2 * si * se / s, float("nan") if eta is None else float(eta))


@dataclass
class EdgeTraceOps:
    """Quadrature-point maps on one interface edge.

    All matrices act on the concatenated local dofs ``dofs`` of
    (T_int, T_ext); rows are quadrature points of the edge.
    """

    edge: int
    dofs: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    jump: np.ndarray  # [[v]]
    skewed_avg: np.ndarray  # {v}_s
    grad_int: np.ndarray  # G_{T_int} v . n_E
    grad_ext: np.ndarray  # G_{T_ext} v . n_E
    h_E: float

    def flux_avg(self, w):
        """{sigma G v} . n_E."""
        return w.lam_int * w.sigma_int * self.grad_int + w.lam_ext * w.sigma_ext * self.grad_ext


def _normal_gradient(space, t, x, n):
    lo = space.local[t]
    nk = poly_dim(space.k)
    phi = lo.basis.values(x)[:, :nk]
    G = lo.gradient
    return n[0] * (phi @ G[:nk]) + n[1] * (phi @ G[nk:])


def edge_trace_ops(space, w, row):
    """Trace maps for the interface row (E, T_int, T_ext)."""
    e, ti, te = (int(v) for v in row)
    mesh = space.mesh
    ed = space.edge_data[e]
    x, wq, tq = ed.quad
    trace = ed.basis.values_t(tq)
    vi = trace @ space.local[ti].edge_potential[space.edge_position(ti, e)]
    ve = trace @ space.local[te].edge_potential[space.edge_position(te, e)]
    ni, ne = vi.shape[1], ve.shape[1]
    zi, ze = np.zeros((len(x), ni)), np.zeros((len(x), ne))
    n = mesh.edge_normals[e]
    gi = _normal_gradient(space, ti, x, n)
    ge = _normal_gradient(space, te, x, n)
    return EdgeTraceOps(
        edge=e,
        dofs=np.concatenate([space.local_dofs(ti), space.local_dofs(te)]),
        points=x,
        weights=wq,
        jump=np.hstack([vi, -ve]),
        skewed_avg=np.hstack([w.lam_ext * vi, w.lam_int * ve]),
        grad_int=np.hstack([gi, ze]),
        grad_ext=np.hstack([zi, ge]),
        h_E=float(mesh.edge_lengths[e]),
    )


class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, dofs_r, dofs_c, block):
        r, c = np.meshgrid(dofs_r, dofs_c, indexing="ij")
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(np.asarray(block).ravel())

    def matrix(self, n):
        if not self.rows:
            return sp.csr_matrix((n, n))
        return sp.coo_matrix((np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
                             shape=(n, n)).tocsr()


@dataclass
class DiscreteForms:
    """The three pieces of a_h: A = bulk - consistency + eta * jump.

    ``jump`` is the Gram matrix of the interface seminorm, so the energy
    norm matrix is ``bulk + jump``.
    """

    bulk: sp.csr_matrix
    consistency: sp.csr_matrix
    jump: sp.csr_matrix
    weights: InterfaceWeights

    def matrix(self, eta=None):
        eta = self.weights.eta if eta is None else eta
        return (self.bulk - self.consistency + eta * self.jump).tocsr()

    @property
    def energy(self):
        return (self.bulk + self.jump).tocsr()


def assemble_bilinear(space, w):
    n = space.n_dofs
    bulk, cons, jump = _Triplets(), _Triplets(), _Triplets()
    for t in range(space.mesh.n_elements):
        d = space.local_dofs(t)
        bulk.add(d, d, w.sigma(space.mesh.regions[t]) * space.local[t].bulk_matrix)
    for row in space.mesh.interface_edges:
        ops = edge_trace_ops(space, w, row)
        W = ops.weights[:, None]
        # rows: test function v, columns: trial w
        cons.add(ops.dofs, ops.dofs, ops.jump.T @ (W * ops.flux_avg(w)))
        jump.add(ops.dofs, ops.dofs, (w.alpha / ops.h_E) * ops.jump.T @ (W * ops.jump))
    return DiscreteForms(bulk.matrix(n), cons.matrix(n), jump.matrix(n), w)


def assemble_rhs(space, w, f=None, flux_jump=None, jump=None):
    """Load vector of the linear form.

    ``f(region, points)``, ``flux_jump(points, normal)`` and ``jump(points)``
    are optional callables; missing data counts as zero.  ``normal`` is the
    interface edge normal, pointing from the interior to the exterior.
    """
    mesh = space.mesh
    b = np.zeros(space.n_dofs)
    if f is not None:
        for t in range(mesh.n_elements):
            lo = space.local[t]
            xq, wq = lo.quad
            phi = lo.basis.values(xq)
            b[space.local_dofs(t)] += lo.potential.T @ (phi.T @ (wq * f(mesh.regions[t], xq)))
    if flux_jump is not None or jump is not None:
        for row in mesh.interface_edges:
            ops = edge_trace_ops(space, w, row)
            if flux_jump is not None:
                b[ops.dofs] += ops.skewed_avg.T @ (ops.weights * flux_jump(ops.points, mesh.edge_normals[ops.edge]))
            if jump is not None:
                b[ops.dofs] += w.eta * (w.alpha / ops.h_E) * ops.jump.T @ (ops.weights * jump(ops.points))
    return b


def jump_load_operator(space, w):
    """Sparse map from nodal interface values J (chain order) to the load
    sum_E (alpha/h_E) int_E J_h [[v]], J_h affine on each edge.

    Multiply by eta to obtain the jump part of the right-hand side.
    """
    mesh = space.mesh
    pos = {int(v): i for i, v in enumerate(mesh.interface_vertices)}
    rows, cols, vals = [], [], []
    for row in mesh.interface_edges:
        ops = edge_trace_ops(space, w, row)
        e = ops.edge
        a, b_ = mesh.edges[e]
        _, _, tq = space.edge_data[e].quad
        hats = np.column_stack([0.5 - tq, 0.5 + tq])  # hat functions of edges[e,0], edges[e,1]
        block = (w.alpha / ops.h_E) * ops.jump.T @ (ops.weights[:, None] * hats)
        for j, v in enumerate((a, b_)):
            rows.append(ops.dofs)
            cols.append(np.full(len(ops.dofs), pos[int(v)]))
            vals.append(block[:, j])
    nG = len(mesh.interface_vertices)
    if not rows:
        return sp.csr_matrix((space.n_dofs, nG))
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(space.n_dofs, nG)).tocsr()


def trace_constant(space):
    """Largest discrete trace constant C_tr^2 over the interface (T, E) pairs.

    For each pair, the maximal generalised eigenvalue of
    h_E * (edge mass of P^k(T)) against the element mass of P^k(T).
    """
    mesh = space.mesh
    nk = poly_dim(space.k)
    best = 0.0
    for e, ti, te in mesh.interface_edges:
        x, wq, _ = space.edge_data[e].quad
        for t in (ti, te):
            lo = space.local[t]
            phi = lo.basis.values(x)[:, :nk]
            ME = mesh.edge_lengths[e] * (phi.T @ (wq[:, None] * phi))
            lam = sla.eigh(ME, lo.mass_k, eigvals_only=True)
            best = max(best, float(lam.max()))
    return best


def default_eta(space, factor=3.0):
    """eta = factor * C_tr^2 * N_boundary, with N_boundary the largest
    number of interface edges of a single element."""
    counts = space.mesh.interface_edge_count()
    n_b = int(counts.max()) if len(counts) else 0
    return factor * trace_constant(space) * n_b


def with_default_eta(space, w, eta=None):
    """Return ``w`` with its penalty set (explicit value or mesh default)."""
    if eta is None or eta == "auto":
        eta = default_eta(space)
    return InterfaceWeights(w.sigma_int, w.sigma_ext, w.lam_int, w.lam_ext, w.alpha, float(eta))


@dataclass
class LinearSystem:
    """Free part of A x = b after eliminating the Dirichlet dofs."""

    A_ff: sp.csc_matrix
    A_fc: sp.csr_matrix
    b_f: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray
    n: int

    def expand(self, x_free):
        x = np.zeros(self.n)
        x[self.free] = x_free
        x[self.fixed] = self.fixed_values
        return x


def apply_dirichlet(A, b, fixed, values):
    A = sp.csr_matrix(A)
    n = A.shape[0]
    fixed = np.asarray(fixed, dtype=int)
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    free = np.nonzero(mask)[0]
    values = np.asarray(values, dtype=float)
    A_fc = A[free][:, fixed]
    b_f = b[free] - A_fc @ values
    return LinearSystem(A[free][:, free].tocsc(), A_fc, b_f, free, fixed, values, n)


def backward_error(A, x, b):
    """Normwise backward error ||b - Ax|| / (||A|| ||x|| + ||b||) in the inf-norm."""
    r = b - A @ x
    nA = spla.norm(A, np.inf) if sp.issparse(A) else np.linalg.norm(A, np.inf)
    denom = nA * np.linalg.norm(x, np.inf) + np.linalg.norm(b, np.inf)
    return 0.0 if denom == 0 else float(np.linalg.norm(r, np.inf) / denom)


class FactorizedSystem:
    """LU factorisation of the free block, reusable for many right-hand sides."""

    def __init__(self, A, fixed):
        A = sp.csr_matrix(A)
        self.n = A.shape[0]
        mask = np.ones(self.n, dtype=bool)
        mask[np.asarray(fixed, dtype=int)] = False
        self.free = np.nonzero(mask)[0]
        self.fixed = np.asarray(fixed, dtype=int)
        self.A_ff = A[self.free][:, self.free].tocsc()
        self.A_fc = A[self.free][:, self.fixed]
        self._lu = _factor(self.A_ff) if len(self.free) else None

    def solve(self, b, fixed_values):
        x = np.zeros(self.n)
        x[self.fixed] = fixed_values
        if self._lu is None:
            return x
        rhs = b[self.free] - self.A_fc @ np.asarray(fixed_values, dtype=float)
        x[self.free] = _lu_solve(self._lu, self.A_ff, rhs)
        return x


def _factor(A):
    try:
        return spla.splu(A)
    except RuntimeError as exc:  # exactly singular
        raise SolveFailure(f"factorisation failed: {exc}") from exc


def _lu_solve(lu, A, rhs, refine=3):
    y = lu.solve(rhs)
    err = backward_error(A, y, rhs)
    for _ in range(refine):
        if err <= RESIDUAL_TOL:
            break
        y = y + lu.solve(rhs - A @ y)
        err = backward_error(A, y, rhs)
    if not np.all(np.isfinite(y)) or err > RESIDUAL_TOL:
        raise SolveFailure(f"backward error {err:.3e} exceeds {RESIDUAL_TOL:g}", residual=err)
    return y


def solve(system):
    """Solve a :class:`LinearSystem`; returns the full dof vector."""
    if len(system.free) == 0:
        return system.expand(np.zeros(0))
    return system.expand(_lu_solve(_factor(system.A_ff), system.A_ff, system.b_f))


def write_coo(path, A, b=None):
    """Matrix Market coordinate dump of A (and b as a dense array file)."""
    from scipy.io import mmwrite

    mmwrite(str(path), sp.coo_matrix(A))
    if b is not None:
        mmwrite(str(path) + ".rhs", np.asarray(b).reshape(-1, 1))


__all__ = [
    "DiscreteForms", "EdgeTraceOps", "FactorizedSystem", "InterfaceWeights", "LinearSystem",
    "apply_dirichlet", "assemble_bilinear", "assemble_rhs", "backward_error", "default_eta",
    "edge_trace_ops", "interface_weights", "jump_load_operator", "solve", "trace_constant",
    "with_default_eta", "write_coo",
]
