"""Discrete norms, error reports and convergence orders."""

from dataclasses import asdict, dataclass

import numpy as np

from .ddr import interpolate
from .polyquad import poly_dim


def energy_norm(v, forms):
    """sqrt of the bulk (gradient + stabilisation) part plus the jump seminorm squared."""
    v = np.asarray(v)
    return float(np.sqrt(max(v @ (forms.energy @ v), 0.0)))


def jump_seminorm(v, forms):
    v = np.asarray(v)
    return float(np.sqrt(max(v @ (forms.jump @ v), 0.0)))


def l2_component_norm(space, v):
    """sqrt(sum_T ||v_T||^2 + h_T sum_E ||v_E||^2); identically 0 when k = 0."""
    mesh, dm, k = space.mesh, space.dofmap, space.k
    nk1 = poly_dim(k - 1)
    if k == 0:
        return 0.0
    total = 0.0
    for t in range(mesh.n_elements):
        lo = space.local[t]
        xq, wq = lo.quad
        vt = lo.basis.values(xq)[:, :nk1] @ v[dm.element_offset[t] + np.arange(nk1)]
        total += float(wq @ vt ** 2)
        r = mesh.regions[t]
        for e in mesh.element_edges[t]:
            ed = space.edge_data[e]
            ve = v[dm.edge_offset[r, e] + np.arange(k)]
            total += mesh.diameters[t] * float(ve @ ed.gram[:k, :k] @ ve)
    return float(np.sqrt(total))


def potential_l2_error(space, v, exact):
    """(||p_T v - u||_{L2(Omega)}, ||u||_{L2(Omega)}) with u = exact(region, points)."""
    mesh = space.mesh
    err = ref = 0.0
    for t in range(mesh.n_elements):
        lo = space.local[t]
        xq, wq = lo.quad
        p = lo.basis.values(xq) @ (lo.potential @ space.restrict(v, t))
        u = exact(mesh.regions[t], xq)
        err += float(wq @ (p - u) ** 2)
        ref += float(wq @ u ** 2)
    return float(np.sqrt(err)), float(np.sqrt(ref))


@dataclass
class ErrorReport:
    """Errors of u_h against I_h u (raw values and values normalised by the
    same norm of I_h u, or by ||u|| for the reconstruction L2 error)."""

    h: float
    ndof: int
    err_energy: float
    err_l2: float  # reconstruction error ||p_T u_h - u||, normalised
    err_jump: float
    err_l2_component: float
    raw_energy: float
    raw_l2: float
    raw_jump: float
    raw_l2_component: float
    norm_energy: float
    norm_l2: float
    norm_jump: float
    norm_l2_component: float

    def as_dict(self):
        return asdict(self)


def _ratio(a, b):
    return a / b if b > 0 else a


def compute_errors(space, forms, u_h, exact, h=None):
    """Error report of ``u_h`` against the interpolant of ``exact(region, points)``."""
    ref = interpolate(space, exact)
    d = u_h - ref
    e_en, n_en = energy_norm(d, forms), energy_norm(ref, forms)
    e_j, n_j = jump_seminorm(d, forms), jump_seminorm(ref, forms)
    e_c, n_c = l2_component_norm(space, d), l2_component_norm(space, ref)
    e_p, n_p = potential_l2_error(space, u_h, exact)
    return ErrorReport(
        h=float(space.mesh.h if h is None else h), ndof=int(space.n_dofs),
        err_energy=_ratio(e_en, n_en), err_l2=_ratio(e_p, n_p), err_jump=_ratio(e_j, n_j),
        err_l2_component=_ratio(e_c, n_c),
        raw_energy=e_en, raw_l2=e_p, raw_jump=e_j, raw_l2_component=e_c,
        norm_energy=n_en, norm_l2=n_p, norm_jump=n_j, norm_l2_component=n_c,
    )


def eoc(h, err):
    """Per-step orders log(e_i / e_{i+1}) / log(h_i / h_{i+1})."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(err, dtype=float)
    if len(h) != len(e):
        raise ValueError("h and err must have equal length")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
