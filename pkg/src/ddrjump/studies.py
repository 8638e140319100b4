"""Mesh families, the stationary solve and convergence studies."""

from dataclasses import dataclass, field

import numpy as np

from .assembly import apply_dirichlet, assemble_bilinear, assemble_rhs, interface_weights, solve, with_default_eta
from .cutting import cut_mesh
from .ddr import DDRSpace, interpolate
from .geometry import winding_number
from .interface import PolygonCurve, discretize_interface
from .mesh import EXT, INT, UNIT_BOX, build_cartesian_mesh, build_triangular_mesh, perturb_vertices
from .norms import compute_errors, eoc

FAMILIES = ("cartesian", "perturbed", "triangular")


def label_by_curve(mesh, chain):
    """Region labels of an interface-aligned mesh from the winding number of x_T."""
    inside = winding_number(mesh.centers, chain.vertices) != 0
    return mesh.with_regions(np.where(inside, INT, EXT))


def fitted_mesh(family, n, curve, M=0, seed=0, perturbation=0.2, domain=UNIT_BOX):
    """Level-``n`` member of a mesh family fitted to ``curve``.

    Cartesian and perturbed families use an n x n grid and require the
    interface to lie on grid lines (n divisible by 4 for the square case).
    The triangular family cuts an n x n split-triangle mesh along the chain.
    """
    h_bg = (domain[1] - domain[0]) / n
    if family in ("cartesian", "perturbed"):
        if not isinstance(curve, PolygonCurve):
            raise ValueError(f"the {family} family needs a polygonal interface on grid lines")
        chain = discretize_interface(curve, 0, h_bg)
        mesh = cut_mesh(build_cartesian_mesh(n, domain), chain)
        if mesh.n_elements != n * n:
            raise ValueError(f"interface is not aligned with the {n} x {n} grid")
        if family == "perturbed":
            mesh = perturb_vertices(mesh, perturbation, seed=seed + n)
        return mesh
    if family == "triangular":
        bg = build_triangular_mesh(h_bg, domain)
        return cut_mesh(bg, discretize_interface(curve, M, h_bg))
    raise ValueError(f"unknown mesh family {family!r}")


@dataclass
class StationaryResult:
    space: object
    forms: object
    weights: object
    u_h: np.ndarray
    matrix: object
    rhs: np.ndarray


def solve_stationary(space, scenario, eta=None):
    """Assemble and solve the interface problem; Dirichlet data from the exact solution."""
    w = with_default_eta(space, interface_weights(scenario.sigma_int, scenario.sigma_ext), eta)
    forms = assemble_bilinear(space, w)
    A = forms.matrix()
    b = assemble_rhs(space, w,
                     f=scenario.f if getattr(scenario, "has_source", True) else None,
                     flux_jump=scenario.flux_jump if getattr(scenario, "has_flux_jump", True) else None,
                     jump=scenario.jump)
    g = interpolate(space, scenario.u)
    bd = space.dofmap.boundary_dofs
    u_h = solve(apply_dirichlet(A, b, bd, g[bd]))
    return StationaryResult(space, forms, w, u_h, A, b)


@dataclass
class ConvergenceTable:
    case: str
    family: str
    ratio: float
    levels: list
    reports: list = field(default_factory=list)
    eta: list = field(default_factory=list)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.reports])

    def eoc(self, name="err_energy"):
        return eoc(self.column("h"), self.column(name))

    def rows(self):
        """Rows of the CSV error table."""
        e_en, e_l2 = self.eoc("err_energy"), self.eoc("err_l2")
        out = []
        for i, (n, r) in enumerate(zip(self.levels, self.reports)):
            out.append({
                "level": n, "h": r.h, "ndof": r.ndof, "err_energy": r.err_energy,
                "eoc_energy": e_en[i - 1] if i else float("nan"),
                "err_l2": r.err_l2, "eoc_l2": e_l2[i - 1] if i else float("nan"),
                "err_jump": r.err_jump,
            })
        return out


def run_convergence(case, family, levels, ratios, k=0, M=0, eta=None, seed=0, sigma_ext=1.0, progress=None):
    """Errors on a mesh sequence for every contrast ratio sigma_int / sigma_ext.

    One DDR space per level is shared by all ratios.  ``h`` in the reports is
    the nominal background size 1/n.
    """
    from .cases import make_scenario

    tables = {r: ConvergenceTable(case, family, r, list(levels)) for r in ratios}
    scenarios = {r: make_scenario(case, sigma_int=r * sigma_ext, sigma_ext=sigma_ext) for r in ratios}
    curve = next(iter(scenarios.values())).curve
    for n in levels:
        mesh = fitted_mesh(family, n, curve, M=M, seed=seed)
        space = DDRSpace(mesh, k)
        for r in ratios:
            sc = scenarios[r]
            res = solve_stationary(space, sc, eta)
            rep = compute_errors(space, res.forms, res.u_h, sc.u, h=(mesh.domain[1] - mesh.domain[0]) / n)
            tables[r].reports.append(rep)
            tables[r].eta.append(res.weights.eta)
            if progress:
                progress(case, family, r, n, rep)
    return tables
