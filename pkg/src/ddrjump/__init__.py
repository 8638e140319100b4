"""Discrete de Rham solver for elliptic interface problems with potential
and flux jumps on polygonal meshes fitted to the interface."""

from .assembly import (DiscreteForms, FactorizedSystem, InterfaceWeights, LinearSystem, apply_dirichlet,
                       assemble_bilinear, assemble_rhs, default_eta, interface_weights, solve)
from .cases import CASES, PAPER_RATIOS, LdmScenario, Scenario, make_scenario
from .config import ConfigError, RunConfig
from .cutting import cut_mesh
from .ddr import DDRSpace, DofMap, interpolate
from .exceptions import (DDRError, DegenerateCut, DegenerateElement, IllConditioned, Instability, SolveFailure,
                         TopologyError)
from .interface import Circle, DeformedCircle, PolygonalChain, PolygonCurve, discretize_interface
from .ldm import run_ldm, run_ldm_study
from .mesh import EXT, INT, FittedMesh, build_cartesian_mesh, build_fitted_mesh, build_triangular_mesh, check_mesh
from .meshtext import parse_mesh, read_mesh, write_mesh, format_mesh
from .norms import ErrorReport, compute_errors, eoc
from .studies import fitted_mesh, run_convergence, solve_stationary

__version__ = "0.1.0"
