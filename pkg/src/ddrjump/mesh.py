"""Fitted polygonal meshes and the background mesh generators."""

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .exceptions import DegenerateElement, TopologyError
from .geometry import diameter, interior_point, is_simple, signed_area

INT, EXT = 0, 1
REGION_NAMES = ("int", "ext")

UNIT_BOX = (-0.5, 0.5, -0.5, 0.5)


@dataclass(frozen=True, eq=False)
class FittedMesh:
    """Polygonal mesh with region labels and interface bookkeeping.

    Element ``t`` is the counter-clockwise loop ``element_vertices[t]``; its
    i-th edge ``element_edges[t][i]`` joins vertex i to vertex i+1 and
    ``orientations[t][i]`` is +1 when the edge normal points out of ``t``.
    Interface edges are stored so that the interior element runs along them
    from ``edges[e, 0]`` to ``edges[e, 1]``; their normal therefore points
    from the interior to the exterior region.
    """

    vertices: np.ndarray
    edges: np.ndarray
    element_vertices: tuple
    element_edges: tuple
    orientations: tuple
    regions: np.ndarray
    domain: tuple
    edge_elements: np.ndarray
    interface_edges: np.ndarray  # rows (E, T_int, T_ext)
    boundary_edges: np.ndarray
    interface_vertices: np.ndarray  # chain order, counter-clockwise around int
    edge_lengths: np.ndarray
    edge_normals: np.ndarray
    edge_midpoints: np.ndarray
    areas: np.ndarray
    diameters: np.ndarray
    centers: np.ndarray  # x_T
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_elements(self):
        return len(self.element_vertices)

    @property
    def h(self):
        return float(self.diameters.max())

    @property
    def domain_area(self):
        x0, x1, y0, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    @property
    def boundary_vertices(self):
        return np.unique(self.edges[self.boundary_edges].ravel())

    def element_points(self, t):
        return self.vertices[self.element_vertices[t]]

    def interface_edge_count(self):
        """Number of interface edges of each element (the card(E_T ∩ E_Γ) of the analysis)."""
        counts = np.zeros(self.n_elements, dtype=int)
        for _, ti, te in self.interface_edges:
            counts[ti] += 1
            counts[te] += 1
        return counts

    def with_regions(self, regions):
        return build_fitted_mesh(self.vertices, self.element_vertices, regions, self.domain,
                                 edges=None, diagnostics=dict(self.diagnostics))

    def with_vertices(self, vertices):
        return build_fitted_mesh(vertices, self.element_vertices, self.regions, self.domain,
                                 edges=self.edges, diagnostics=dict(self.diagnostics))


def build_fitted_mesh(vertices, loops, regions, domain, edges=None, diagnostics=None):
    """Assemble a :class:`FittedMesh` from vertex loops.

    If ``edges`` is given, the edge numbering (and, away from the interface,
    the edge orientation) is taken from it; otherwise edges are numbered in
    order of first appearance along the loops.
    """
    vertices = np.asarray(vertices, dtype=float)
    regions = np.asarray(regions, dtype=int)
    loops = [np.asarray(lp, dtype=int) for lp in loops]
    loops = [lp if signed_area(vertices[lp]) > 0 else lp[::-1].copy() for lp in loops]

    if edges is None:
        key_to_edge = {}
        edge_list = []
        for lp in loops:
            for a, b in zip(lp, np.roll(lp, -1)):
                key = (min(a, b), max(a, b))
                if key not in key_to_edge:
                    key_to_edge[key] = len(edge_list)
                    edge_list.append(key)
        edges = np.array(edge_list, dtype=int).reshape(-1, 2)
    else:
        edges = np.array(edges, dtype=int).reshape(-1, 2)
        key_to_edge = {(min(a, b), max(a, b)): e for e, (a, b) in enumerate(edges)}

    n_edges = len(edges)
    element_edges = []
    edge_elements = -np.ones((n_edges, 2), dtype=int)
    for t, lp in enumerate(loops):
        ids = []
        for a, b in zip(lp, np.roll(lp, -1)):
            try:
                e = key_to_edge[(min(a, b), max(a, b))]
            except KeyError:
                raise TopologyError(f"element {t} uses an edge ({a}, {b}) missing from the edge list")
            ids.append(e)
            slot = 0 if edge_elements[e, 0] < 0 else 1
            if edge_elements[e, slot] >= 0:
                raise TopologyError(f"edge {e} is shared by more than two elements")
            edge_elements[e, slot] = t
        element_edges.append(np.array(ids, dtype=int))

    # interface: edges between elements of different regions, oriented int -> ext
    interface = []
    for e in range(n_edges):
        t0, t1 = edge_elements[e]
        if t1 < 0 or regions[t0] == regions[t1]:
            continue
        ti, te = (t0, t1) if regions[t0] == INT else (t1, t0)
        lp = loops[ti]
        pos = int(np.nonzero(element_edges[ti] == e)[0][0])
        a, b = lp[pos], lp[(pos + 1) % len(lp)]
        edges[e] = (a, b)
        interface.append((e, ti, te))
    interface = np.array(interface, dtype=int).reshape(-1, 3)

    orientations = []
    for t, lp in enumerate(loops):
        nxt = np.roll(lp, -1)
        ee = element_edges[t]
        orientations.append(np.where(edges[ee, 0] == lp, 1, -1).astype(int))
        if not np.all((edges[ee, 0] == lp) | (edges[ee, 0] == nxt)):
            raise TopologyError(f"inconsistent edge loop in element {t}")

    boundary = np.nonzero(edge_elements[:, 1] < 0)[0]

    x0 = vertices[edges[:, 0]]
    x1 = vertices[edges[:, 1]]
    tangent = x1 - x0
    lengths = np.linalg.norm(tangent, axis=1)
    normals = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / lengths[:, None]

    areas = np.array([signed_area(vertices[lp]) for lp in loops])
    diams = np.array([diameter(vertices[lp]) for lp in loops])
    centers = np.array([interior_point(vertices[lp]) for lp in loops]).reshape(-1, 2)

    return FittedMesh(
        vertices=vertices,
        edges=edges,
        element_vertices=tuple(loops),
        element_edges=tuple(element_edges),
        orientations=tuple(orientations),
        regions=regions,
        domain=tuple(float(v) for v in domain),
        edge_elements=edge_elements,
        interface_edges=interface,
        boundary_edges=boundary,
        interface_vertices=_chain_order(edges, interface),
        edge_lengths=lengths,
        edge_normals=normals,
        edge_midpoints=0.5 * (x0 + x1),
        areas=areas,
        diameters=diams,
        centers=centers,
        diagnostics=diagnostics or {},
    )


def _chain_order(edges, interface):
    if len(interface) == 0:
        return np.zeros(0, dtype=int)
    succ = {}
    for e in interface[:, 0]:
        a, b = edges[e]
        if a in succ:
            raise TopologyError("interface is not a simple closed chain")
        succ[a] = b
    start = min(succ)
    order = [start]
    v = succ[start]
    while v != start:
        order.append(v)
        if v not in succ or len(order) > len(succ):
            raise TopologyError("interface is not a simple closed chain")
        v = succ[v]
    if len(order) != len(succ):
        raise TopologyError("interface consists of more than one closed chain")
    return np.array(order, dtype=int)


def build_cartesian_mesh(n, domain=UNIT_BOX):
    """n x n square cells; every element is labelled exterior."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x0, x1, y0, y1 = domain
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    vid = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)  # [j, i]
    loops = [np.array([vid[j, i], vid[j, i + 1], vid[j + 1, i + 1], vid[j + 1, i]])
             for j in range(n) for i in range(n)]
    return build_fitted_mesh(vertices, loops, np.full(n * n, EXT), domain)


def build_triangular_mesh(h_target, domain=UNIT_BOX, kind="split", seed=0):
    """Triangulation of a box with element diameter at most about ``h_target``.

    ``kind="split"`` cuts each cell of an n x n grid along a diagonal,
    alternating the direction in a checkerboard pattern; ``kind="delaunay"``
    triangulates a jittered grid (boundary points kept on the box).
    """
    if h_target <= 0:
        raise ValueError("h_target must be positive")
    x0, x1, y0, y1 = domain
    n = max(1, int(ceil(max(x1 - x0, y1 - y0) / h_target - 1e-9)))
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    vid = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    if kind == "split":
        loops = []
        for j in range(n):
            for i in range(n):
                a, b, c, d = vid[j, i], vid[j, i + 1], vid[j + 1, i + 1], vid[j + 1, i]
                if (i + j) % 2 == 0:
                    loops += [np.array([a, b, c]), np.array([a, c, d])]
                else:
                    loops += [np.array([a, b, d]), np.array([b, c, d])]
    elif kind == "delaunay":
        from scipy.spatial import Delaunay

        rng = np.random.default_rng(seed)
        ell = (x1 - x0) / n
        interior = ((vertices[:, 0] > x0) & (vertices[:, 0] < x1)
                    & (vertices[:, 1] > y0) & (vertices[:, 1] < y1))
        r = 0.2 * ell * np.sqrt(rng.random(len(vertices)))
        th = 2 * np.pi * rng.random(len(vertices))
        vertices = vertices.copy()
        vertices[interior] += np.column_stack([r * np.cos(th), r * np.sin(th)])[interior]
        loops = list(Delaunay(vertices).simplices)
    else:
        raise ValueError(f"unknown triangular mesh kind {kind!r}")
    return build_fitted_mesh(vertices, loops, np.full(len(loops), EXT), domain)


def _element_ok(pts):
    return signed_area(pts) > 0 and is_simple(pts)


def perturb_vertices(mesh, amplitude_factor, seed=0, frozen=None, max_retries=100):
    """Move every non-frozen vertex randomly inside a disc of radius
    ``amplitude_factor * ell``, ``ell`` being the shortest edge of the input mesh.

    Vertices on the boundary and on the interface are always frozen; extra
    vertex ids can be passed in ``frozen``.
    """
    if not 0 <= amplitude_factor < 0.5:
        raise ValueError("amplitude_factor must lie in [0, 1/2)")
    if amplitude_factor == 0:
        return mesh
    ell = float(mesh.edge_lengths.min())
    radius = amplitude_factor * ell
    fixed = np.zeros(mesh.n_vertices, dtype=bool)
    fixed[mesh.boundary_vertices] = True
    fixed[mesh.interface_vertices] = True
    if frozen is not None:
        fixed[np.asarray(frozen, dtype=int)] = True

    vertex_elements = [[] for _ in range(mesh.n_vertices)]
    for t, lp in enumerate(mesh.element_vertices):
        for v in lp:
            vertex_elements[v].append(t)

    rng = np.random.default_rng(seed)
    X = mesh.vertices.copy()
    for v in range(mesh.n_vertices):
        if fixed[v]:
            continue
        old = X[v].copy()
        for _ in range(max_retries):
            r = radius * np.sqrt(rng.random())
            th = 2 * np.pi * rng.random()
            X[v] = old + r * np.array([np.cos(th), np.sin(th)])
            if all(_element_ok(X[mesh.element_vertices[t]]) for t in vertex_elements[v]):
                break
        else:
            raise DegenerateElement(f"could not move vertex {v} without degenerating an element")
    out = mesh.with_vertices(X)
    out.diagnostics["perturbation"] = {"amplitude_factor": amplitude_factor, "seed": seed, "ell": ell}
    return out


def check_mesh(mesh, tol=1e-12):
    """Return a list of violated invariants (empty when the mesh is sound)."""
    problems = []
    if np.any(mesh.areas <= 0):
        problems.append("non-positive element area")
    rel = abs(mesh.areas.sum() - mesh.domain_area) / mesh.domain_area
    if rel > tol:
        problems.append(f"area mismatch {rel:.2e}")
    for t in range(mesh.n_elements):
        ee = mesh.element_edges[t]
        w = mesh.orientations[t]
        flux = (w[:, None] * mesh.edge_normals[ee] * mesh.edge_lengths[ee, None]).sum(axis=0)
        if np.abs(flux).max() > tol * max(1.0, mesh.diameters[t]):
            problems.append(f"element {t}: normals do not close")
        # divergence identity for tau(x) = x
        div = (w * (mesh.edge_midpoints[ee] * mesh.edge_normals[ee]).sum(axis=1)
               * mesh.edge_lengths[ee]).sum()
        if abs(div - 2 * mesh.areas[t]) > tol * max(1.0, mesh.areas[t]) * 10:
            problems.append(f"element {t}: divergence identity fails")
    for e, ti, te in mesh.interface_edges:
        if mesh.regions[ti] != INT or mesh.regions[te] != EXT:
            problems.append(f"interface edge {e} has wrong sides")
        # n_E must be outward for the interior element (omega = +1) and inward for the exterior one
        w_int = mesh.orientations[ti][list(mesh.element_edges[ti]).index(e)]
        w_ext = mesh.orientations[te][list(mesh.element_edges[te]).index(e)]
        if (w_int, w_ext) != (1, -1):
            problems.append(f"interface edge {e} normal does not point to the exterior")
    return problems
