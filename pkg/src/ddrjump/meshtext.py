"""Line-based text format for fitted meshes.

Grammar (tokens separated by whitespace, ``#`` starts a comment)::

    POLYMESH 1
    DOMAIN x0 x1 y0 y1
    VERTICES nv
    x y                      (nv lines)
    EDGES ne
    v0 v1                    (ne lines)
    ELEMENTS nt
    region m e_0 ... e_{m-1} (nt lines; region is "int" or "ext", edges in loop order)
    INTERFACE ni
    e t_int t_ext            (ni lines)
    VERTEX_VALUES nv         (optional)
    value                    (nv lines)
    END

Floats are written with ``repr`` so that reading back reproduces the mesh bit
for bit.
"""

import numpy as np

from .exceptions import TopologyError
from .mesh import REGION_NAMES, build_fitted_mesh


def format_mesh(mesh, vertex_values=None):
    lines = ["POLYMESH 1", "DOMAIN " + " ".join(repr(float(v)) for v in mesh.domain)]
    lines.append(f"VERTICES {mesh.n_vertices}")
    lines += [f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    lines.append(f"EDGES {mesh.n_edges}")
    lines += [f"{a} {b}" for a, b in mesh.edges]
    lines.append(f"ELEMENTS {mesh.n_elements}")
    for t in range(mesh.n_elements):
        ee = mesh.element_edges[t]
        lines.append(f"{REGION_NAMES[mesh.regions[t]]} {len(ee)} " + " ".join(str(e) for e in ee))
    lines.append(f"INTERFACE {len(mesh.interface_edges)}")
    lines += [f"{e} {ti} {te}" for e, ti, te in mesh.interface_edges]
    if vertex_values is not None:
        vals = np.asarray(vertex_values, dtype=float)
        lines.append(f"VERTEX_VALUES {len(vals)}")
        lines += [repr(float(v)) for v in vals]
    lines.append("END")
    return "\n".join(lines) + "\n"


def write_mesh(path, mesh, vertex_values=None):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_mesh(mesh, vertex_values))


def parse_mesh(text):
    """Return ``(mesh, vertex_values or None)``."""
    rows = []
    for raw in text.splitlines():
        raw = raw.split("#", 1)[0].strip()
        if raw:
            rows.append(raw.split())
    it = iter(rows)

    def expect(keyword):
        row = next(it, None)
        if row is None or row[0] != keyword:
            raise ValueError(f"expected {keyword}, got {row}")
        return row[1:]

    if expect("POLYMESH") != ["1"]:
        raise ValueError("unsupported POLYMESH version")
    domain = tuple(float(v) for v in expect("DOMAIN"))
    nv = int(expect("VERTICES")[0])
    vertices = np.array([[float(v) for v in next(it)] for _ in range(nv)]).reshape(-1, 2)
    ne = int(expect("EDGES")[0])
    edges = np.array([[int(v) for v in next(it)] for _ in range(ne)], dtype=int).reshape(-1, 2)
    nt = int(expect("ELEMENTS")[0])
    regions, loops = [], []
    for _ in range(nt):
        row = next(it)
        regions.append(REGION_NAMES.index(row[0]))
        m = int(row[1])
        ee = [int(e) for e in row[2:2 + m]]
        loops.append(_loop_from_edges(edges, ee))
    ni = int(expect("INTERFACE")[0])
    stored_iface = [tuple(int(v) for v in next(it)) for _ in range(ni)]
    row = next(it, None)
    values = None
    if row is not None and row[0] == "VERTEX_VALUES":
        n = int(row[1])
        values = np.array([float(next(it)[0]) for _ in range(n)])
        row = next(it, None)
    if row is None or row[0] != "END":
        raise ValueError("missing END")

    mesh = build_fitted_mesh(vertices, loops, regions, domain, edges=edges)
    if sorted(map(tuple, mesh.interface_edges.tolist())) != sorted(stored_iface):
        raise TopologyError("stored interface list disagrees with the region labels")
    return mesh, values


def read_mesh(path):
    with open(path, encoding="ascii") as fh:
        return parse_mesh(fh.read())


def _loop_from_edges(edges, ee):
    """Vertex loop of an element given its edges in loop order."""
    a0, b0 = edges[ee[0]]
    a1, b1 = edges[ee[1]]
    start = a0 if a0 not in (a1, b1) else b0
    loop = [start]
    cur = start
    for e in ee:
        a, b = edges[e]
        if cur == a:
            cur = b
        elif cur == b:
            cur = a
        else:
            raise TopologyError(f"edges {ee} do not form a loop")
        loop.append(cur)
    if loop[-1] != loop[0]:
        raise TopologyError(f"edges {ee} do not close")
    return np.array(loop[:-1], dtype=int)
