"""Cut a background mesh along a closed polygonal chain.

The background edges and the chain segments are split at their mutual
intersections, the resulting planar graph is walked face by face, and every
bounded face becomes an element of the fitted mesh.  Faces are labelled by
the winding number of an interior point with respect to the chain.
"""

from collections import defaultdict

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import DegenerateCut, TopologyError
from .geometry import interior_point, points_segment_distance, signed_area, winding_number
from .mesh import EXT, INT, build_fitted_mesh


def cut_mesh(background, chain, snap=1e-10, area_eps=1e-6, on_degenerate="report"):
    """Return a mesh fitted to ``chain``.

    ``snap`` is relative to the background mesh size: intersection points
    closer than ``snap * h`` to an existing vertex or edge are merged with it.
    Elements with area below ``area_eps * h_T**2`` are recorded in
    ``mesh.diagnostics["degenerate"]``, or raise :class:`DegenerateCut` when
    ``on_degenerate="raise"``.
    """
    X = background.vertices
    nv = len(X)
    tol = snap * background.h
    C = chain.vertices
    m = len(C)

    x0, x1, y0, y1 = background.domain
    gap = min((C[:, 0] - x0).min(), (x1 - C[:, 0]).min(), (C[:, 1] - y0).min(), (y1 - C[:, 1]).min())
    if gap <= tol:
        raise TopologyError("the interface touches the domain boundary")
    if not chain.is_simple():
        raise TopologyError("the interface chain self-intersects")

    E = background.edges
    A, B = X[E[:, 0]], X[E[:, 1]]
    emin = np.minimum(A, B) - tol
    emax = np.maximum(A, B) + tol

    new_points = []

    def add_point(p):
        new_points.append(np.asarray(p, dtype=float))
        return nv + len(new_points) - 1

    bg_splits = defaultdict(dict)  # edge -> {vertex: parameter}
    ch_splits = defaultdict(dict)  # chain segment -> {vertex: parameter}

    # chain vertices: reuse a background vertex, or land on an edge, or float free
    dist, nearest = cKDTree(X).query(C)
    cid = np.empty(m, dtype=int)
    for i, c in enumerate(C):
        if dist[i] <= tol:
            cid[i] = nearest[i]
            continue
        cid[i] = add_point(c)
        cand = np.nonzero(np.all((c >= emin) & (c <= emax), axis=1))[0]
        for e in cand:
            d, t = points_segment_distance(c[None, :], A[e], B[e])
            if d[0] <= tol:
                bg_splits[e][cid[i]] = float(t[0])

    if len(set(cid.tolist())) != m:
        raise TopologyError("two chain vertices snap onto the same mesh vertex")

    for s in range(m):
        a, b = C[s], C[(s + 1) % m]
        ia, ib = cid[s], cid[(s + 1) % m]
        lo = np.minimum(a, b) - tol
        hi = np.maximum(a, b) + tol

        # background vertices lying on the segment
        vc = np.nonzero(np.all((X >= lo) & (X <= hi), axis=1))[0]
        vc = vc[(vc != ia) & (vc != ib)]
        if vc.size:
            d, t = points_segment_distance(X[vc], a, b)
            far = (np.linalg.norm(X[vc] - a, axis=1) > tol) & (np.linalg.norm(X[vc] - b, axis=1) > tol)
            for v, tv in zip(vc[(d <= tol) & far], t[(d <= tol) & far]):
                ch_splits[s][int(v)] = float(tv)

        # proper crossings with background edges
        cand = np.nonzero(np.all((emax >= lo) & (emin <= hi), axis=1))[0]
        if cand.size == 0:
            continue
        r = b - a
        p, q = A[cand], B[cand] - A[cand]
        denom = r[0] * q[:, 1] - r[1] * q[:, 0]
        w = p - a
        ok = np.abs(denom) > 1e-14 * np.linalg.norm(r) * np.linalg.norm(q, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            sp = (w[:, 0] * q[:, 1] - w[:, 1] * q[:, 0]) / denom
            tp = (w[:, 0] * r[1] - w[:, 1] * r[0]) / denom
        ok &= (sp > 0) & (sp < 1) & (tp > 0) & (tp < 1)
        for j in np.nonzero(ok)[0]:
            e = cand[j]
            P = a + sp[j] * r
            ends = np.array([a, b, A[e], B[e]])
            if np.min(np.linalg.norm(ends - P, axis=1)) <= tol:
                continue  # handled by the vertex-on-segment cases
            v = add_point(P)
            ch_splits[s][v] = float(sp[j])
            bg_splits[e][v] = float(tp[j])

    P = np.vstack([X] + new_points) if new_points else X.copy()

    graph = {}  # (min, max) -> from chain

    def add_path(ids, from_chain):
        for u, v in zip(ids[:-1], ids[1:]):
            if u == v:
                continue
            key = (min(u, v), max(u, v))
            graph[key] = graph.get(key, False) or from_chain

    for e in range(len(E)):
        mids = sorted(bg_splits[e].items(), key=lambda kv: kv[1]) if e in bg_splits else []
        add_path([E[e, 0]] + [v for v, _ in mids] + [E[e, 1]], False)
    for s in range(m):
        mids = sorted(ch_splits[s].items(), key=lambda kv: kv[1]) if s in ch_splits else []
        add_path([cid[s]] + [v for v, _ in mids] + [cid[(s + 1) % m]], True)

    loops = _faces(P, list(graph))
    centers = [interior_point(P[lp]) for lp in loops]
    inside = winding_number(np.array(centers), C) != 0
    regions = np.where(inside, INT, EXT)

    # drop vertices no longer referenced (cannot happen for a connected arrangement, kept for safety)
    used = np.unique(np.concatenate(loops))
    if len(used) != len(P):
        remap = -np.ones(len(P), dtype=int)
        remap[used] = np.arange(len(used))
        P = P[used]
        loops = [remap[lp] for lp in loops]
        graph = {(remap[u], remap[v]): f for (u, v), f in graph.items()}

    mesh = build_fitted_mesh(P, loops, regions, background.domain,
                             diagnostics=dict(background.diagnostics))

    chain_edges = {k for k, f in graph.items() if f}
    iface = {(min(a, b), max(a, b)) for a, b in mesh.edges[mesh.interface_edges[:, 0]]}
    if chain_edges != iface:
        raise TopologyError("interface edges of the cut mesh do not match the chain")

    rel = abs(mesh.areas.sum() - background.areas.sum()) / background.areas.sum()
    degenerate = [int(t) for t in range(mesh.n_elements)
                  if mesh.areas[t] < area_eps * mesh.diameters[t] ** 2]
    if degenerate and on_degenerate == "raise":
        raise DegenerateCut(f"{len(degenerate)} cut elements below the area threshold")
    mesh.diagnostics.update({
        "cut": {"chain_segments": m, "new_vertices": len(new_points), "area_defect": rel},
        "degenerate": degenerate,
        "min_area_ratio": float((mesh.areas / mesh.diameters ** 2).min()),
    })
    return mesh


def _faces(P, edge_keys):
    """Bounded faces (counter-clockwise vertex loops) of a connected planar graph."""
    nbrs = defaultdict(list)
    for u, v in edge_keys:
        nbrs[u].append(v)
        nbrs[v].append(u)
    order = {}
    pos = {}
    for u, vs in nbrs.items():
        vs = np.array(vs)
        d = P[vs] - P[u]
        vs = vs[np.argsort(np.arctan2(d[:, 1], d[:, 0]), kind="stable")]
        order[u] = vs
        for i, v in enumerate(vs):
            pos[(u, int(v))] = i

    visited = set()
    faces = []
    outer = 0
    for start in pos:
        if start in visited:
            continue
        loop = []
        he = start
        while he not in visited:
            visited.add(he)
            u, v = he
            loop.append(u)
            around = order[v]
            w = int(around[pos[(v, u)] - 1])  # clockwise neighbour of the reversed half-edge
            he = (v, w)
        if signed_area(P[loop]) > 0:
            faces.append(np.array(loop, dtype=int))
        else:
            outer += 1
    if outer != 1:
        raise TopologyError("the cut produced a disconnected arrangement (interface inside a single element?)")
    return faces
