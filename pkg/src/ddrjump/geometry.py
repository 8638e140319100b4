"""Planar polygon predicates shared by the mesh builders and the cutter."""

import numpy as np


def signed_area(pts):
    """Shoelace area, positive for counter-clockwise loops."""
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(pts):
    pts = np.asarray(pts, dtype=float)
    # shift to the first vertex so that tiny cells far from the origin keep their digits
    origin = pts[0]
    q = pts - origin
    x, y = q[:, 0], q[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return origin + np.array([cx, cy])


def diameter(pts):
    pts = np.asarray(pts, dtype=float)
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d ** 2).sum(axis=-1).max()))


def winding_number(points, polygon, chunk=4096):
    """Winding number of each point with respect to a closed polygon.

    Sunday's crossing rule; points exactly on the polygon get an arbitrary
    but deterministic answer, callers are expected to avoid them.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(polygon, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0)
    out = np.empty(len(points), dtype=int)
    for start in range(0, len(points), chunk):
        p = points[start:start + chunk]
        px = p[:, 0:1]
        py = p[:, 1:2]
        is_left = (b[:, 0] - a[:, 0]) * (py - a[:, 1]) - (px - a[:, 0]) * (b[:, 1] - a[:, 1])
        up = (a[:, 1] <= py) & (b[:, 1] > py) & (is_left > 0)
        down = (a[:, 1] > py) & (b[:, 1] <= py) & (is_left < 0)
        out[start:start + chunk] = up.sum(axis=1) - down.sum(axis=1)
    return out


def point_segment_distance(p, a, b):
    """Distance from p to segment [a, b] and the clamped projection parameter."""
    p, a, b = (np.asarray(v, dtype=float) for v in (p, a, b))
    d = b - a
    L2 = float(d @ d)
    t = 0.0 if L2 == 0.0 else float(np.clip((p - a) @ d / L2, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * d))), t


def points_segment_distance(points, a, b):
    """Vectorised version of :func:`point_segment_distance` over many points."""
    points = np.asarray(points, dtype=float)
    d = b - a
    L2 = float(d @ d)
    t = np.clip((points - a) @ d / L2, 0.0, 1.0)
    proj = a + t[:, None] * d
    return np.linalg.norm(points - proj, axis=1), t


def segments_cross(a, b, c, d):
    """Parameters (s, t) of the intersection of lines a + s(b-a), c + t(d-c).

    Returns None for (nearly) parallel segments.
    """
    r = b - a
    q = d - c
    denom = r[0] * q[1] - r[1] * q[0]
    scale = np.linalg.norm(r) * np.linalg.norm(q)
    if abs(denom) <= 1e-14 * scale:
        return None
    w = c - a
    s = (w[0] * q[1] - w[1] * q[0]) / denom
    t = (w[0] * r[1] - w[1] * r[0]) / denom
    return s, t


def is_simple(pts):
    """True if the closed polygon has no self-intersections (O(n^2))."""
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    if n < 3:
        return False
    a = pts
    b = np.roll(pts, -1, axis=0)
    for i in range(n):
        # segments not adjacent to segment i
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        p, r = a[i], b[i] - a[i]
        c, q = a[j], b[j] - a[j]
        denom = r[0] * q[:, 1] - r[1] * q[:, 0]
        w = c - p
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w[:, 0] * q[:, 1] - w[:, 1] * q[:, 0]) / denom
            t = (w[:, 0] * r[1] - w[:, 1] * r[0]) / denom
        hit = (denom != 0) & (s >= 0) & (s <= 1) & (t >= 0) & (t <= 1)
        if hit.any():
            return False
        # collinear overlaps
        par = denom == 0
        if par.any():
            cross = w[par, 0] * r[1] - w[par, 1] * r[0]
            col = np.abs(cross) <= 1e-14 * max(np.linalg.norm(r), 1.0)
            if col.any():
                rr = r @ r
                s0 = (w[par][col] @ r) / rr
                s1 = ((w[par][col] + q[par][col]) @ r) / rr
                lo = np.minimum(s0, s1)
                hi = np.maximum(s0, s1)
                if np.any((hi >= 0) & (lo <= 1)):
                    return False
    return True


def ear_clip(pts):
    """Triangulate a simple counter-clockwise polygon.

    Returns an (n-2, 3) array of vertex indices.
    """
    pts = np.asarray(pts, dtype=float)
    idx = list(range(len(pts)))
    scale = diameter(pts) ** 2
    tris = []
    guard = 0
    while len(idx) > 3:
        m = len(idx)
        found = False
        for j in range(m):
            i0, i1, i2 = idx[j - 1], idx[j], idx[(j + 1) % m]
            a, b, c = pts[i0], pts[i1], pts[i2]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= 1e-14 * scale:
                continue
            others = [v for v in idx if v not in (i0, i1, i2)]
            if others and _any_in_triangle(pts[others], a, b, c):
                continue
            tris.append((i0, i1, i2))
            del idx[j]
            found = True
            break
        if not found:
            # only (nearly) collinear runs left: drop the flattest vertex
            guard += 1
            if guard > len(pts):
                raise ValueError("ear clipping failed: polygon is not simple")
            areas = []
            for j in range(m):
                a, b, c = pts[idx[j - 1]], pts[idx[j]], pts[idx[(j + 1) % m]]
                areas.append(abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])))
            j = int(np.argmin(areas))
            tris.append((idx[j - 1], idx[j], idx[(j + 1) % m]))
            del idx[j]
    tris.append(tuple(idx))
    return np.array(tris, dtype=int)


def _any_in_triangle(q, a, b, c):
    v0, v1 = b - a, c - a
    w = q - a
    det = v0[0] * v1[1] - v0[1] * v1[0]
    u = (w[:, 0] * v1[1] - w[:, 1] * v1[0]) / det
    v = (v0[0] * w[:, 1] - v0[1] * w[:, 0]) / det
    eps = 1e-12
    return bool(np.any((u >= -eps) & (v >= -eps) & (u + v <= 1 + eps)))


def interior_point(pts):
    """A point strictly inside a simple polygon: centroid when possible,
    otherwise the centroid of the largest ear-clipping triangle."""
    pts = np.asarray(pts, dtype=float)
    c = polygon_centroid(pts)
    h = diameter(pts)
    if winding_number(c[None, :], pts)[0] != 0:
        dmin = min(point_segment_distance(c, pts[i], pts[(i + 1) % len(pts)])[0]
                   for i in range(len(pts)))
        if dmin > 1e-8 * h:
            return c
    tris = ear_clip(pts)
    areas = [abs(signed_area(pts[t])) for t in tris]
    return pts[tris[int(np.argmax(areas))]].mean(axis=0)
