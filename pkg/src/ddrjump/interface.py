"""Closed interface curves and their polygonal discretisation."""

from dataclasses import dataclass
from math import ceil

import numpy as np

from .exceptions import TopologyError
from .geometry import is_simple, signed_area


@dataclass(frozen=True, eq=False)
class PolygonalChain:
    """Closed, simple polygonal chain stored counter-clockwise (last vertex
    connects back to the first)."""

    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if len(v) < 3:
            raise TopologyError("a closed chain needs at least three vertices")
        if signed_area(v) < 0:
            v = v[::-1].copy()
        object.__setattr__(self, "vertices", v)

    @property
    def n_segments(self):
        return len(self.vertices)

    @property
    def segment_lengths(self):
        v = self.vertices
        return np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)

    @property
    def length(self):
        return float(self.segment_lengths.sum())

    def is_simple(self):
        return is_simple(self.vertices)


class Circle:
    def __init__(self, radius=0.25, center=(0.0, 0.0)):
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)

    @property
    def perimeter(self):
        return 2 * np.pi * self.radius

    def sample(self, n):
        th = 2 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.column_stack([np.cos(th), np.sin(th)])

    def level_set(self, pts):
        """Negative inside, positive outside."""
        pts = np.atleast_2d(pts)
        return np.linalg.norm(pts - self.center, axis=1) - self.radius

    def normal(self, pts):
        d = np.atleast_2d(pts) - self.center
        return d / np.linalg.norm(d, axis=1)[:, None]


class DeformedCircle:
    """Star-shaped curve r(θ) = R (1 + amplitude cos(lobes θ))."""

    def __init__(self, radius=0.25, amplitude=0.2, lobes=3, center=(0.0, 0.0)):
        self.radius = float(radius)
        self.amplitude = float(amplitude)
        self.lobes = int(lobes)
        self.center = np.asarray(center, dtype=float)
        th = np.linspace(0.0, 2 * np.pi, 20001)
        pts = self._at(th)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        self._theta = th
        self._arclength = np.concatenate([[0.0], np.cumsum(seg)])

    def _at(self, th):
        r = self.radius * (1 + self.amplitude * np.cos(self.lobes * th))
        return self.center + r[:, None] * np.column_stack([np.cos(th), np.sin(th)])

    @property
    def perimeter(self):
        return float(self._arclength[-1])

    def sample(self, n):
        # uniform in arclength; points are evaluated on the exact curve
        s = self.perimeter * np.arange(n) / n
        return self._at(np.interp(s, self._arclength, self._theta))

    def level_set(self, pts):
        d = np.atleast_2d(pts) - self.center
        th = np.arctan2(d[:, 1], d[:, 0])
        return np.linalg.norm(d, axis=1) - self.radius * (1 + self.amplitude * np.cos(self.lobes * th))


class PolygonCurve:
    """A curve that already is a closed polygon (e.g. the square interface)."""

    def __init__(self, corners):
        c = np.asarray(corners, dtype=float)
        if signed_area(c) < 0:
            c = c[::-1].copy()
        self.corners = c

    @classmethod
    def square(cls, half_side=0.25, center=(0.0, 0.0)):
        cx, cy = center
        a = half_side
        return cls([(cx - a, cy - a), (cx + a, cy - a), (cx + a, cy + a), (cx - a, cy + a)])

    @property
    def perimeter(self):
        c = self.corners
        return float(np.linalg.norm(np.roll(c, -1, axis=0) - c, axis=1).sum())

    def side_lengths(self):
        c = self.corners
        return np.linalg.norm(np.roll(c, -1, axis=0) - c, axis=1)

    def level_set(self, pts):
        from .geometry import winding_number

        pts = np.atleast_2d(pts)
        return np.where(winding_number(pts, self.corners) != 0, -1.0, 1.0)


def segment_count(length, h_background, M):
    return max(1, int(ceil(length / h_background - 1e-9))) * 2 ** M


def discretize_interface(curve, M, h_background):
    """Polygonal chain with segments of length about ``h_background / 2**M``."""
    if M < 0:
        raise ValueError("refinement ratio M must be >= 0")
    if isinstance(curve, PolygonCurve):
        c = curve.corners
        pts = []
        for i, L in enumerate(curve.side_lengths()):
            m = segment_count(L, h_background, M)
            a, b = c[i], c[(i + 1) % len(c)]
            s = np.arange(m)[:, None] / m
            pts.append(a + s * (b - a))
        return PolygonalChain(np.vstack(pts))
    n = max(3, segment_count(curve.perimeter, h_background, 0)) * 2 ** M
    return PolygonalChain(curve.sample(n))
