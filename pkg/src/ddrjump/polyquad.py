"""Polynomial bases, quadrature on polygons and edges, L2 projections.

Element polynomials use scaled monomials ((x - x_T) / h_T)**alpha ordered by
total degree, optionally orthonormalised in L2(T) by a Cholesky factor of
their Gram matrix.  The transform is lower triangular, so the first
``poly_dim(m)`` functions of a degree-``M`` basis always span P^m(T).

Edge polynomials are monomials t**j in the local coordinate
t in [-1/2, 1/2] running from ``edges[e, 0]`` to ``edges[e, 1]``.
"""

from functools import lru_cache
from math import ceil

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .geometry import ear_clip


def poly_dim(m):
    """Dimension of P^m in two variables (0 for m = -1)."""
    return (m + 1) * (m + 2) // 2 if m >= 0 else 0


@lru_cache(maxsize=None)
def monomial_exponents(m):
    """Exponents (a, b) of x**a y**b, by total degree then decreasing a."""
    out = [(d - j, j) for d in range(m + 1) for j in range(d + 1)]
    return np.array(out, dtype=int).reshape(-1, 2)


def _n_points(d):
    return max(1, int(ceil((d + 1) / 2)))


@lru_cache(maxsize=None)
def triangle_rule(d):
    """Collapsed Gauss rule on the reference triangle (0,0), (1,0), (0,1).

    Gauss-Jacobi (weight 1 - v) in the collapsed direction and Gauss-Legendre
    along the other; exact for total degree ``d``, all weights positive.
    Returns (points (n, 2), weights (n,)) with weights summing to 1/2.
    """
    n = _n_points(d)
    tl, wl = roots_legendre(n)
    tj, wj = roots_jacobi(n, 1.0, 0.0)
    u = 0.5 * (tl + 1.0)
    v = 0.5 * (tj + 1.0)
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(0.5 * wl, 0.25 * wj)
    pts = np.column_stack([(U * (1.0 - V)).ravel(), V.ravel()])
    pts.flags.writeable = False
    W = W.ravel()
    W.flags.writeable = False
    return pts, W


def triangulate(pts, center=None):
    """Sub-triangles covering a simple CCW polygon.

    A fan from ``center`` when every fan triangle has positive area, ear
    clipping otherwise.  Returns an array (m, 3, 2) of triangle corners.
    """
    pts = np.asarray(pts, dtype=float)
    if len(pts) == 3:
        return pts[None]
    if center is not None:
        a = pts
        b = np.roll(pts, -1, axis=0)
        cross = (a[:, 0] - center[0]) * (b[:, 1] - center[1]) - (a[:, 1] - center[1]) * (b[:, 0] - center[0])
        if np.all(cross > 0):
            c = np.broadcast_to(center, a.shape)
            return np.stack([c, a, b], axis=1)
    tris = ear_clip(pts)
    return pts[tris]


def element_quadrature(pts, d, center=None):
    """Quadrature points and weights on a simple polygon, exact to degree ``d``."""
    tris = triangulate(pts, center)
    ref, w = triangle_rule(d)
    a = tris[:, 0]
    e1 = tris[:, 1] - a
    e2 = tris[:, 2] - a
    jac = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    keep = jac > 0
    a, e1, e2, jac = a[keep], e1[keep], e2[keep], jac[keep]
    x = a[:, None, :] + ref[None, :, 0:1] * e1[:, None, :] + ref[None, :, 1:2] * e2[:, None, :]
    weights = jac[:, None] * w[None, :]
    return x.reshape(-1, 2), weights.ravel()


def edge_quadrature(a, b, d):
    """Gauss-Legendre rule on segment [a, b] with ceil((d+1)/2) points.

    Returns (points, weights, t) where t in [-1/2, 1/2] is the local
    coordinate from a to b.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s, w = roots_legendre(_n_points(d))
    t = 0.5 * s
    L = float(np.linalg.norm(b - a))
    pts = 0.5 * (a + b) + t[:, None] * (b - a)
    return pts, 0.5 * L * w, t


class ElementBasis:
    """Basis of P^degree(T) built on scaled monomials.

    ``transform`` maps monomial values to basis values:
    phi = monomials @ transform.T, so phi_i = sum_j transform[i, j] m_j.
    """

    def __init__(self, center, h, degree, transform=None):
        self.center = np.asarray(center, dtype=float)
        self.h = float(h)
        self.degree = int(degree)
        self.exponents = monomial_exponents(max(degree, 0))[: poly_dim(degree)]
        n = poly_dim(degree)
        self.transform = np.eye(n) if transform is None else np.asarray(transform)

    @classmethod
    def on_element(cls, center, h, degree, quad, orthonormal=True):
        basis = cls(center, h, degree)
        if orthonormal and degree >= 0:
            x, w = quad
            m = basis.monomials(x)
            gram = m.T @ (w[:, None] * m)
            L = np.linalg.cholesky(gram)
            basis.transform = np.linalg.inv(L)
        return basis

    @property
    def dim(self):
        return poly_dim(self.degree)

    def dim_of(self, m):
        return poly_dim(min(m, self.degree))

    def monomials(self, x):
        z = (np.atleast_2d(x) - self.center) / self.h
        e = self.exponents
        return z[:, 0:1] ** e[None, :, 0] * z[:, 1:2] ** e[None, :, 1]

    def monomial_gradients(self, x):
        z = (np.atleast_2d(x) - self.center) / self.h
        e = self.exponents
        ex, ey = e[:, 0], e[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            gx = np.where(ex > 0, ex * z[:, 0:1] ** np.maximum(ex - 1, 0), 0.0) * z[:, 1:2] ** ey
            gy = z[:, 0:1] ** ex * np.where(ey > 0, ey * z[:, 1:2] ** np.maximum(ey - 1, 0), 0.0)
        return np.stack([gx, gy], axis=-1) / self.h

    def values(self, x):
        """(npts, dim) basis values."""
        return self.monomials(x) @ self.transform.T

    def gradients(self, x):
        """(npts, dim, 2) basis gradients."""
        return np.einsum("pjc,ij->pic", self.monomial_gradients(x), self.transform)

    def evaluate(self, coeffs, x):
        c = np.asarray(coeffs)
        return self.values(x)[:, : len(c)] @ c


class EdgeBasis:
    """Monomials t**j on an edge, t in [-1/2, 1/2] from ``a`` to ``b``."""

    def __init__(self, a, b, degree):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.degree = int(degree)
        self.length = float(np.linalg.norm(self.b - self.a))

    @property
    def dim(self):
        return max(self.degree + 1, 0)

    def coordinate(self, x):
        d = self.b - self.a
        return (np.atleast_2d(x) - 0.5 * (self.a + self.b)) @ d / (d @ d)

    def values_t(self, t, degree=None):
        deg = self.degree if degree is None else degree
        return np.asarray(t, dtype=float)[:, None] ** np.arange(deg + 1)[None, :]

    def values(self, x, degree=None):
        return self.values_t(self.coordinate(x), degree)

    def quadrature(self, d):
        return edge_quadrature(self.a, self.b, d)

    def gram(self, degree=None):
        deg = self.degree if degree is None else degree
        _, w, t = self.quadrature(2 * deg + 1)
        v = self.values_t(t, deg)
        return v.T @ (w[:, None] * v)


def l2_project(f_values, basis_values, weights):
    """Coefficients of the L2 projection given samples at quadrature points.

    ``basis_values`` is (npts, dim); an empty space returns an empty vector.
    """
    dim = basis_values.shape[1]
    if dim == 0:
        return np.zeros(0)
    B = basis_values
    gram = B.T @ (weights[:, None] * B)
    rhs = B.T @ (weights * np.asarray(f_values, dtype=float))
    return np.linalg.solve(gram, rhs)


class RolyBasis:
    """Basis of R^{c,m}(T) = (x - x_T) P^{m-1}(T).

    tau_i = ((x - x_T) / h) q_i with q_i the scaled monomials of degree
    <= m - 1, so that div tau_i = (2 + |alpha_i|) q_i / h.
    """

    def __init__(self, center, h, degree):
        if degree < 1:
            raise ValueError("R^{c,m} needs m >= 1")
        self.center = np.asarray(center, dtype=float)
        self.h = float(h)
        self.degree = int(degree)
        self.scalar = ElementBasis(center, h, degree - 1)

    @property
    def dim(self):
        return poly_dim(self.degree - 1)

    def values(self, x):
        """(npts, dim, 2)."""
        q = self.scalar.monomials(x)
        z = (np.atleast_2d(x) - self.center) / self.h
        return q[:, :, None] * z[:, None, :]

    def divergence_values(self, x):
        q = self.scalar.monomials(x)
        return q * (2 + self.scalar.exponents.sum(axis=1))[None, :] / self.h


def divergence_matrix(m, basis=None, h=1.0):
    """Matrix of div tau_i expanded in a basis of P^{m-1}(T).

    Without ``basis`` the expansion is in the (unscaled by h) monomials and
    the matrix is diag(2 + |alpha|) / h.  With an :class:`ElementBasis`
    whose transform R maps monomials to basis functions, the monomials are
    R^{-1} phi and the matrix becomes diag(2 + |alpha|) R^{-1} / h.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    n = poly_dim(m - 1)
    diag = (2.0 + monomial_exponents(m - 1).sum(axis=1)[:n]) / h
    if basis is None:
        return np.diag(diag)
    R = basis.transform[:n, :n]
    return diag[:, None] * np.linalg.inv(R)


__all__ = [
    "EdgeBasis", "ElementBasis", "RolyBasis", "divergence_matrix", "edge_quadrature",
    "element_quadrature", "l2_project", "monomial_exponents", "poly_dim",
    "triangle_rule", "triangulate",
]
