"""Manufactured and physical test cases.

Each case is written symbolically (sympy) per region; the source term, the
jump data and the boundary data are derived from the exact solution and
compiled to numpy callables.  Interface data are evaluated with the region
formulas at the points of the polygonal chain, i.e. the chain is taken as
the interface of the discrete problem.
"""

from dataclasses import dataclass, field
from math import exp

import numpy as np
import sympy as sp

from .interface import Circle, DeformedCircle, PolygonCurve
from .mesh import EXT, INT

X, Y, T = sp.symbols("x y t", real=True)

PAPER_RATIOS = (1e-6, 1e-3, 1e3, 1e6)  # sigma_int / sigma_ext


def _compile(expr, args=(X, Y)):
    fn = sp.lambdify(args, expr, modules="numpy")

    def call(pts, *extra):
        pts = np.atleast_2d(pts)
        val = fn(pts[:, 0], pts[:, 1], *extra)
        return np.broadcast_to(np.asarray(val, dtype=float), (len(pts),)).copy()

    return call


class _RegionField:
    """Two-region scalar field compiled from sympy expressions."""

    def __init__(self, exprs, args=(X, Y)):
        self.exprs = exprs
        self._fns = [_compile(e, args) for e in exprs]

    def __call__(self, region, pts, *extra):
        return self._fns[int(region)](pts, *extra)


@dataclass
class Scenario:
    """A stationary interface problem with known solution.

    Callables take (region, points) or (points, normal) and return arrays.
    """

    name: str
    sigma_int: float
    sigma_ext: float
    u: object
    grad: object  # grad(region, pts) -> (n, 2)
    f: object
    jump: object  # u_int - u_ext at interface points
    flux_jump: object  # (sigma_int grad u_int - sigma_ext grad u_ext) . n
    curve: object
    exprs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    has_source: bool = True
    has_flux_jump: bool = True

    def boundary(self, region, pts):
        return self.u(region, pts)

    def sigma(self, region):
        return self.sigma_int if region == INT else self.sigma_ext


def scenario_from_exprs(name, u_int, u_ext, sigma_int, sigma_ext, curve, params=None):
    sig = (sp.nsimplify(sigma_int, rational=False), sp.nsimplify(sigma_ext, rational=False))
    us = (sp.sympify(u_int), sp.sympify(u_ext))
    grads = [(sp.diff(u, X), sp.diff(u, Y)) for u in us]
    fs = [sp.simplify(-s * (sp.diff(u, X, 2) + sp.diff(u, Y, 2))) for s, u in zip(sig, us)]
    u = _RegionField(us)
    gx = _RegionField([g[0] for g in grads])
    gy = _RegionField([g[1] for g in grads])
    f = _RegionField(fs)

    def grad(region, pts):
        return np.column_stack([gx(region, pts), gy(region, pts)])

    def jump(pts):
        return u(INT, pts) - u(EXT, pts)

    si, se = float(sigma_int), float(sigma_ext)

    def flux_jump(pts, normal):
        d = si * grad(INT, pts) - se * grad(EXT, pts)
        return d @ np.asarray(normal, dtype=float).reshape(-1) if np.ndim(normal) == 1 else (d * normal).sum(axis=1)

    zero_flux = all(sp.simplify(sig[0] * grads[0][c] - sig[1] * grads[1][c]) == 0 for c in range(2))
    return Scenario(name=name, sigma_int=si, sigma_ext=se, u=u, grad=grad, f=f, jump=jump,
                    flux_jump=flux_jump, curve=curve,
                    exprs={"u_int": us[0], "u_ext": us[1], "f_int": fs[0], "f_ext": fs[1]},
                    params=dict(params or {}),
                    has_source=any(fe != 0 for fe in fs), has_flux_jump=not zero_flux)


def _sigmas(params):
    """Resolve (sigma_int, sigma_ext) from explicit values or a ratio sigma_int/sigma_ext."""
    if "sigma_int" in params and "sigma_ext" in params:
        return float(params["sigma_int"]), float(params["sigma_ext"])
    ratio = float(params.get("ratio", 1.0))
    se = float(params.get("sigma_ext", 1.0))
    return ratio * se, se


def square_case(ratio=1.0, sigma_ext=1.0, half_side=0.25):
    """u_int = (sigma_ext / sigma_int)(x^2 - y^2), u_ext = x^2 - y^2 around a square."""
    si, se = ratio * sigma_ext, sigma_ext
    q = X ** 2 - Y ** 2
    r = sp.nsimplify(se / si, rational=False)
    return scenario_from_exprs("square", r * q, q, si, se, PolygonCurve.square(half_side),
                               {"ratio": ratio, "sigma_ext": se})


def circle_case(ratio=1.0, sigma_ext=1.0, radius=0.25):
    """Dipole-type solution around a circle (flux continuous on the exact circle).

    The interior factor is 2 sigma_ext / (sigma_ext + sigma_int).
    """
    si, se = ratio * sigma_ext, sigma_ext
    s_i, s_e = sp.nsimplify(si, rational=False), sp.nsimplify(se, rational=False)
    R = sp.nsimplify(radius)
    beta = (s_e - s_i) / (s_e + s_i)
    u_int = 2 * s_e / (s_e + s_i) * X
    u_ext = 1 + (1 + beta * R ** 2 / (X ** 2 + Y ** 2)) * X
    return scenario_from_exprs("circle", u_int, u_ext, si, se, Circle(radius),
                               {"ratio": ratio, "sigma_ext": se, "radius": radius})


def generic_case(ratio=1.0, sigma_ext=1.0, radius=0.25, amplitude=0.2, lobes=3):
    sc = square_case(ratio, sigma_ext)
    sc.name = "generic"
    sc.curve = DeformedCircle(radius, amplitude, lobes)
    sc.params.update({"radius": radius, "amplitude": amplitude, "lobes": lobes})
    return sc


def patch_case(sigma_int=1.0, sigma_ext=3.0, half_side=0.25):
    """Affine solution in each region: the scheme must reproduce it exactly."""
    u_int = 2 * X - Y + sp.Rational(3, 10)
    u_ext = sp.Rational(1, 2) * X + sp.Rational(3, 2) * Y - sp.Rational(1, 10)
    return scenario_from_exprs("patch", u_int, u_ext, sigma_int, sigma_ext, PolygonCurve.square(half_side),
                               {"sigma_int": sigma_int, "sigma_ext": sigma_ext})


@dataclass
class LdmScenario:
    """Charge relaxation of a circular interface in a uniform far field.

    u(t) = exp(-t/t_c)(u0 - u_inf) + u_inf with
    t_c = C R (1/sigma_int + 1/sigma_ext).
    """

    sigma_int: float
    sigma_ext: float
    radius: float
    field: float
    capacitance: float
    t_final: float
    curve: object
    _u0: object
    _uinf: object
    _g0: object
    _ginf: object
    name: str = "ldm"

    @property
    def t_c(self):
        return self.capacitance * self.radius * (1 / self.sigma_int + 1 / self.sigma_ext)

    def u_initial(self, region, pts):
        return self._u0(region, pts)

    def u_equilibrium(self, region, pts):
        return self._uinf(region, pts)

    def decay(self, t):
        return exp(-t / self.t_c)

    def u(self, region, pts, t):
        a = self.decay(t)
        return a * self._u0(region, pts) + (1 - a) * self._uinf(region, pts)

    def grad(self, region, pts, t):
        a = self.decay(t)
        g0 = np.column_stack([self._g0[0](region, pts), self._g0[1](region, pts)])
        gi = np.column_stack([self._ginf[0](region, pts), self._ginf[1](region, pts)])
        return a * g0 + (1 - a) * gi

    def jump(self, pts, t):
        return self.u(INT, pts, t) - self.u(EXT, pts, t)

    def sigma(self, region):
        return self.sigma_int if region == INT else self.sigma_ext

    def at(self, t):
        """Stationary view at time t (callables without the time argument)."""
        return _Frozen(self, t)


class _Frozen:
    def __init__(self, sc, t):
        self.sc, self.t = sc, t
        self.sigma_int, self.sigma_ext = sc.sigma_int, sc.sigma_ext

    def u(self, region, pts):
        return self.sc.u(region, pts, self.t)

    def grad(self, region, pts):
        return self.sc.grad(region, pts, self.t)

    def jump(self, pts):
        return self.sc.jump(pts, self.t)


def ldm_case(ratio=0.1, sigma_ext=1.0, radius=0.25, field=1.0, t_c=1.0, capacitance=None, t_final=None):
    si, se = ratio * sigma_ext, sigma_ext
    if capacitance is None:
        capacitance = t_c / (radius * (1 / si + 1 / se))
    s_i, s_e = sp.nsimplify(si, rational=False), sp.nsimplify(se, rational=False)
    R, E = sp.nsimplify(radius), sp.nsimplify(field)
    beta = (s_e - s_i) / (s_e + s_i)
    r2 = X ** 2 + Y ** 2
    u0 = (E * 2 * s_e / (s_e + s_i) * X, E * (1 + beta * R ** 2 / r2) * X)
    uinf = (sp.Integer(0), E * (1 + R ** 2 / r2) * X)
    tc = capacitance * radius * (1 / si + 1 / se)
    return LdmScenario(
        sigma_int=si, sigma_ext=se, radius=radius, field=field, capacitance=capacitance,
        t_final=2 * tc if t_final is None else t_final, curve=Circle(radius),
        _u0=_RegionField(u0), _uinf=_RegionField(uinf),
        _g0=(_RegionField([sp.diff(e, X) for e in u0]), _RegionField([sp.diff(e, Y) for e in u0])),
        _ginf=(_RegionField([sp.diff(e, X) for e in uinf]), _RegionField([sp.diff(e, Y) for e in uinf])),
    )


CASES = ("square", "circle", "generic", "patch", "ldm")


def make_scenario(name, **params):
    if name == "square":
        si, se = _sigmas(params)
        return square_case(si / se, se)
    if name == "circle":
        si, se = _sigmas(params)
        return circle_case(si / se, se, params.get("radius", 0.25))
    if name == "generic":
        si, se = _sigmas(params)
        return generic_case(si / se, se)
    if name == "patch":
        si, se = _sigmas({"sigma_int": 1.0, "sigma_ext": 3.0, **params})
        return patch_case(si, se)
    if name == "ldm":
        si, se = _sigmas({"ratio": 0.1, **params})
        return ldm_case(si / se, se, params.get("radius", 0.25), params.get("field", 1.0),
                        params.get("t_c", 1.0), params.get("capacitance"), params.get("t_final"))
    raise KeyError(f"unknown case {name!r}; choose from {', '.join(CASES)}")
