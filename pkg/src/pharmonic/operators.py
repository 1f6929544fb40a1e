"""Pointwise radial operators for rotationally symmetric maps ``F(s, theta) = (f(s), theta)``.

Every function here is vectorised: the fields of :class:`PointState` may be
scalars or numpy arrays of a common shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .geometry import ModelParameters, WarpingFunction

__all__ = [
    "PointState",
    "ConvexProfile",
    "ConvexityReport",
    "Decomposition",
    "OperatorDomainError",
    "DegenerateStateError",
    "energy_density_sq",
    "tension",
    "p_tension_residual",
    "p_tension",
    "solve_second_derivative",
    "p_laplacian_composition",
    "composition_scale",
    "decomposition",
    "hessian_convexity_check",
    "linear_profile",
    "quadratic_profile",
    "linquad_profile",
    "polynomial_profile",
    "profile_from_spec",
]


class OperatorDomainError(ValueError):
    """Raised when a state lies outside the domain of a formula."""


class DegenerateStateError(OperatorDomainError):
    """Raised when a formula's denominator vanishes at the given state."""


@dataclass(frozen=True)
class PointState:
    s: object
    f: object
    f1: object
    f2: object = 0.0


def _check_radius(s):
    if np.any(np.asarray(s) <= 0):
        raise OperatorDomainError("radius must be positive (g vanishes at the pole)")


def energy_density_sq(state: PointState, g: WarpingFunction, j: WarpingFunction, n: int):
    """``|dF|^2 = f'^2 + n j(f)^2 / g(s)^2``."""
    _check_radius(state.s)
    gv = g.value(state.s)
    jv = j.value(state.f)
    return state.f1**2 + n * (jv / gv) ** 2


def tension(state: PointState, g: WarpingFunction, j: WarpingFunction, n: int):
    """Radial coefficient of the harmonic tension field."""
    _check_radius(state.s)
    gv, g1, _ = g.evaluate(state.s)
    jv, j1, _ = j.evaluate(state.f)
    return state.f2 + n / gv**2 * (gv * g1 * state.f1 - jv * j1)


def p_tension_residual(state: PointState, g: WarpingFunction, j: WarpingFunction,
                       params: ModelParameters):
    """Radial p-tension divided by ``|dF|^(p-2)``.

    Vanishes exactly where the profile solves the p-harmonic map equation.
    """
    _check_radius(state.s)
    n, p = params.n, params.p
    s, f, f1, f2 = state.s, state.f, state.f1, state.f2
    gv, g1, _ = g.evaluate(s)
    jv, j1, _ = j.evaluate(f)
    w = f1**2 + n * (jv / gv) ** 2
    if np.any(w <= 0):
        raise DegenerateStateError("|dF| vanishes; the p-tension is undefined there")
    harmonic = f2 + n / gv**2 * (gv * g1 * f1 - jv * j1)
    correction = f1 * f2 + n * jv / gv**3 * (j1 * f1 * gv - jv * g1)
    return harmonic + (p - 2.0) / w * f1 * correction


def p_tension(state: PointState, g: WarpingFunction, j: WarpingFunction,
              params: ModelParameters):
    """Full radial p-tension, ``|dF|^(p-2)`` times the residual."""
    w = energy_density_sq(state, g, j, params.n)
    return w ** ((params.p - 2.0) / 2.0) * p_tension_residual(state, g, j, params)


def solve_second_derivative(s, f, f1, g: WarpingFunction, j: WarpingFunction,
                            params: ModelParameters, tol: float = 1e-300):
    """The unique ``f''`` making :func:`p_tension_residual` vanish.

    The residual is affine in ``f''`` with slope ``1 + (p-2) f'^2 / |dF|^2``.
    """
    n, p = params.n, params.p
    gv, g1, _ = g.evaluate(s)
    jv, j1, _ = j.evaluate(f)
    w = f1 * f1 + n * (jv / gv) ** 2
    coeff = w + (p - 2.0) * f1 * f1
    if np.any(coeff <= tol):
        raise DegenerateStateError(
            "coefficient of f'' vanishes (|dF|^2 + (p-2) f'^2 <= 0)"
        )
    rest = n / gv**2 * (gv * g1 * f1 - jv * j1) * w
    rest = rest + (p - 2.0) * f1 * n * jv / gv**3 * (j1 * f1 * gv - jv * g1)
    return -rest / coeff


@dataclass(frozen=True)
class ConvexProfile:
    """Radial function ``h`` on the target; ``certified`` is set by :meth:`certify`."""

    name: str
    _eval: Callable = field(repr=False, compare=False)
    certified: bool = False

    def evaluate(self, t):
        return self._eval(t)

    def scaled(self, lam: float) -> "ConvexProfile":
        lam = float(lam)
        base = self._eval

        def _eval(t):
            v, d1, d2 = base(t)
            return lam * v, lam * d1, lam * d2

        return ConvexProfile(f"{lam!r}*{self.name}", _eval, self.certified and lam > 0)

    def certify(self, j: WarpingFunction, grid) -> "ConvexProfile":
        report = hessian_convexity_check(self, j, grid)
        if not report.ok:
            raise ValueError(f"profile {self.name} failed convexity check: {report.violations[:3]}")
        return replace(self, certified=True)


def polynomial_profile(coeffs, name: str | None = None) -> ConvexProfile:
    """``h(t) = sum_k coeffs[k] t^k``."""
    c = np.asarray(coeffs, dtype=float)
    poly = np.polynomial.Polynomial(c)
    d1, d2 = poly.deriv(1), poly.deriv(2)
    if name is None:
        name = "poly(" + ",".join(repr(float(x)) for x in c) + ")"

    def _eval(t):
        return poly(t), d1(t), d2(t)

    return ConvexProfile(name, _eval)


def linear_profile() -> ConvexProfile:
    return polynomial_profile([0.0, 1.0], name="linear")


def quadratic_profile() -> ConvexProfile:
    return polynomial_profile([0.0, 0.0, 1.0], name="quadratic")


def linquad_profile() -> ConvexProfile:
    return polynomial_profile([0.0, 1.0, 1.0], name="linquad")


_BUILTIN = {"linear": linear_profile, "quadratic": quadratic_profile, "linquad": linquad_profile}


def profile_from_spec(kind: str, coefficients=None) -> ConvexProfile:
    if kind in _BUILTIN:
        return _BUILTIN[kind]()
    if kind == "polynomial":
        if not coefficients:
            raise ValueError("polynomial profile needs coefficients")
        return polynomial_profile(coefficients)
    raise ValueError(f"unknown convex profile {kind!r}")


@dataclass
class ConvexityReport:
    ok: bool
    convex: bool
    increasing: bool
    warp_ok: bool
    violations: list
    grid_min: float
    grid_max: float
    grid_size: int


def hessian_convexity_check(h: ConvexProfile, j: WarpingFunction, grid,
                            tol: float = 1e-12) -> ConvexityReport:
    """Grid check of ``Hess H = h'' dt^2 + j' j h' dtheta^2 >= 0``.

    With ``j, j' > 0`` this is ``h'' >= 0`` and ``h' >= 0``; certification
    additionally asks ``h' > 0`` at every (positive) grid radius.
    """
    t = np.asarray(grid, dtype=float)
    if t.size == 0 or np.any(t <= 0):
        raise ValueError("grid must be nonempty with positive radii")
    _, d1, d2 = h.evaluate(t)
    jv, j1, _ = j.evaluate(t)
    d1 = np.broadcast_to(d1, t.shape)
    d2 = np.broadcast_to(d2, t.shape)
    violations = []
    for k in np.flatnonzero(d2 < -tol):
        violations.append(("h''<0", float(t[k]), float(d2[k])))
    for k in np.flatnonzero(d1 < -tol):
        violations.append(("h'<0", float(t[k]), float(d1[k])))
    strict = d1 > 0
    for k in np.flatnonzero(~strict & (d1 >= -tol)):
        violations.append(("h'=0", float(t[k]), float(d1[k])))
    warp_ok = bool(np.all(jv > 0) and np.all(j1 > 0))
    if not warp_ok:
        violations.append(("j or j' not positive", float("nan"), float("nan")))
    convex = bool(np.all(d2 >= -tol) and np.all(d1 >= -tol))
    increasing = bool(np.all(strict))
    return ConvexityReport(
        ok=convex and increasing and warp_ok,
        convex=convex,
        increasing=increasing,
        warp_ok=warp_ok,
        violations=violations,
        grid_min=float(t.min()),
        grid_max=float(t.max()),
        grid_size=int(t.size),
    )


def p_laplacian_composition(state: PointState, h: ConvexProfile, g: WarpingFunction,
                            j: WarpingFunction, params: ModelParameters):
    """``Delta_p(H o F)`` for rotationally symmetric ``H = h(t)`` on ``M_+``.

    ``K {(p-1)[h' f'' + h'' f'^2] + n (g'/g) f' h'}`` with ``K = |h' f'|^(p-2)``.
    """
    _check_radius(state.s)
    n, p = params.n, params.p
    gv, g1, _ = g.evaluate(state.s)
    _, hd1, hd2 = h.evaluate(state.f)
    slope = hd1 * state.f1
    if np.any(slope <= 0):
        raise OperatorDomainError("state outside M_+ (h'(f) f' <= 0)")
    k = np.abs(slope) ** (p - 2.0)
    return k * ((p - 1.0) * (hd1 * state.f2 + hd2 * state.f1**2) + n * g1 / gv * state.f1 * hd1)


def composition_scale(state: PointState, h: ConvexProfile, g: WarpingFunction,
                      params: ModelParameters):
    """Sum of the absolute summands of :func:`p_laplacian_composition`.

    Rounding in either composition formula is relative to this, not to the
    (possibly cancelling) total.
    """
    n, p = params.n, params.p
    gv, g1, _ = g.evaluate(state.s)
    _, hd1, hd2 = h.evaluate(state.f)
    k = np.abs(hd1 * state.f1) ** (p - 2.0)
    return k * (
        (p - 1.0) * (np.abs(hd1 * state.f2) + np.abs(hd2) * state.f1**2)
        + np.abs(n * g1 / gv * state.f1 * hd1)
    )


@dataclass
class Decomposition:
    K: object
    Ktilde: object
    A1: object
    A2: object
    A3: object

    @property
    def total(self):
        return self.A1 + self.A2 + self.A3

    @property
    def product(self):
        return self.K * self.Ktilde * self.total


def decomposition(state: PointState, h: ConvexProfile, g: WarpingFunction,
                  j: WarpingFunction, params: ModelParameters) -> Decomposition:
    """``Delta_p(H o F) = K Ktilde (A1 + A2 + A3)``, valid on solutions of the ODE."""
    _check_radius(state.s)
    n, p = params.n, params.p
    s, f, f1, f2 = state.s, state.f, state.f1, state.f2
    gv, g1, _ = g.evaluate(s)
    jv, j1, _ = j.evaluate(f)
    _, hd1, hd2 = h.evaluate(f)
    if np.any(jv <= 0):
        raise DegenerateStateError("j(f) must be positive (f > 0)")
    if np.any(hd1 <= 0):
        raise DegenerateStateError("h'(f) must be positive")
    w = f1**2 + n * (jv / gv) ** 2
    k = np.abs(hd1 * f1) ** (p - 2.0)
    ktilde = n * jv * hd1 / (w * gv**2)
    a1 = j1 * ((3.0 - p) * f1**2 + n * (jv / gv) ** 2)
    a2 = (p - 2.0) * jv * (g1 * f1 / gv + f2)
    a3 = (p - 1.0) * f1**2 * hd2 * w * gv**2 / (n * jv * hd1)
    return Decomposition(K=k, Ktilde=ktilde, A1=a1, A2=a2, A3=a3)
