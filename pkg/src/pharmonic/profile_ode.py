"""Radial profile ODE: the singular initial value problem ``f(0) = 0, f'(0) = alpha``.

The second-order equation is integrated as the first-order system
``(f, f')' = (f', f'')`` with ``f''`` resolved algebraically from the
p-harmonic map equation.  Integration starts at a small radius ``s_start``
with first-order Taylor data, since the coefficients blow up at the pole.

Stepping uses the Dormand-Prince 5(4) embedded pair with a PI step-size
controller.  ``f'`` decays like a power of ``s`` over many decades, so its
error scale is purely relative; ``f`` uses ``max(abs_tol, rel_tol |f|)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ModelParameters, WarpingFunction, validate_parameters, warp_from_id
from .operators import PointState, energy_density_sq, p_tension_residual, solve_second_derivative

__all__ = [
    "SolverConfig",
    "ProfileSolution",
    "ProfileIntegrationError",
    "series_start",
    "integrate",
    "evaluate",
    "monotone_quantity",
    "check_start",
    "save_solution",
    "load_solution",
]

log = logging.getLogger(__name__)


class ProfileIntegrationError(RuntimeError):
    """Integration aborted; ``radius`` is where it stopped (if known)."""

    def __init__(self, message, radius=None, partial=None):
        super().__init__(message)
        self.radius = radius
        self.partial = partial


@dataclass(frozen=True)
class SolverConfig:
    s_max: float = 1.0e4
    rel_tol: float = 1.0e-9
    abs_tol: float = 1.0e-12
    s_start: float = 1.0e-6
    max_steps: int = 200_000
    store_stride: int = 1
    series_order: int = 2

    def __post_init__(self):
        if not 0.0 < self.s_start < 1e-2:
            raise ValueError("s_start must lie in (0, 1e-2)")
        if not (0.0 < self.rel_tol < 1e-2 and 0.0 < self.abs_tol < 1e-2):
            raise ValueError("tolerances must lie in (0, 1e-2)")
        if not self.s_max > self.s_start:
            raise ValueError("s_max must exceed s_start")
        if self.series_order not in (1, 2):
            raise ValueError("series_order must be 1 or 2")
        if self.max_steps < 1 or self.store_stride < 1:
            raise ValueError("max_steps and store_stride must be positive")


@dataclass
class ProfileSolution:
    s: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    params: ModelParameters
    g: WarpingFunction
    j: WarpingFunction
    config: SolverConfig
    steps: int = 0
    rejections: int = 0
    max_residual: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    def states(self) -> PointState:
        return PointState(self.s, self.f, self.fp, self.fpp)


def series_start(params: ModelParameters, g: WarpingFunction, j: WarpingFunction,
                 s_start: float, order: int = 2) -> tuple[float, float]:
    """Taylor data ``(f, f')`` at ``s_start`` from ``f(0) = 0, f'(0) = alpha``.

    ``order=1`` gives ``(alpha s, alpha)``.  ``order=2`` adds the quadratic
    term ``alpha C s^2`` forced by the equation when ``g''(0)`` or ``j''(0)``
    is nonzero; with ``G = g''(0)/2`` and ``J = j''(0)/2``,

        C = -n (G - J alpha) (3 (n+1) - (p-2)) / ((n+2) (n+p-1)).

    Dropping it leaves an O(s_start) error in ``f'`` that excites the
    decaying ``s^(-n)`` mode near the pole.
    """
    alpha = params.alpha
    if order == 1:
        return alpha * s_start, alpha
    if order != 2:
        raise ValueError("series order must be 1 or 2")
    n, p = params.n, params.p
    big_g = 0.5 * float(g.second_derivative(0.0))
    big_j = 0.5 * float(j.second_derivative(0.0))
    c = -n * (big_g - big_j * alpha) * (3.0 * (n + 1) - (p - 2.0)) / ((n + 2.0) * (n + p - 1.0))
    return alpha * s_start * (1.0 + c * s_start), alpha * (1.0 + 2.0 * c * s_start)


# Dormand-Prince 5(4) tableau and the continuous extension of Shampine.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6] + (0.0,)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.8
_MIN_FACTOR = 0.2
_MAX_FACTOR = 2.0
_BETA = 0.08  # PI controller memory term
_ORDER = 5


def _dense(y0f, y0p, h, kf, kp, theta):
    """Dormand-Prince continuous extension at ``s0 + theta h``."""
    powers = np.array([theta, theta**2, theta**3, theta**4])
    w = _P @ powers
    return y0f + h * float(np.dot(kf, w)), y0p + h * float(np.dot(kp, w))


def _hermite(h, y0, d0, y1, d1):
    """Cubic Hermite value at the interval midpoint."""
    return 0.5 * (y0 + y1) + 0.125 * h * (d0 - d1)


def integrate(params: ModelParameters, g: WarpingFunction, j: WarpingFunction,
              config: SolverConfig | None = None, *, check_params: bool = True) -> ProfileSolution:
    """Integrate the profile from ``s_start`` to ``s_max``.

    Each accepted step also checks that cubic Hermite interpolation (of
    ``f`` from ``f, f'`` and of ``f'`` from ``f', f''``) reproduces the
    pair's continuous extension at the midpoint within ``10 rel_tol``, so the
    stored nodes support :func:`evaluate` at that accuracy.
    """
    config = config or SolverConfig()
    if check_params:
        report = validate_parameters(params)
        if not report.ok:
            raise ValueError("inadmissible parameters: " + "; ".join(report.failed))

    rtol, atol = config.rel_tol, config.abs_tol

    def accel(s, f, fp):
        return float(solve_second_derivative(s, f, fp, g, j, params))

    s = config.s_start
    f, fp = series_start(params, g, j, s, config.series_order)
    fpp = accel(s, f, fp)

    out_s, out_f, out_fp, out_fpp = [s], [f], [fp], [fpp]
    h = 0.01 * s
    err_prev = 1e-4
    steps = rejections = 0
    counter = 0
    kf = [0.0] * 7
    kp = [0.0] * 7

    def fail(msg, radius):
        partial = _make_solution(out_s, out_f, out_fp, out_fpp, params, g, j, config,
                                 steps, rejections)
        raise ProfileIntegrationError(f"{msg} at s={radius:.6g}", radius=radius, partial=partial)

    while s < config.s_max:
        if steps >= config.max_steps:
            fail("step budget exhausted", s)
        if s + h > config.s_max:
            h = config.s_max - s
        kf[0], kp[0] = fp, fpp
        try:
            for i in range(1, 7):
                a = _A[i]
                yf = f + h * sum(a[m] * kf[m] for m in range(i))
                yp = fp + h * sum(a[m] * kp[m] for m in range(i))
                kf[i] = yp
                kp[i] = accel(s + _C[i] * h, yf, yp)
        except (ValueError, ZeroDivisionError, FloatingPointError) as exc:
            fail(f"right-hand side failed ({exc})", s)
        f_new, fp_new = yf, yp  # stage 7 is evaluated at the 5th-order solution (FSAL)
        fpp_new = kp[6]
        if not (math.isfinite(f_new) and math.isfinite(fp_new) and math.isfinite(fpp_new)):
            fail("non-finite state", s)

        ef = h * sum(_E[m] * kf[m] for m in range(7))
        ep = h * sum(_E[m] * kp[m] for m in range(7))
        sc_f = max(atol, rtol * max(abs(f), abs(f_new)))
        sc_p = rtol * max(abs(fp), abs(fp_new)) + 1e-300
        err = math.hypot(ef / sc_f, ep / sc_p) / math.sqrt(2.0)

        # midpoint interpolation check against the continuous extension
        if err <= 1.0:
            mf, mp = _dense(f, fp, h, kf, kp, 0.5)
            hf = _hermite(h, f, fp, f_new, fp_new)
            hp = _hermite(h, fp, fpp, fp_new, fpp_new)
            ierr = max(abs(hf - mf) / (10.0 * sc_f), abs(hp - mp) / (10.0 * sc_p))
            if ierr > 1.0:
                err = max(err, ierr ** (_ORDER / 4.0) * 1.0001)

        steps += 1
        if err <= 1.0:
            s_new = s + h
            if s_new >= config.s_max * (1 - 1e-15):
                s_new = config.s_max
            if fp_new <= 0.0:
                fail("f' lost positivity (monotonicity violation)", s_new)
            s, f, fp, fpp = s_new, f_new, fp_new, fpp_new
            counter += 1
            if counter % config.store_stride == 0 or s >= config.s_max:
                out_s.append(s)
                out_f.append(f)
                out_fp.append(fp)
                out_fpp.append(fpp)
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** (-0.7 / _ORDER) * err_prev ** (_BETA)
                factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            err_prev = max(err, 1e-4)
            h *= factor
        else:
            rejections += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** (-1.0 / _ORDER))
            if h < 1e-15 * s:
                fail("step size underflow", s)

    sol = _make_solution(out_s, out_f, out_fp, out_fpp, params, g, j, config, steps, rejections)
    log.debug("integrated to s=%g in %d steps (%d rejected), max residual %.3g",
              sol.s_max, steps, rejections, sol.max_residual)
    return sol


def _make_solution(s, f, fp, fpp, params, g, j, config, steps, rejections):
    s = np.array(s)
    f = np.array(f)
    fp = np.array(fp)
    fpp = np.array(fpp)
    res = p_tension_residual(PointState(s, f, fp, fpp), g, j, params)
    return ProfileSolution(
        s=s, f=f, fp=fp, fpp=fpp, params=params, g=g, j=j, config=config,
        steps=steps, rejections=rejections,
        max_residual=float(np.max(np.abs(res))) if res.size else 0.0,
    )


def evaluate(solution: ProfileSolution, s) -> PointState:
    """On-shell state at radius ``s`` (scalar or array).

    ``f`` and ``f'`` are cubic Hermite interpolants; ``f''`` is recomputed
    from the equation at the interpolated state.
    """
    x = np.asarray(s, dtype=float)
    nodes = solution.s
    if np.any(x < nodes[0]) or np.any(x > nodes[-1]):
        raise ValueError(f"radius outside [{nodes[0]:g}, {nodes[-1]:g}]")
    k = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, len(nodes) - 2)
    s0, s1 = nodes[k], nodes[k + 1]
    h = s1 - s0
    t = (x - s0) / h
    h00 = (1 + 2 * t) * (1 - t) ** 2
    h10 = t * (1 - t) ** 2
    h01 = t * t * (3 - 2 * t)
    h11 = t * t * (t - 1)
    f = h00 * solution.f[k] + h10 * h * solution.fp[k] + h01 * solution.f[k + 1] + h11 * h * solution.fp[k + 1]
    fp = h00 * solution.fp[k] + h10 * h * solution.fpp[k] + h01 * solution.fp[k + 1] + h11 * h * solution.fpp[k + 1]
    # exact node hits return stored values
    at0, at1 = t == 0.0, t == 1.0
    f = np.where(at0, solution.f[k], np.where(at1, solution.f[k + 1], f))
    fp = np.where(at0, solution.fp[k], np.where(at1, solution.fp[k + 1], fp))
    fpp = solve_second_derivative(x, f, fp, solution.g, solution.j, solution.params)
    if x.ndim == 0:
        return PointState(float(x), float(f), float(fp), float(fpp))
    return PointState(x, f, fp, np.asarray(fpp))


def monotone_quantity(solution: ProfileSolution) -> np.ndarray:
    """``Q = g^n |dF|^(p-2) f'`` at every node; non-decreasing along solutions."""
    n, p = solution.params.n, solution.params.p
    w = energy_density_sq(solution.states(), solution.g, solution.j, n)
    return solution.g.value(solution.s) ** n * w ** ((p - 2.0) / 2.0) * solution.fp


def check_start(params: ModelParameters, g: WarpingFunction, j: WarpingFunction,
                config: SolverConfig | None = None, at: float = 1.0, **kw) -> float:
    """``|f(at)|`` difference between starts at ``s_start`` and ``s_start / 2``."""
    from dataclasses import replace

    config = config or SolverConfig()
    cfg = replace(config, s_max=at)
    a = integrate(params, g, j, cfg, **kw)
    b = integrate(params, g, j, replace(cfg, s_start=config.s_start / 2), **kw)
    return abs(a.f[-1] - b.f[-1])


def save_solution(solution: ProfileSolution, path) -> None:
    """Binary dump (``.npz``) with enough metadata to rebuild the warps."""
    p = solution.params
    c = solution.config
    np.savez(
        path,
        s=solution.s, f=solution.f, fp=solution.fp, fpp=solution.fpp,
        params=np.array([p.n, p.p, p.delta, p.sigma, p.alpha]),
        config=np.array([c.s_max, c.rel_tol, c.abs_tol, c.s_start, c.max_steps, c.store_stride,
                         c.series_order]),
        warps=np.array([solution.g.name, solution.j.name]),
        counts=np.array([solution.steps, solution.rejections]),
    )


def load_solution(path) -> ProfileSolution:
    with np.load(path, allow_pickle=False) as data:
        n, pp, delta, sigma, alpha = data["params"]
        s_max, rtol, atol, s_start, max_steps, stride, order = data["config"]
        gname, jname = (str(x) for x in data["warps"])
        steps, rejections = (int(x) for x in data["counts"])
        params = ModelParameters(int(n), pp, delta, sigma, alpha)
        config = SolverConfig(float(s_max), float(rtol), float(atol), float(s_start),
                              int(max_steps), int(stride), int(order))
        return _make_solution(data["s"], data["f"], data["fp"], data["fpp"], params,
                              warp_from_id(gname), warp_from_id(jname), config, steps, rejections)
