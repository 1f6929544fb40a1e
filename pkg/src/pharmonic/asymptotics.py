"""Asymptotic content of a computed profile.

Along a positive solution the profile plateaus at ``c_hat``, the monotone
quantity ``Q = g^n |dF|^(p-2) f'`` increases to a finite ``P`` and
``f'(s) ~ D s^(-delta (n - (p - 2)))`` with

    D = P C1^(-n) (C1^2 / (n j(c_hat)^2))^((p - 2) / 2),

where ``g(s) ~ C1 s^delta``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .geometry import ModelParameters, decay_exponent
from .operators import energy_density_sq
from .profile_ode import ProfileSolution, evaluate, monotone_quantity

__all__ = [
    "AsymptoticsReport",
    "NonConvergenceError",
    "InsufficientWindowError",
    "estimate_limits",
    "theoretical_D",
    "estimate_C1",
    "fit_power_law",
    "fit_decay_exponent",
    "check_energy_ratio",
    "analyze_asymptotics",
]


class NonConvergenceError(RuntimeError):
    pass


class InsufficientWindowError(ValueError):
    pass


@dataclass
class Limits:
    c_hat: float
    c_hat_uncertainty: float
    P: float
    P_uncertainty: float


def estimate_limits(solution: ProfileSolution, rel_limit: float = 1e-2,
                    strict: bool = True) -> Limits:
    """Plateau values at ``s_max``; uncertainty is the change over the last decade."""
    s_max = solution.s_max
    if s_max / 10 < solution.s[0]:
        raise InsufficientWindowError("solution must span at least one decade")
    q = monotone_quantity(solution)
    # last-decade comparison point via interpolation, Q recomputed on-shell
    st = evaluate(solution, s_max / 10)
    n, p = solution.params.n, solution.params.p
    w = energy_density_sq(st, solution.g, solution.j, n)
    q_prev = solution.g.value(st.s) ** n * w ** ((p - 2) / 2) * st.f1

    lim = Limits(
        c_hat=float(solution.f[-1]),
        c_hat_uncertainty=float(abs(solution.f[-1] - st.f)),
        P=float(q[-1]),
        P_uncertainty=float(abs(q[-1] - q_prev)),
    )
    if strict:
        if lim.c_hat_uncertainty > rel_limit * lim.c_hat:
            raise NonConvergenceError(
                f"f has not plateaued: change {lim.c_hat_uncertainty:.3g} over the last decade"
            )
        if lim.P_uncertainty > rel_limit * lim.P:
            raise NonConvergenceError(
                f"Q has not converged: relative change {lim.P_uncertainty / lim.P:.3g} "
                f"over the last decade (limit {rel_limit:g})"
            )
    return lim


def theoretical_D(P: float, c_hat: float, params: ModelParameters, j, C1: float = 1.0) -> float:
    jc = float(j.value(c_hat))
    if jc == 0.0:
        raise ValueError("j(c_hat) vanishes")
    if P <= 0 or c_hat <= 0 or C1 <= 0:
        raise ValueError("P, c_hat and C1 must be positive")
    n, p = params.n, params.p
    return P * C1 ** (-n) * (C1**2 / (n * jc**2)) ** ((p - 2.0) / 2.0)


def estimate_C1(solution: ProfileSolution) -> float:
    """``g(s_max) / s_max^delta``."""
    s = solution.s_max
    return float(solution.g.value(s) / s**solution.params.delta)


def _window_mask(s, window, min_decades=2.0, min_nodes=50):
    lo, hi = window
    if not (0 < lo < hi) or lo < s[0] * (1 - 1e-12) or hi > s[-1] * (1 + 1e-12):
        raise InsufficientWindowError(f"window {window} not inside [{s[0]:g}, {s[-1]:g}]")
    if np.log10(hi / lo) < min_decades - 1e-12:
        raise InsufficientWindowError(f"window {window} spans fewer than {min_decades} decades")
    mask = (s >= lo) & (s <= hi)
    if mask.sum() < min_nodes:
        raise InsufficientWindowError(f"window {window} holds only {mask.sum()} nodes")
    return mask


def fit_power_law(s, y):
    """OLS of ``log y`` on ``log s``; returns (slope, prefactor, max |residual|)."""
    x = np.log(np.asarray(s, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - (slope * x + intercept)
    return float(slope), float(np.exp(intercept)), float(np.max(np.abs(resid)))


def fit_decay_exponent(solution: ProfileSolution, window, min_nodes: int = 50):
    """Log-log fit of ``f'`` over the nodes inside ``window``."""
    mask = _window_mask(solution.s, window, min_nodes=min_nodes)
    return fit_power_law(solution.s[mask], solution.fp[mask])


def check_energy_ratio(solution: ProfileSolution, window=None):
    """``sup |(|dF|^2 g^2 / (n j(f)^2)) - 1|`` over the window, and its decay slope.

    The slope is ``nan`` when the deviation is identically zero or constant.
    """
    n = solution.params.n
    s = solution.s
    mask = np.ones_like(s, dtype=bool) if window is None else (s >= window[0]) & (s <= window[1])
    gv = solution.g.value(s[mask])
    jv = solution.j.value(solution.f[mask])
    dev = (solution.fp[mask] * gv) ** 2 / (n * jv**2)
    max_dev = float(np.max(np.abs(dev))) if dev.size else float("nan")
    slope = float("nan")
    if dev.size >= 2 and np.all(dev > 0) and np.ptp(np.log(dev)) > 1e-12:
        slope = fit_power_law(s[mask], dev)[0]
    return max_dev, slope


@dataclass
class AsymptoticsReport:
    c_hat: float
    c_hat_uncertainty: float
    P: float
    P_uncertainty: float
    C1: float
    D_theory: float
    exponent_theory: float
    exponent_fitted: float
    prefactor_fitted: float
    fit_residual: float
    fit_window: tuple
    exponent_rel_deviation: float
    prefactor_rel_deviation: float
    energy_ratio_deviation: float
    energy_ratio_slope: float
    s_max: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit_window"] = list(self.fit_window)
        return d

    def render(self) -> str:
        return "\n".join([
            f"  c_hat          {self.c_hat:.12g}  (+/- {self.c_hat_uncertainty:.3g})",
            f"  P              {self.P:.12g}  (+/- {self.P_uncertainty:.3g})",
            f"  C1             {self.C1:.6g}",
            f"  D (theory)     {self.D_theory:.8g}",
            f"  D (fitted)     {self.prefactor_fitted:.8g}  rel dev {self.prefactor_rel_deviation:+.3%}",
            f"  exponent       theory {self.exponent_theory:.6g}, fitted {self.exponent_fitted:.6g}"
            f"  rel dev {self.exponent_rel_deviation:+.3%}",
            f"  fit window     [{self.fit_window[0]:g}, {self.fit_window[1]:g}]"
            f"  max residual {self.fit_residual:.3g}",
            f"  energy ratio   max |ratio-1| {self.energy_ratio_deviation:.3g}",
        ])


def analyze_asymptotics(solution: ProfileSolution, window=None, C1: float | None = None,
                        strict: bool = True) -> AsymptoticsReport:
    """Full report; the default window is the last two decades below ``s_max``."""
    if window is None:
        window = (solution.s_max / 100.0, solution.s_max)
    lim = estimate_limits(solution, strict=strict)
    if C1 is None:
        C1 = 1.0 if solution.g.name.startswith("domain(") else estimate_C1(solution)
    D = theoretical_D(lim.P, lim.c_hat, solution.params, solution.j, C1)
    slope, pref, resid = fit_decay_exponent(solution, window)
    e_th = decay_exponent(solution.params)
    ratio_dev, ratio_slope = check_energy_ratio(solution, window)
    return AsymptoticsReport(
        c_hat=lim.c_hat,
        c_hat_uncertainty=lim.c_hat_uncertainty,
        P=lim.P,
        P_uncertainty=lim.P_uncertainty,
        C1=float(C1),
        D_theory=D,
        exponent_theory=e_th,
        exponent_fitted=slope,
        prefactor_fitted=pref,
        fit_residual=resid,
        fit_window=(float(window[0]), float(window[1])),
        exponent_rel_deviation=(slope - e_th) / abs(e_th) if e_th else float("nan"),
        prefactor_rel_deviation=pref / D - 1.0,
        energy_ratio_deviation=ratio_dev,
        energy_ratio_slope=ratio_slope,
        s_max=solution.s_max,
    )
