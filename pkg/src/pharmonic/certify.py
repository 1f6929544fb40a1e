"""Locate radii where the composition of a p-harmonic map with a convex function
fails to be p-subharmonic, and attribute the sign to the decomposition terms.

Every candidate is checked twice: by the direct composition formula and by
``K Ktilde (A1 + A2 + A3)``.  A radius is certified only if both are negative
beyond a rounding margin and agree with each other.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .asymptotics import InsufficientWindowError, estimate_limits, fit_power_law
from .geometry import ModelParameters, a2_sign_condition, decay_exponent, epsilon_bound
from .operators import (
    ConvexProfile,
    composition_scale,
    decomposition,
    p_laplacian_composition,
)
from .profile_ode import ProfileSolution, evaluate

__all__ = [
    "CertifiedPoint",
    "Certificate",
    "ConvexityNotCertifiedError",
    "RangeNotCoveredError",
    "evaluate_sign",
    "scan_sign",
    "TermFit",
    "TermDiagnostics",
    "analyze_terms",
    "epsilon_bound",
    "a2_sign_condition",
]

MARGIN_REL = 1e-12
AGREE_REL = 1e-8


class ConvexityNotCertifiedError(ValueError):
    pass


class RangeNotCoveredError(ValueError):
    pass


@dataclass
class CertifiedPoint:
    s: float
    value: float
    value_decomposition: float
    K: float
    Ktilde: float
    A1: float
    A2: float
    A3: float


@dataclass
class Certificate:
    params: ModelParameters
    profile: str
    points: list
    s_lo: float
    s_hi: float
    samples_per_decade: int
    n_samples: int
    first_negative: float | None
    most_negative_value: float | None
    most_negative_radius: float | None
    negative_fraction: float
    sign_changes: list = field(default_factory=list)

    @property
    def radii(self) -> np.ndarray:
        return np.array([pt.s for pt in self.points])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = asdict(self.params)
        d["n_certified"] = len(self.points)
        return d

    def render(self) -> str:
        lines = [
            f"  profile              {self.profile}",
            f"  scan                 [{self.s_lo:g}, {self.s_hi:g}], "
            f"{self.samples_per_decade}/decade, {self.n_samples} samples",
            f"  certified radii      {len(self.points)}",
            f"  negative fraction    {self.negative_fraction:.4f}",
        ]
        if self.points:
            lines.append(f"  first certified s    {self.first_negative:.12g}")
            lines.append(
                f"  most negative        {self.most_negative_value:.6g} at s={self.most_negative_radius:.6g}"
            )
        for lo, hi in self.sign_changes:
            lines.append(f"  sign change in       [{lo:.8g}, {hi:.8g}]")
        return "\n".join(lines)


def evaluate_sign(solution: ProfileSolution, h: ConvexProfile, radii):
    """Both composition formulas, the rounding scale and the decomposition at ``radii``."""
    st = evaluate(solution, np.asarray(radii, dtype=float))
    g, j, params = solution.g, solution.j, solution.params
    direct = p_laplacian_composition(st, h, g, j, params)
    dec = decomposition(st, h, g, j, params)
    scale = composition_scale(st, h, g, params)
    return st, np.asarray(direct), dec, np.asarray(scale)


def _log_grid(lo, hi, per_decade):
    count = max(2, int(np.ceil(np.log10(hi / lo) * per_decade)) + 1)
    return np.logspace(np.log10(lo), np.log10(hi), count)


def scan_sign(solution: ProfileSolution, h: ConvexProfile, s_lo: float, s_hi: float,
              samples_per_decade: int = 64, refine: int = 8) -> Certificate:
    """Scan ``Delta_p(H o F)`` on a log-uniform grid over ``[s_lo, s_hi]``.

    Decades holding a certified point are resampled ``refine`` times more
    densely so that sign changes are bracketed tightly.
    """
    if not h.certified:
        raise ConvexityNotCertifiedError(f"profile {h.name} has not been certified convex")
    if s_lo <= 0 or s_lo < solution.s[0] or s_hi > solution.s_max or s_lo >= s_hi:
        raise RangeNotCoveredError(
            f"scan range [{s_lo:g}, {s_hi:g}] not inside [{solution.s[0]:g}, {solution.s_max:g}]"
        )

    grid = _log_grid(s_lo, s_hi, samples_per_decade)
    n_samples = grid.size

    def certify(radii):
        _, direct, dec, scale = evaluate_sign(solution, h, radii)
        prod = np.asarray(dec.product)
        margin = MARGIN_REL * scale
        ok = (direct < -margin) & (prod < -margin) & (np.abs(direct - prod) <= AGREE_REL * scale)
        return direct, dec, ok

    direct, _, ok = certify(grid)
    negative_fraction = float(np.mean(direct < 0))

    if refine > 1 and ok.any():
        extra = []
        for d in np.unique(np.floor(np.log10(grid[ok]))):
            lo, hi = max(s_lo, 10.0**d), min(s_hi, 10.0 ** (d + 1))
            extra.append(_log_grid(lo, hi, samples_per_decade * refine))
        grid = np.unique(np.concatenate([grid, *extra]))
        direct, dec, ok = certify(grid)
    else:
        direct, dec, ok = certify(grid)

    points = [
        CertifiedPoint(
            s=float(grid[k]),
            value=float(direct[k]),
            value_decomposition=float(np.asarray(dec.product)[k]),
            K=float(np.asarray(dec.K)[k]),
            Ktilde=float(np.asarray(dec.Ktilde)[k]),
            A1=float(np.asarray(dec.A1)[k]),
            A2=float(np.asarray(dec.A2)[k]),
            A3=float(np.asarray(np.broadcast_to(dec.A3, grid.shape))[k]),
        )
        for k in np.flatnonzero(ok)
    ]
    neg = direct < 0
    flips = np.flatnonzero(neg[1:] != neg[:-1])
    sign_changes = [(float(grid[k]), float(grid[k + 1])) for k in flips]

    first = most_val = most_rad = None
    if points:
        first = points[0].s
        worst = min(points, key=lambda pt: pt.value)
        most_val, most_rad = worst.value, worst.s
    return Certificate(
        params=solution.params,
        profile=h.name,
        points=points,
        s_lo=float(s_lo),
        s_hi=float(s_hi),
        samples_per_decade=int(samples_per_decade),
        n_samples=int(n_samples),
        first_negative=first,
        most_negative_value=most_val,
        most_negative_radius=most_rad,
        negative_fraction=negative_fraction,
        sign_changes=sign_changes,
    )


@dataclass
class TermFit:
    slope: float
    prefactor: float
    residual: float
    theory_slope: float

    @property
    def rel_deviation(self) -> float:
        return (self.slope - self.theory_slope) / abs(self.theory_slope)


@dataclass
class TermDiagnostics:
    window: tuple
    fits: dict
    A1_prefactor_theory: float
    A2_sign_constant: bool
    A2_dominates: bool
    c_hat: float

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "fits": {
                k: (None if v is None else {**asdict(v), "rel_deviation": v.rel_deviation})
                for k, v in self.fits.items()
            },
            "A1_prefactor_theory": self.A1_prefactor_theory,
            "A2_sign_constant": self.A2_sign_constant,
            "A2_dominates": self.A2_dominates,
            "c_hat": self.c_hat,
        }


def analyze_terms(solution: ProfileSolution, h: ConvexProfile, window, C1: float = 1.0,
                  min_nodes: int = 50) -> TermDiagnostics:
    """Log-log decay fits of A1, |A2|, A3 and ``g' f' / g`` over ``window``.

    A term that vanishes identically (A3 for linear ``h``) gets ``None``.
    """
    lo, hi = window
    if lo <= 0 or hi / lo < 100 * (1 - 1e-12) or lo < solution.s[0] or hi > solution.s_max:
        raise InsufficientWindowError(f"window {window} must span two decades inside the solution")
    s = solution.s
    mask = (s >= lo) & (s <= hi)
    if mask.sum() < min_nodes:
        raise InsufficientWindowError(f"window {window} holds only {mask.sum()} nodes")
    st = solution.states()
    params = solution.params
    n, p, delta = params.n, params.p, params.delta
    e_f = decay_exponent(params)

    sub = type(st)(st.s[mask], st.f[mask], st.f1[mask], st.f2[mask])
    dec = decomposition(sub, h, solution.g, solution.j, params)
    gv, g1, _ = solution.g.evaluate(sub.s)
    a3 = np.broadcast_to(dec.A3, sub.s.shape)
    series = {
        "A1": (np.asarray(dec.A1), -2.0 * delta),
        "A2": (np.abs(dec.A2), -1.0 + e_f),
        "A3": (a3, 2.0 * e_f),
        "gfp_over_g": (g1 * sub.f1 / gv, -1.0 + e_f),
    }
    fits = {}
    for name, (y, theory) in series.items():
        if np.all(y > 0):
            slope, pref, resid = fit_power_law(sub.s, y)
            fits[name] = TermFit(slope, pref, resid, theory)
        else:
            fits[name] = None

    c_hat = estimate_limits(solution, strict=False).c_hat
    jv, j1, _ = solution.j.evaluate(c_hat)
    a1_pref = float(n * j1 * jv**2 / C1**2)
    a2 = np.asarray(dec.A2)
    return TermDiagnostics(
        window=(float(lo), float(hi)),
        fits=fits,
        A1_prefactor_theory=a1_pref,
        A2_sign_constant=bool(np.all(a2 < 0) or np.all(a2 > 0)),
        A2_dominates=bool(a2[-1] < 0 and abs(a2[-1]) > np.asarray(dec.A1)[-1] + a3[-1]),
        c_hat=float(c_hat),
    )
