"""Warped-product model data: parameters, warping functions and hypothesis checks.

Both manifolds are ``[0, inf) x S^n`` with metrics ``ds^2 + g(s)^2 dtheta^2``
(domain) and ``dt^2 + j(t)^2 dtheta^2`` (target).  A warping function must
vanish at the pole with unit slope and be positive away from it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ModelParameters",
    "WarpingFunction",
    "ValidationReport",
    "make_domain_warp",
    "make_target_warp",
    "make_euclidean_warp",
    "warp_from_id",
    "validate_parameters",
    "epsilon_bound",
    "a2_sign_condition",
    "decay_exponent",
]


@dataclass(frozen=True)
class ModelParameters:
    """The tuple ``(n, p, delta, sigma, alpha)``.

    Construction never checks admissibility; use :func:`validate_parameters`.
    """

    n: int
    p: float
    delta: float
    sigma: float
    alpha: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("p", "delta", "sigma", "alpha"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True)
class WarpingFunction:
    """Radius -> (value, first derivative, second derivative).

    ``evaluate`` accepts scalars or numpy arrays.
    """

    name: str
    _eval: Callable = field(repr=False, compare=False)

    def evaluate(self, r):
        return self._eval(r)

    def __call__(self, r):
        return self._eval(r)[0]

    def value(self, r):
        return self._eval(r)[0]

    def derivative(self, r):
        return self._eval(r)[1]

    def second_derivative(self, r):
        return self._eval(r)[2]


def make_domain_warp(delta: float) -> WarpingFunction:
    """``g(s) = (s + a)^delta - a^delta`` with ``a = delta^(-1/(delta-1))``.

    The shift makes ``g'(0) = delta * a^(delta-1) = 1``.  The value is
    computed as ``a^delta * expm1(delta * log1p(s/a))`` so small radii keep
    full relative precision.
    """
    delta = float(delta)
    if not delta > 1.0 or not math.isfinite(delta):
        raise ValueError(f"domain warp needs delta > 1, got {delta!r}")
    shift = delta ** (-1.0 / (delta - 1.0))
    const = shift**delta

    def _eval(s):
        s = np.asarray(s, dtype=float) if not isinstance(s, float) else s
        u = s + shift
        value = const * np.expm1(delta * np.log1p(s / shift))
        first = delta * u ** (delta - 1.0)
        second = delta * (delta - 1.0) * u ** (delta - 2.0)
        return value, first, second

    return WarpingFunction(f"domain(delta={delta!r})", _eval)


def make_target_warp(sigma: float) -> WarpingFunction:
    """``j(t) = (t + b)^sigma - b^sigma`` with ``b = sigma^(1/(1-sigma))``.

    ``j'`` is positive and decreasing, so ``sup j' = j'(0) = 1``.
    """
    sigma = float(sigma)
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"target warp needs 0 < sigma < 1, got {sigma!r}")
    shift = sigma ** (1.0 / (1.0 - sigma))
    const = shift**sigma

    def _eval(t):
        t = np.asarray(t, dtype=float) if not isinstance(t, float) else t
        u = t + shift
        value = const * np.expm1(sigma * np.log1p(t / shift))
        first = sigma * u ** (sigma - 1.0)
        second = sigma * (sigma - 1.0) * u ** (sigma - 2.0)
        return value, first, second

    return WarpingFunction(f"target(sigma={sigma!r})", _eval)


def make_euclidean_warp() -> WarpingFunction:
    """The flat warp ``r -> (r, 1, 0)``; ``f(s) = s`` is then an exact profile."""

    def _eval(r):
        r = np.asarray(r, dtype=float) if not isinstance(r, float) else r
        return r, np.ones_like(r), np.zeros_like(r)

    return WarpingFunction("flat", _eval)


_ID_RE = re.compile(r"^(domain|target)\((delta|sigma)=([^)]+)\)$")


def warp_from_id(name: str) -> WarpingFunction:
    """Rebuild a warp from its ``name`` (used when loading saved solutions)."""
    if name == "flat":
        return make_euclidean_warp()
    m = _ID_RE.match(name)
    if m is None:
        raise ValueError(f"unknown warp identifier {name!r}")
    kind, _, val = m.groups()
    return make_domain_warp(float(val)) if kind == "domain" else make_target_warp(float(val))


def decay_exponent(params: ModelParameters) -> float:
    """Exponent of the power law ``f'(s) ~ D s^e``: ``e = -delta (n - (p - 2))``."""
    return -params.delta * (params.n - (params.p - 2.0))


def epsilon_bound(params: ModelParameters) -> float:
    """``(n + 1 - p) / (n + 3 - p)``; any ``0 < eps`` below it makes A2 negative."""
    n, p = params.n, params.p
    return (n + 1.0 - p) / (n + 3.0 - p)


def a2_sign_condition(params: ModelParameters) -> bool:
    """Whether ``1 - (n - (p - 2)) < 0``, i.e. the A2 mechanism can bite.

    The decay constant ``D`` is positive for admissible runs, so the sign of
    ``D delta (1 - (n - (p-2)))`` is that of the last factor.
    """
    return 1.0 - (params.n - (params.p - 2.0)) < 0.0


@dataclass
class ValidationReport:
    params: ModelParameters
    checks: dict[str, bool]
    messages: list[str]
    epsilon_bound: float
    exponent_fprime: float
    exponent_A1: float
    exponent_A2: float
    exponent_A3: float
    C1: float = 1.0

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]

    def to_dict(self) -> dict:
        return {
            "params": {
                "n": self.params.n,
                "p": self.params.p,
                "delta": self.params.delta,
                "sigma": self.params.sigma,
                "alpha": self.params.alpha,
            },
            "ok": self.ok,
            "checks": dict(self.checks),
            "messages": list(self.messages),
            "epsilon_bound": self.epsilon_bound,
            "exponent_fprime": self.exponent_fprime,
            "exponent_A1": self.exponent_A1,
            "exponent_A2": self.exponent_A2,
            "exponent_A3": self.exponent_A3,
            "C1": self.C1,
        }

    def render(self) -> str:
        lines = []
        for name, passed in self.checks.items():
            lines.append(f"  [{'pass' if passed else 'FAIL'}] {name}")
        lines.append(f"  epsilon bound        {self.epsilon_bound:.6g}")
        lines.append(f"  f' decay exponent    {self.exponent_fprime:.6g}")
        lines.append(
            "  A1/A2/A3 exponents   "
            f"{self.exponent_A1:.6g} / {self.exponent_A2:.6g} / {self.exponent_A3:.6g}"
        )
        lines.append(f"  C1                   {self.C1:.6g}")
        lines.extend(f"  ! {m}" for m in self.messages)
        return "\n".join(lines)


# Check names double as the identifiers reported on failure.
CHECK_N = "n >= 2"
CHECK_P_LOWER = "p > max{2,n}"
CHECK_P_UPPER = "n+1 > p"
CHECK_GAP = "1/(p-n) > 1"
CHECK_DELTA = "delta > 1/(p-n)"
CHECK_SIGMA = "0 < sigma < 1"
CHECK_ALPHA = "alpha > 0"
CHECK_CL = "n*delta > p-1"
CHECK_DOM_A1 = "-2*delta < -1-delta*(n-(p-2))"
CHECK_DOM_A3 = "-2*delta*(n-(p-2)) < -1-delta*(n-(p-2))"
CHECK_A2 = "1-(n-(p-2)) < 0"


def validate_parameters(params: ModelParameters, C1: float = 1.0) -> ValidationReport:
    """Check every standing hypothesis; failures are reported, never raised."""
    n, p, delta, sigma, alpha = params.n, params.p, params.delta, params.sigma, params.alpha
    gap = p - n
    inv_gap = 1.0 / gap if gap != 0 else math.inf

    e_f = decay_exponent(params)
    e_a1 = -2.0 * delta
    e_a2 = -1.0 + e_f
    e_a3 = 2.0 * e_f

    checks = {
        CHECK_N: n >= 2,
        CHECK_P_LOWER: p > max(2.0, float(n)),
        CHECK_P_UPPER: n + 1.0 > p,
        CHECK_GAP: gap > 0 and inv_gap > 1.0,
        CHECK_DELTA: gap > 0 and delta > inv_gap,
        CHECK_SIGMA: 0.0 < sigma < 1.0,
        CHECK_ALPHA: alpha > 0.0,
        CHECK_CL: n * delta > p - 1.0,
        CHECK_DOM_A1: e_a1 < e_a2,
        CHECK_DOM_A3: e_a3 < e_a2,
        CHECK_A2: a2_sign_condition(params),
    }
    messages = []
    if not checks[CHECK_P_LOWER]:
        messages.append(f"p={p:g} must exceed max(2, n)={max(2, n):g}")
    if not checks[CHECK_P_UPPER]:
        messages.append(f"p={p:g} must be below n+1={n + 1}")
    if not checks[CHECK_GAP]:
        messages.append(f"p-n={gap:g} must lie in (0, 1)")
    if not checks[CHECK_DELTA]:
        messages.append(f"delta={delta:g} must exceed 1/(p-n)={inv_gap:g}")
    if not checks[CHECK_SIGMA]:
        messages.append(f"sigma={sigma:g} must lie in (0, 1)")
    if not checks[CHECK_ALPHA]:
        messages.append(f"alpha={alpha:g} must be positive")
    if not checks[CHECK_N]:
        messages.append(f"n={n} leaves (max(2,n), n+1) empty")
    for name in (CHECK_CL, CHECK_DOM_A1, CHECK_DOM_A3, CHECK_A2):
        if not checks[name]:
            messages.append(f"derived condition fails: {name}")

    return ValidationReport(
        params=params,
        checks=checks,
        messages=messages,
        epsilon_bound=epsilon_bound(params),
        exponent_fprime=e_f,
        exponent_A1=e_a1,
        exponent_A2=e_a2,
        exponent_A3=e_a3,
        C1=float(C1),
    )
