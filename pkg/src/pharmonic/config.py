"""Run configuration: an INI-style text file (or JSON) that round-trips exactly."""

from __future__ import annotations

import configparser
import io
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .geometry import (
    ModelParameters,
    WarpingFunction,
    make_domain_warp,
    make_euclidean_warp,
    make_target_warp,
)
from .operators import ConvexProfile, profile_from_spec
from .profile_ode import SolverConfig

__all__ = ["RunConfig", "load_config", "parse_config", "render_config", "CANONICAL"]

_AUTO = "auto"


@dataclass(frozen=True)
class RunConfig:
    params: ModelParameters = field(default_factory=lambda: ModelParameters(2, 2.5, 3.0, 0.5, 1.0))
    solver: SolverConfig = field(default_factory=SolverConfig)
    domain_warp: str = "theorem"  # "theorem" or "flat"
    target_warp: str = "theorem"
    profile: str = "linear"  # linear | quadratic | linquad | polynomial
    coefficients: tuple = ()
    s_lo: float = 1.0
    s_hi: float | None = None  # None: up to s_max
    samples_per_decade: int = 64
    fit_window: tuple | None = None  # None: last two decades
    convexity_grid: tuple = (1e-6, 1e3, 400)  # log grid (lo, hi, count)
    out_dir: str = "out"
    format: str = "csv"

    def __post_init__(self):
        if self.domain_warp not in ("theorem", "flat") or self.target_warp not in ("theorem", "flat"):
            raise ValueError("warps must be 'theorem' or 'flat'")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.fit_window is not None:
            object.__setattr__(self, "fit_window", tuple(float(x) for x in self.fit_window))
        lo, hi, cnt = self.convexity_grid
        object.__setattr__(self, "convexity_grid", (float(lo), float(hi), int(cnt)))

    def warps(self) -> tuple[WarpingFunction, WarpingFunction]:
        g = make_euclidean_warp() if self.domain_warp == "flat" else make_domain_warp(self.params.delta)
        j = make_euclidean_warp() if self.target_warp == "flat" else make_target_warp(self.params.sigma)
        return g, j

    def convex_profile(self) -> ConvexProfile:
        return profile_from_spec(self.profile, self.coefficients)

    def scan_range(self) -> tuple[float, float]:
        return self.s_lo, self.solver.s_max if self.s_hi is None else self.s_hi

    def window(self) -> tuple[float, float]:
        if self.fit_window is not None:
            return self.fit_window
        return self.solver.s_max / 100.0, self.solver.s_max

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coefficients"] = list(self.coefficients)
        d["fit_window"] = None if self.fit_window is None else list(self.fit_window)
        d["convexity_grid"] = list(self.convexity_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        params = ModelParameters(**d.pop("params", {})) if "params" in d else ModelParameters(2, 2.5, 3.0, 0.5, 1.0)
        solver = SolverConfig(**d.pop("solver", {}))
        for key in ("coefficients", "convexity_grid"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        if d.get("fit_window") is not None:
            d["fit_window"] = tuple(d["fit_window"])
        return cls(params=params, solver=solver, **d)


CANONICAL = RunConfig()


def _fmt(x) -> str:
    if x is None:
        return _AUTO
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (tuple, list)):
        return ", ".join(_fmt(v) for v in x)
    return str(x)


def render_config(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser()
    p, s = cfg.params, cfg.solver
    cp["model"] = {
        "n": _fmt(p.n), "p": _fmt(p.p), "delta": _fmt(p.delta), "sigma": _fmt(p.sigma),
        "alpha": _fmt(p.alpha), "domain_warp": cfg.domain_warp, "target_warp": cfg.target_warp,
    }
    cp["solver"] = {f.name: _fmt(getattr(s, f.name)) for f in fields(s)}
    cp["profile"] = {
        "kind": cfg.profile,
        "coefficients": _fmt(cfg.coefficients) if cfg.coefficients else "",
        "convexity_grid": _fmt(cfg.convexity_grid),
    }
    cp["scan"] = {
        "s_lo": _fmt(cfg.s_lo), "s_hi": _fmt(cfg.s_hi),
        "samples_per_decade": _fmt(cfg.samples_per_decade),
    }
    cp["asymptotics"] = {"fit_window": _fmt(cfg.fit_window)}
    cp["output"] = {"out_dir": cfg.out_dir, "format": cfg.format}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _opt_float(text: str):
    return None if text.strip() == _AUTO else float(text)


def parse_config(text: str) -> RunConfig:
    """Parse INI text, or JSON if the text starts with ``{``."""
    if text.lstrip().startswith("{"):
        return RunConfig.from_dict(json.loads(text))
    cp = configparser.ConfigParser()
    cp.read_string(text)
    base = CANONICAL
    m = cp["model"] if cp.has_section("model") else {}
    params = ModelParameters(
        int(m.get("n", base.params.n)),
        float(m.get("p", base.params.p)),
        float(m.get("delta", base.params.delta)),
        float(m.get("sigma", base.params.sigma)),
        float(m.get("alpha", base.params.alpha)),
    )
    sv = cp["solver"] if cp.has_section("solver") else {}
    solver = SolverConfig(
        s_max=float(sv.get("s_max", base.solver.s_max)),
        rel_tol=float(sv.get("rel_tol", base.solver.rel_tol)),
        abs_tol=float(sv.get("abs_tol", base.solver.abs_tol)),
        s_start=float(sv.get("s_start", base.solver.s_start)),
        max_steps=int(sv.get("max_steps", base.solver.max_steps)),
        store_stride=int(sv.get("store_stride", base.solver.store_stride)),
        series_order=int(sv.get("series_order", base.solver.series_order)),
    )
    pr = cp["profile"] if cp.has_section("profile") else {}
    sc = cp["scan"] if cp.has_section("scan") else {}
    asy = cp["asymptotics"] if cp.has_section("asymptotics") else {}
    out = cp["output"] if cp.has_section("output") else {}
    window = asy.get("fit_window", _AUTO)
    grid = _floats(pr["convexity_grid"]) if "convexity_grid" in pr else base.convexity_grid
    return RunConfig(
        params=params,
        solver=solver,
        domain_warp=m.get("domain_warp", base.domain_warp),
        target_warp=m.get("target_warp", base.target_warp),
        profile=pr.get("kind", base.profile),
        coefficients=_floats(pr.get("coefficients", "")),
        s_lo=float(sc.get("s_lo", base.s_lo)),
        s_hi=_opt_float(sc.get("s_hi", _AUTO)),
        samples_per_decade=int(sc.get("samples_per_decade", base.samples_per_decade)),
        fit_window=None if window.strip() == _AUTO else _floats(window),
        convexity_grid=grid,
        out_dir=out.get("out_dir", base.out_dir),
        format=out.get("format", base.format),
    )


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
