"""Command-line entry point.

    pharmonic validate   [--n N --p P --delta D --sigma S --alpha A]
    pharmonic solve
    pharmonic asymptotics [--solution FILE] [--window LO HI]
    pharmonic certify     [--solution FILE]
    pharmonic sweep       --p 2.2,2.5,2.8 --delta 3,5 ...
    pharmonic plot-data   FILE --columns f,fp

Global flags (before or after the subcommand): --config PATH, --out DIR,
--format csv|json, --quiet.

Exit codes: 0 success, 3 failed hypothesis, 4 solver failure, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as pio
from .asymptotics import analyze_asymptotics, fit_decay_exponent
from .certify import analyze_terms, scan_sign
from .config import CANONICAL, RunConfig, load_config
from .geometry import ModelParameters, decay_exponent, validate_parameters
from .profile_ode import (
    ProfileIntegrationError,
    ProfileSolution,
    integrate,
    load_solution,
    monotone_quantity,
    save_solution,
)

log = logging.getLogger("pharmonic")

EXIT_OK = 0
EXIT_VALIDATION = 3
EXIT_SOLVER = 4
EXIT_IO = 5

SWEEP_COLUMNS = (
    "n", "p", "delta", "sigma", "alpha", "feasible", "failed_checks",
    "first_certified_radius", "fitted_exponent", "theory_exponent", "status",
)


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    d = argparse.SUPPRESS if suppress else None
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", metavar="PATH", default=d, help="INI or JSON run config")
    parent.add_argument("--out", metavar="DIR", default=d, help="output directory")
    parent.add_argument("--format", choices=("csv", "json"), default=d, help="table format")
    parent.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pharmonic",
        description="Rotationally symmetric p-harmonic maps and convex compositions.",
        parents=[_global_flags(False)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_global_flags(True)]

    def model_overrides(sp):
        sp.add_argument("--n", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--alpha", type=float)

    sp = sub.add_parser("validate", parents=common, help="check the parameter hypotheses")
    model_overrides(sp)

    sp = sub.add_parser("solve", parents=common, help="integrate the profile and write diagnostics")
    model_overrides(sp)
    sp.add_argument("--s-max", type=float)

    sp = sub.add_parser("asymptotics", parents=common, help="limits, decay constant and exponent fit")
    model_overrides(sp)
    sp.add_argument("--solution", metavar="FILE")
    sp.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))

    sp = sub.add_parser("certify", parents=common, help="find radii where Delta_p(H o F) < 0")
    model_overrides(sp)
    sp.add_argument("--solution", metavar="FILE")
    sp.add_argument("--profile", choices=("linear", "quadratic", "linquad"))

    sp = sub.add_parser("sweep", parents=common, help="run a grid of parameter points")
    for name in ("n", "p", "delta", "sigma", "alpha"):
        sp.add_argument(f"--{name}", metavar="LIST", help="comma-separated values")
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("plot-data", parents=common, help="two-column data for external plotting")
    sp.add_argument("solution", metavar="FILE")
    sp.add_argument("--columns", default="f,fp")
    sp.add_argument("--x", default="s")
    return parser


def _load_run_config(args) -> RunConfig:
    cfg = CANONICAL
    if getattr(args, "config", None):
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise CLIError(f"cannot read config: {exc}", EXIT_IO) from exc
    p = cfg.params
    over = {k: getattr(args, k) for k in ("n", "p", "delta", "sigma", "alpha")
            if getattr(args, k, None) is not None and not isinstance(getattr(args, k), str)}
    if over:
        cfg = replace(cfg, params=replace(p, **over))
    if getattr(args, "s_max", None) is not None:
        cfg = replace(cfg, solver=replace(cfg.solver, s_max=args.s_max))
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "format", None):
        cfg = replace(cfg, format=args.format)
    if getattr(args, "profile", None):
        cfg = replace(cfg, profile=args.profile, coefficients=())
    if getattr(args, "window", None):
        cfg = replace(cfg, fit_window=tuple(args.window))
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CLIError(f"cannot create output directory: {exc}", EXIT_IO) from exc
    return out


def _say(args, text):
    if not args.quiet:
        print(text)


def _solve(cfg: RunConfig) -> ProfileSolution:
    g, j = cfg.warps()
    flat = "flat" in (cfg.domain_warp, cfg.target_warp)
    try:
        return integrate(cfg.params, g, j, cfg.solver, check_params=not flat)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_VALIDATION) from exc


def _certified_profile(cfg: RunConfig, solution: ProfileSolution):
    lo, hi, count = cfg.convexity_grid
    return cfg.convex_profile().certify(solution.j, np.logspace(np.log10(lo), np.log10(hi), count))


def _write_table(cfg: RunConfig, stem: str, table: dict) -> Path:
    out = _out_dir(cfg)
    try:
        if cfg.format == "json":
            path = out / f"{stem}.json"
            pio.write_json(path, {k: np.asarray(v) for k, v in table.items()})
        else:
            path = out / f"{stem}.csv"
            pio.write_table_csv(path, table)
    except OSError as exc:
        raise CLIError(f"cannot write {stem}: {exc}", EXIT_IO) from exc
    return path


def cmd_validate(args) -> int:
    cfg = _load_run_config(args)
    report = validate_parameters(cfg.params)
    if args.format == "json":
        print(pio.dumps_json(report.to_dict()))
    else:
        _say(args, "validation " + ("passed" if report.ok else "FAILED"))
        _say(args, report.render())
    if getattr(args, "out", None):
        pio.write_json(_out_dir(cfg) / "validation.json", report.to_dict())
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_solve(args) -> int:
    cfg = _load_run_config(args)
    out = _out_dir(cfg)
    try:
        sol = _solve(cfg)
    except ProfileIntegrationError as exc:
        if exc.partial is not None and exc.partial.s.size > 1:
            save_solution(exc.partial, out / "solution.partial.npz")
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    h = _certified_profile(cfg, sol)
    try:
        save_solution(sol, out / "solution.npz")
    except OSError as exc:
        raise CLIError(f"cannot write solution: {exc}", EXIT_IO) from exc
    table = pio.diagnostics_table(sol, h)
    path = _write_table(cfg, "diagnostics", table)
    q = monotone_quantity(sol)
    monotone = bool(np.all(np.diff(q) >= -1e-8 * (1 + np.abs(q[:-1]))))
    _say(args, f"s_max {sol.s_max:g}: {sol.s.size} nodes, {sol.steps} steps, {sol.rejections} rejected")
    _say(args, f"c_hat estimate f(s_max) = {sol.f[-1]:.12g}")
    _say(args, f"max |residual| = {sol.max_residual:.3g}")
    _say(args, f"Q non-decreasing: {'yes' if monotone else 'NO'}  (Q(s_max) = {q[-1]:.12g})")
    _say(args, f"wrote {out / 'solution.npz'} and {path}")
    return EXIT_OK


def _solution_for(args, cfg) -> ProfileSolution:
    if getattr(args, "solution", None):
        try:
            return load_solution(args.solution)
        except (OSError, KeyError, ValueError) as exc:
            raise CLIError(f"cannot load solution: {exc}", EXIT_IO) from exc
    return _solve(cfg)


def cmd_asymptotics(args) -> int:
    cfg = _load_run_config(args)
    try:
        sol = _solution_for(args, cfg)
    except ProfileIntegrationError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    window = cfg.fit_window or (sol.s_max / 100.0, sol.s_max)
    report = analyze_asymptotics(sol, window, strict=False)
    d = report.to_dict()
    d["converged"] = bool(report.P_uncertainty <= 1e-2 * report.P
                          and report.c_hat_uncertainty <= 1e-2 * report.c_hat)
    out = _out_dir(cfg)
    pio.write_json(out / "asymptotics.json", d)
    if args.format == "json":
        print(pio.dumps_json(d))
    else:
        _say(args, report.render())
        if not d["converged"]:
            _say(args, "  ! plateau not converged over the last decade; increase s_max")
    return EXIT_OK


def cmd_certify(args) -> int:
    cfg = _load_run_config(args)
    try:
        sol = _solution_for(args, cfg)
    except ProfileIntegrationError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    h = _certified_profile(cfg, sol)
    lo, hi = cfg.scan_range()
    hi = min(hi, sol.s_max)
    cert = scan_sign(sol, h, lo, hi, cfg.samples_per_decade)
    d = cert.to_dict()
    d["convexity_grid"] = list(cfg.convexity_grid)
    try:
        w_lo, w_hi = cfg.fit_window or (sol.s_max / 100.0, sol.s_max)
        d["terms"] = analyze_terms(sol, h, (w_lo, w_hi)).to_dict()
    except ValueError as exc:
        d["terms"] = {"error": str(exc)}
    out = _out_dir(cfg)
    pio.write_json(out / "certificate.json", d)
    cols = ("s", "value", "value_decomposition", "K", "Ktilde", "A1", "A2", "A3")
    table = {c: np.array([getattr(pt, c) for pt in cert.points], dtype=float) for c in cols}
    _write_table(cfg, "certified", table)
    if args.format == "json":
        print(pio.dumps_json(d))
    else:
        _say(args, cert.render())
        _say(args, f"  convexity grid       log [{cfg.convexity_grid[0]:g}, {cfg.convexity_grid[1]:g}], "
                   f"{cfg.convexity_grid[2]} points")
    return EXIT_OK


def _parse_list(text, cast, default):
    if text is None:
        return [default]
    return [cast(x) for x in str(text).split(",") if x.strip()]


def sweep_point(args) -> dict:
    """One sweep row; top-level so worker processes can pickle it."""
    cfg, values = args
    n, p, delta, sigma, alpha = values
    row = dict(n=n, p=p, delta=delta, sigma=sigma, alpha=alpha, feasible=False, failed_checks="",
               first_certified_radius="", fitted_exponent="", theory_exponent="", status="")
    try:
        params = ModelParameters(n, p, delta, sigma, alpha)
    except ValueError as exc:
        row["status"] = f"invalid: {exc}"
        return row
    report = validate_parameters(params)
    row["feasible"] = report.ok
    row["failed_checks"] = ";".join(report.failed)
    row["theory_exponent"] = decay_exponent(params)
    if not report.ok:
        row["status"] = "infeasible"
        return row
    run = replace(cfg, params=params)
    try:
        sol = integrate(params, *run.warps(), run.solver)
        h = _certified_profile(run, sol)
        lo, hi = run.scan_range()
        cert = scan_sign(sol, h, lo, min(hi, sol.s_max), run.samples_per_decade)
        row["first_certified_radius"] = "" if cert.first_negative is None else cert.first_negative
        row["fitted_exponent"] = fit_decay_exponent(sol, run.window())[0]
        row["status"] = "ok"
    except (ProfileIntegrationError, ValueError, FloatingPointError) as exc:
        row["status"] = f"error: {exc}"
    return row


def run_sweep(cfg: RunConfig, grid: dict, workers: int = 1) -> list[dict]:
    points = [
        (n, p, d, s, a)
        for n in grid["n"] for p in grid["p"] for d in grid["delta"]
        for s in grid["sigma"] for a in grid["alpha"]
    ]
    tasks = [(cfg, v) for v in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(sweep_point, tasks))
    return [sweep_point(t) for t in tasks]


def cmd_sweep(args) -> int:
    cfg = _load_run_config(argparse.Namespace(config=args.config, out=args.out, format=args.format))
    p0 = cfg.params
    grid = {
        "n": _parse_list(args.n, int, p0.n),
        "p": _parse_list(args.p, float, p0.p),
        "delta": _parse_list(args.delta, float, p0.delta),
        "sigma": _parse_list(args.sigma, float, p0.sigma),
        "alpha": _parse_list(args.alpha, float, p0.alpha),
    }
    rows = run_sweep(cfg, grid, args.workers)
    out = _out_dir(cfg)
    if cfg.format == "json":
        pio.write_json(out / "sweep.json", rows)
    else:
        import csv

        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in row.items()})
    for row in rows:
        _say(args, f"  n={row['n']} p={row['p']:g} delta={row['delta']:g} sigma={row['sigma']:g} "
                   f"alpha={row['alpha']:g}: {row['status']}"
                   + (f", first s_k={row['first_certified_radius']:.6g}"
                      if isinstance(row["first_certified_radius"], float) else ""))
    return EXIT_OK


def cmd_plot_data(args) -> int:
    try:
        sol = load_solution(args.solution)
    except (OSError, KeyError, ValueError) as exc:
        raise CLIError(f"cannot load solution: {exc}", EXIT_IO) from exc
    cfg = _load_run_config(args)
    table = pio.diagnostics_table(sol, _certified_profile(cfg, sol))
    cols = [c.strip() for c in args.columns.split(",") if c.strip()]
    for c in [args.x, *cols]:
        if c not in table:
            raise CLIError(f"unknown column {c!r}; choose from {', '.join(pio.DIAGNOSTIC_COLUMNS)}", EXIT_IO)
    x = table[args.x]
    for c in cols:
        lines = [f"# {args.x} {c}"] + [f"{xv:.17g} {yv:.17g}" for xv, yv in zip(x, table[c])]
        text = "\n".join(lines) + "\n"
        if getattr(args, "out", None):
            (_out_dir(cfg) / f"{c}.dat").write_text(text)
        else:
            sys.stdout.write(text + "\n")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "asymptotics": cmd_asymptotics,
    "certify": cmd_certify,
    "sweep": cmd_sweep,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
