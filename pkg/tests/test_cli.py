import csv
import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pharmonic.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, SWEEP_COLUMNS, main, run_sweep
from pharmonic.config import CANONICAL, RunConfig, parse_config, render_config
from pharmonic.geometry import ModelParameters
from pharmonic.io import DIAGNOSTIC_COLUMNS, read_table_csv
from pharmonic.profile_ode import SolverConfig

HEADER = "s,f,fp,fpp,dF2,residual,Q,DeltapHF,K,Ktilde,A1,A2,A3"


def _write(tmp_path, cfg, name="run.ini"):
    path = tmp_path / name
    path.write_text(render_config(cfg))
    return str(path)


def test_validate_exit_codes(capsys):
    assert main(["validate"]) == EXIT_OK
    assert main(["validate", "--p", "2"]) == EXIT_VALIDATION
    assert "p > max{2,n}" in capsys.readouterr().out
    assert main(["validate", "--sigma", "1.5"]) == EXIT_VALIDATION
    capsys.readouterr()
    assert main(["--format", "json", "validate", "--delta", "1"]) == EXIT_VALIDATION
    report = json.loads(capsys.readouterr().out)
    assert report["checks"]["delta > 1/(p-n)"] is False


def test_solve_flat(tmp_path):
    cfg = replace(CANONICAL, domain_warp="flat", target_warp="flat",
                  solver=SolverConfig(s_max=100.0), out_dir=str(tmp_path / "out"))
    assert main(["--quiet", "solve", "--config", _write(tmp_path, cfg)]) == EXIT_OK
    table = read_table_csv(tmp_path / "out" / "diagnostics.csv")
    assert np.max(np.abs(table["f"] - table["s"])) <= 1e-9


def test_solve_canonical_and_determinism(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        assert main(["solve", "--quiet", "--out", str(out), "--s-max", "1000"]) == EXIT_OK
        outs.append((out / "diagnostics.csv").read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert text.splitlines()[0] == HEADER
    assert tuple(HEADER.split(",")) == DIAGNOSTIC_COLUMNS
    table = read_table_csv(tmp_path / "out0" / "diagnostics.csv")
    assert np.max(np.abs(table["residual"])) <= 10 * CANONICAL.solver.rel_tol
    assert all(np.all(np.isfinite(v)) for v in table.values())
    # 17 significant digits round-trip exactly
    from pharmonic.profile_ode import load_solution

    sol = load_solution(tmp_path / "out0" / "solution.npz")
    assert np.array_equal(table["f"], sol.f)


def test_solve_json_format(tmp_path):
    out = tmp_path / "o"
    assert main(["--quiet", "--format", "json", "--out", str(out), "solve", "--s-max", "100"]) == EXIT_OK
    data = json.loads((out / "diagnostics.json").read_text())
    assert set(data) == set(DIAGNOSTIC_COLUMNS)


def test_solve_inadmissible(tmp_path):
    assert main(["--quiet", "--out", str(tmp_path), "solve", "--p", "3.5"]) == EXIT_VALIDATION


def test_asymptotics_and_certify_from_file(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["--quiet", "--out", str(out), "solve"]) == EXIT_OK
    sol = str(out / "solution.npz")
    assert main(["--out", str(out), "asymptotics", "--solution", sol, "--window", "100", "10000"]) == EXIT_OK
    rep = json.loads((out / "asymptotics.json").read_text())
    assert rep["exponent_theory"] == -4.5
    assert abs(rep["exponent_rel_deviation"]) <= 0.1
    assert rep["converged"] is False
    assert main(["--out", str(out), "certify", "--solution", sol]) == EXIT_OK
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["n_certified"] > 0
    with open(out / "certified.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == cert["n_certified"]
    assert all(float(r["value"]) < 0 and float(r["A2"]) < 0 for r in rows)
    assert "convexity grid" in capsys.readouterr().out


def test_plot_data(tmp_path, capsys):
    out = tmp_path / "o"
    main(["--quiet", "--out", str(out), "solve", "--s-max", "100"])
    capsys.readouterr()
    assert main(["plot-data", str(out / "solution.npz"), "--columns", "fp,Q"]) == EXIT_OK
    text = capsys.readouterr().out
    blocks = [b for b in text.strip().split("\n\n") if b]
    assert blocks[0].startswith("# s fp") and blocks[1].startswith("# s Q")
    rows = blocks[0].splitlines()[1:]
    assert all(len(r.split()) == 2 for r in rows)
    assert main(["plot-data", str(out / "solution.npz"), "--columns", "nope"]) == EXIT_IO


def test_io_failures(tmp_path):
    assert main(["certify", "--solution", str(tmp_path / "missing.npz")]) == EXIT_IO
    assert main(["validate", "--config", str(tmp_path / "missing.ini")]) == EXIT_IO


def test_sweep(tmp_path):
    out = tmp_path / "sw"
    cfg = replace(CANONICAL, solver=SolverConfig(s_max=1e3), fit_window=(10.0, 1e3))
    args = ["--quiet", "--out", str(out), "sweep", "--config", _write(tmp_path, cfg),
            "--p", "2.5,2.8,3.5", "--delta", "3"]
    assert main(args) == EXIT_OK
    with open(out / "sweep.csv") as fh:
        reader = csv.DictReader(fh)
        assert tuple(reader.fieldnames) == SWEEP_COLUMNS
        rows = list(reader)
    assert [r["p"] for r in rows] == ["2.5", "2.7999999999999998", "3.5"]
    assert rows[0]["feasible"] == "True" and rows[0]["status"] == "ok"
    assert float(rows[0]["first_certified_radius"]) == pytest.approx(2.414418221256639)
    assert rows[2]["feasible"] == "False" and "n+1 > p" in rows[2]["failed_checks"]


def test_sweep_parallel_matches_serial():
    cfg = replace(CANONICAL, solver=SolverConfig(s_max=1e3))
    grid = {"n": [2], "p": [2.3, 2.6], "delta": [4.0], "sigma": [0.5], "alpha": [1.0]}
    assert run_sweep(cfg, grid, workers=2) == run_sweep(cfg, grid, workers=1)


def test_config_roundtrip_canonical():
    assert parse_config(render_config(CANONICAL)) == CANONICAL
    assert parse_config(json.dumps(CANONICAL.to_dict())) == CANONICAL


floats = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(
    n=st.integers(1, 6), p=floats, delta=floats, sigma=floats, alpha=floats,
    s_max=st.floats(1.0, 1e6), rtol=st.floats(1e-12, 1e-3), stride=st.integers(1, 9),
    profile=st.sampled_from(["linear", "quadratic", "linquad", "polynomial"]),
    coeffs=st.lists(st.floats(0, 10), min_size=2, max_size=4),
    window=st.one_of(st.none(), st.tuples(floats, floats)),
    s_hi=st.one_of(st.none(), floats), fmt=st.sampled_from(["csv", "json"]),
)
def test_config_roundtrip_property(n, p, delta, sigma, alpha, s_max, rtol, stride, profile,
                                   coeffs, window, s_hi, fmt):
    cfg = RunConfig(
        params=ModelParameters(n, p, delta, sigma, alpha),
        solver=SolverConfig(s_max=s_max, rel_tol=rtol, store_stride=stride),
        profile=profile,
        coefficients=tuple(coeffs) if profile == "polynomial" else (),
        fit_window=window,
        s_hi=s_hi,
        format=fmt,
    )
    assert parse_config(render_config(cfg)) == cfg
    assert parse_config(json.dumps(cfg.to_dict())) == cfg
