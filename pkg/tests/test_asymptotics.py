import numpy as np
import pytest

from pharmonic.asymptotics import (
    InsufficientWindowError,
    NonConvergenceError,
    analyze_asymptotics,
    check_energy_ratio,
    estimate_limits,
    fit_decay_exponent,
    fit_power_law,
    theoretical_D,
)
from pharmonic.geometry import ModelParameters, make_target_warp
from pharmonic.profile_ode import ProfileSolution, SolverConfig, integrate, monotone_quantity


def _synthetic(s, fp, params, g, j, f=None):
    f = np.full_like(s, 0.5) if f is None else f
    return ProfileSolution(s=s, f=f, fp=fp, fpp=np.zeros_like(s), params=params, g=g, j=j,
                           config=SolverConfig(s_max=float(s[-1])))


def test_power_law_exact(canon, warps):
    s = np.logspace(0, 4, 200)
    sol = _synthetic(s, 2.0 * s**-4.5, canon, *warps)
    slope, pref, resid = fit_decay_exponent(sol, (1.0, 1e4))
    assert slope == pytest.approx(-4.5, rel=1e-13)
    assert pref == pytest.approx(2.0, rel=1e-12)
    assert resid <= 1e-12


def test_window_errors(canon, warps):
    s = np.logspace(0, 4, 200)
    sol = _synthetic(s, s**-2.0, canon, *warps)
    with pytest.raises(InsufficientWindowError):
        fit_decay_exponent(sol, (10.0, 100.0))  # one decade
    with pytest.raises(InsufficientWindowError):
        fit_decay_exponent(sol, (1.0, 1e5))  # outside
    sparse = _synthetic(np.logspace(0, 4, 30), np.logspace(0, 4, 30) ** -2.0, canon, *warps)
    with pytest.raises(InsufficientWindowError):
        fit_decay_exponent(sparse, (1.0, 1e4))


def test_flat_slope_zero(flat_solution):
    # the exact linear solution needs very few steps
    slope, pref, _ = fit_decay_exponent(flat_solution, (1.0, 100.0), min_nodes=5)
    assert slope == pytest.approx(0.0, abs=1e-9)
    assert pref == pytest.approx(1.0, rel=1e-9)


def test_theoretical_D_cases():
    j = make_target_warp(0.5)
    params = ModelParameters(2, 2.5, 3.0, 0.5)
    c = 0.3
    jc = j.value(c)
    assert theoretical_D(0.7, c, params, j) == pytest.approx(0.7 * (2 * jc**2) ** -0.25)
    p2 = ModelParameters(2, 2.0, 3.0, 0.5)
    assert theoretical_D(0.7, c, p2, j, C1=1.7) == pytest.approx(0.7 * 1.7**-2)
    with pytest.raises(ValueError):
        theoretical_D(0.7, 0.0, params, j)


def test_energy_ratio_cases(flat_solution, canon, warps):
    dev, slope = check_energy_ratio(flat_solution, (1.0, 100.0))
    assert dev == pytest.approx(0.5, rel=1e-9)  # 1/n
    assert np.isnan(slope)
    s = np.logspace(0, 2, 60)
    dev0, _ = check_energy_ratio(_synthetic(s, np.zeros_like(s), canon, *warps))
    assert dev0 == 0.0


def test_energy_ratio_canonical(canon_solution):
    dev, slope = check_energy_ratio(canon_solution, (1e3, 1e4))
    assert dev <= 0.02
    assert slope < 0


def test_limits_canonical(canon_solution, canon_solution_1e5):
    lim = estimate_limits(canon_solution, strict=False)
    assert 0 < lim.c_hat < np.inf
    assert lim.c_hat_uncertainty <= 1e-2 * lim.c_hat
    q = monotone_quantity(canon_solution)
    assert np.all(lim.P >= q - 1e-8 * (1 + q))
    # Q still moves by ~1.9% over [1e3, 1e4]; its tail decays like s^(1 - delta (p - n))
    with pytest.raises(NonConvergenceError):
        estimate_limits(canon_solution)
    lim5 = estimate_limits(canon_solution_1e5)
    assert abs(lim5.c_hat - lim.c_hat) <= lim.c_hat_uncertainty


def test_Q_tail_rate(canon_solution_1e5):
    # relative change over successive decades shrinks by ~10^(-1/2)
    sol = canon_solution_1e5
    q = monotone_quantity(sol)
    at = lambda s: np.interp(np.log(s), np.log(sol.s), q)  # noqa: E731
    d3 = at(1e4) - at(1e3)
    d4 = at(1e5) - at(1e4)
    assert d4 / d3 == pytest.approx(10**-0.5, rel=0.05)


def test_exponent_improves_outward(canon_solution_1e5):
    sol = canon_solution_1e5
    near = fit_decay_exponent(sol, (10.0, 1e3))[0]
    far = fit_decay_exponent(sol, (1e3, 1e5))[0]
    assert abs(far + 4.5) <= abs(near + 4.5)


def test_report_canonical(canon_solution, canon_solution_1e5):
    rep = analyze_asymptotics(canon_solution, (1e2, 1e4), strict=False)
    assert abs(rep.exponent_rel_deviation) <= 0.1
    rep5 = analyze_asymptotics(canon_solution_1e5, (1e3, 1e5))
    assert abs(rep5.exponent_rel_deviation) <= 0.1
    assert abs(rep5.prefactor_rel_deviation) <= 0.1
    assert rep5.C1 == 1.0
    assert rep5.to_dict()["fit_window"] == [1e3, 1e5]
    assert "D (theory)" in rep5.render()


def test_fit_power_law_matches_numpy():
    rng = np.random.default_rng(3)
    s = np.logspace(0, 3, 80)
    y = 3.0 * s**-1.7 * np.exp(0.01 * rng.standard_normal(s.size))
    slope, pref, _ = fit_power_law(s, y)
    ref = np.polyfit(np.log(s), np.log(y), 1)
    assert slope == pytest.approx(ref[0], rel=1e-12)
    assert np.log(pref) == pytest.approx(ref[1], rel=1e-10)
