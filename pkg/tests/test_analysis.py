import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ref_segment
from sddgalerkin import InitialSegment, InvalidConfigurationError, SolverConfig, make_model, simulate
from sddgalerkin.analysis import (
    absorbing_entry_time,
    envelope_fit,
    envelope_tolerance,
    equicontinuity_modulus,
    fractional_bound_check,
    lanczos_gamma,
    linf_dichotomy,
    v2_budget,
)


def heat_run(t_end=30.0, amp=1.0, mode=1, dt=1e-3, stride=10, r=0.0, qs=(2.0, math.inf)):
    a = np.zeros(8)
    a[mode - 1] = amp
    cfg = SolverConfig(dt=dt, t_end=t_end, modes=8, record_stride=stride, qs=qs)
    return simulate(InitialSegment.constant(a, r, dt), make_model("heat"), cfg)


@pytest.mark.parametrize("x", [1e-4, 0.1, 0.25, 0.5, 0.9, 1.5, 3.7, 10.0])
def test_lanczos_gamma(x):
    assert lanczos_gamma(x) == pytest.approx(math.gamma(x), rel=1e-12)


def test_envelope_synthetic():
    t = np.linspace(0, 40, 4001)
    fit = envelope_fit(t, 2 * np.exp(-0.5 * t) + 1)
    assert fit.B == pytest.approx(2, rel=0.02)
    assert fit.eta == pytest.approx(0.5, rel=0.02)
    assert fit.rho == pytest.approx(1, rel=0.02)
    assert fit.passed


def test_envelope_constant_is_degenerate():
    fit = envelope_fit(np.linspace(0, 1, 50), np.full(50, 3.0))
    assert not fit.fitted and fit.rho == 3.0 and fit.B == 0.0 and math.isnan(fit.eta)


@given(st.floats(0.1, 5), st.floats(0.05, 3), st.floats(0, 2), st.floats(0, 0.3), st.floats(0.5, 20))
def test_envelope_self_consistent(B, eta, rho, wiggle, omega):
    t = np.linspace(0, 20, 801)
    y = B * np.exp(-eta * t) * (1 + wiggle * np.sin(omega * t)) + rho
    fit = envelope_fit(t, y)
    if fit.fitted:
        assert np.all(y <= fit(t) + fit.tolerance)
        assert fit.sup_violation <= fit.tolerance


@pytest.mark.parametrize("mode,amp", [(1, 1.0), (1, 7.0), (2, 0.5)])
def test_heat_rate_single_mode(mode, amp):
    tr = heat_run(t_end=30.0 / mode ** 2, amp=amp, mode=mode)
    fit = envelope_fit(tr.times, tr.norms["l2"])
    assert fit.eta == pytest.approx(mode ** 2, rel=0.01)
    assert fit.rho <= 1e-8 * amp


def test_absorbing_entry():
    t = np.linspace(0, 10, 1001)
    assert absorbing_entry_time(t, np.full_like(t, 0.5), 1.0, 1.0) == 0.0
    y = 3 * np.exp(-t) * math.e ** 2 / 3  # equals 1 at t = 2
    assert absorbing_entry_time(t, y, 1.0, 2.0) == pytest.approx(2.0, abs=t[1] - t[0])
    osc = 1.2 + 0.5 * np.sin(3 * t)
    assert absorbing_entry_time(t, osc, 1.0, 2.0) is None
    with pytest.raises(ValueError):
        absorbing_entry_time(t, osc, 1.0, 0.0)


def test_tolerance_formula():
    assert envelope_tolerance(0) == 1e-6 and envelope_tolerance(10) == pytest.approx(1e-6 + 1e-2)


def test_fractional_heat_single_mode():
    tr = heat_run(t_end=5.0, r=0.5)
    for z in (0.6, 0.75, 0.9):
        rep = fractional_bound_check(tr, z)
        assert rep.empirical == pytest.approx(math.exp(-0.5), rel=1e-12)
        assert rep.b == 0.0 and rep.bound == pytest.approx(rep.C_zeta_r * rep.phi_l2)
        assert rep.passed and rep.slack >= 1


def test_fractional_catalog_run():
    m = make_model("cubic-sin")
    cfg = SolverConfig(dt=1e-3, t_end=3.0, modes=16)
    tr = simulate(ref_segment(16, m.r, cfg.dt), m, cfg)
    for z in (0.6, 0.75, 0.9):
        rep = fractional_bound_check(tr, z)
        assert rep.passed and rep.slack >= 1
    with pytest.raises(ValueError):
        fractional_bound_check(tr, 0.4)


def test_fractional_needs_positive_start():
    with pytest.raises(ValueError):
        fractional_bound_check(heat_run(t_end=1.0), 0.75)


def test_equicontinuity_constant_and_heat():
    m = make_model("cubic-sin", c=0.0)
    cfg = SolverConfig(dt=1e-2, t_end=2.0, modes=8)
    tr = simulate(InitialSegment.constant(np.zeros(8), m.r, cfg.dt), m, cfg)
    assert equicontinuity_modulus(tr, 0.75).L == 0.0
    tr = heat_run(t_end=5.0, dt=1e-3, stride=1)
    for z in (0.6, 0.75, 0.9):
        rep = equicontinuity_modulus(tr, z, nu_max=0.1)
        assert 0 < rep.L <= math.sqrt(0.1)


def test_equicontinuity_stable_under_halving():
    m = make_model("cubic-sin")
    Ls = []
    for dt in (2e-3, 1e-3):
        cfg = SolverConfig(dt=dt, t_end=4.0, modes=16, record_stride=int(round(2e-3 / dt)))
        tr = simulate(ref_segment(16, m.r, dt), m, cfg)
        Ls.append(equicontinuity_modulus(tr, 0.75, nu_min=2e-3).L)
    assert abs(Ls[1] / Ls[0] - 1) <= 0.1


def test_equicontinuity_empty_range():
    tr = heat_run(t_end=0.15, stride=1)
    with pytest.raises(InvalidConfigurationError):
        equicontinuity_modulus(tr, 0.75, eta_off=0.2)


def test_linf_dichotomy_shapes():
    m0, m1 = make_model("cubic-sin", r=0.0), make_model("cubic-sin")
    for m, expect_decay in ((m1, False), (m0, True)):
        cfg = SolverConfig(dt=1e-3, t_end=10.0, modes=16, qs=(math.inf,), record_stride=5)
        tr = simulate(ref_segment(16, m.r, cfg.dt).scaled(10.0), m, cfg)
        res = linf_dichotomy(tr)
        assert res.passed
        assert ("nu_star" in res.constants) == expect_decay
    with pytest.raises(InvalidConfigurationError):
        linf_dichotomy(heat_run(t_end=1.0, qs=(2.0,)))


def test_v2_budget_against_heat_constant():
    heat = heat_run(t_end=10.0)
    i_h, s_h = v2_budget(heat, 4.0)
    c_heat = i_h / s_h
    m = make_model("cubic-sin")
    cfg = SolverConfig(dt=1e-3, t_end=10.0, modes=16, record_stride=10)
    for amp in (1.0, 4.0):
        tr = simulate(ref_segment(16, m.r, cfg.dt).scaled(amp), m, cfg)
        integral, scale = v2_budget(tr, 8.0)
        assert integral / tr.times[-1] <= 10 * c_heat * scale
