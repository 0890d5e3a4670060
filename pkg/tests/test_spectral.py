import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sddgalerkin import DimensionError, Domain, InvalidConfigurationError, InvalidParameterError, build_basis
from sddgalerkin.spectral import (
    apply_semigroup,
    default_delta,
    frac_norm,
    h1_norm,
    lq_norm,
    norms,
    project,
    semigroup_constant,
    synthesize,
)

coeffs16 = arrays(np.float64, 16, elements=st.floats(-10, 10))


def test_dirichlet_spectrum():
    b = build_basis(Domain(math.pi, 12), 3)
    np.testing.assert_allclose(b.eigenvalues, [1.0, 4.0, 9.0], rtol=1e-15)
    b = build_basis(Domain(1.0, 4), 1)
    assert b.mu1 == pytest.approx(math.pi ** 2, rel=1e-15)


def test_eigenvalues_increasing(pi_basis):
    assert np.all(np.diff(pi_basis.eigenvalues) > 0) and pi_basis.mu1 > 0


@pytest.mark.parametrize("modes,grid", [(4, 6), (0, 10)])
def test_basis_preconditions(modes, grid):
    with pytest.raises(InvalidConfigurationError):
        build_basis(Domain(math.pi, grid), modes)


def test_synthesize_cases(pi_basis, pi_domain):
    assert np.all(synthesize(np.zeros(16), pi_basis) == 0)
    e1 = np.eye(16)[0]
    np.testing.assert_allclose(synthesize(e1, pi_basis), math.sqrt(2 / math.pi) * np.sin(pi_domain.x), atol=1e-15)
    with pytest.raises(DimensionError):
        synthesize(np.zeros(5), pi_basis)


def test_project_cases(pi_basis, pi_domain):
    w = lambda j: math.sqrt(2 / math.pi) * np.sin(j * pi_domain.x)  # noqa: E731
    np.testing.assert_allclose(project(w(2), pi_basis), np.eye(16)[1], atol=1e-12)
    assert np.all(project(np.zeros(pi_domain.grid_points), pi_basis) == 0)
    expect = np.zeros(16)
    expect[[0, 2]] = 1.0, 2.0
    np.testing.assert_allclose(project(w(1) + 2 * w(3), pi_basis), expect, atol=1e-12)
    with pytest.raises(DimensionError):
        project(np.zeros(7), pi_basis)


@given(coeffs16)
def test_round_trip(a):
    b = build_basis(Domain(math.pi, 32), 16)
    np.testing.assert_allclose(project(synthesize(a, b), b), a, atol=1e-12 * (1 + np.abs(a).max()))


@given(coeffs16)
def test_parseval(a):
    d = Domain(math.pi, 48)
    b = build_basis(d, 16)
    assert lq_norm(synthesize(a, b), d, 2) == pytest.approx(np.sqrt(a @ a), abs=1e-10 * (1 + np.abs(a).max()))


def test_norm_examples(pi_basis, pi_domain):
    e1 = np.eye(16)[0]
    rep = norms(e1, [2, math.inf], [0.5, 1.0], pi_basis, pi_domain)
    assert rep.lq[2] == pytest.approx(1.0, abs=1e-14)
    assert rep.frac[0.5] == pytest.approx(1.0) and rep.frac[1.0] == pytest.approx(1.0)
    assert rep.h1 == pytest.approx(rep.frac[0.5], rel=1e-15)
    a = np.zeros(16)
    a[:2] = 3, 4
    assert h1_norm(a, pi_basis) == pytest.approx(math.sqrt(73), rel=1e-15)
    with pytest.raises(InvalidParameterError):
        lq_norm(synthesize(a, pi_basis), pi_domain, 1.0)
    with pytest.raises(InvalidParameterError):
        frac_norm(a, pi_basis, 1.5)


def test_linf_is_grid_max(pi_basis, pi_domain):
    a = np.zeros(16)
    a[0] = 1
    peak = math.sqrt(2 / math.pi)
    got = lq_norm(synthesize(a, pi_basis), pi_domain, math.inf)
    assert got <= peak and got == pytest.approx(peak, rel=1e-3)


@given(arrays(np.float64, 8, elements=st.floats(-5, 5)), st.floats(0.5, math.pi))
def test_frac_monotone_in_zeta_when_mu_ge_1(a, L):
    b = build_basis(Domain(L, 24), 8)
    vals = [float(frac_norm(a, b, z)) for z in np.linspace(0, 1, 11)]
    assert all(v2 >= v1 * (1 - 1e-13) for v1, v2 in zip(vals, vals[1:]))


def test_semigroup_cases(pi_basis):
    a = np.linspace(1, 2, 16)
    np.testing.assert_array_equal(apply_semigroup(a, 0.0, pi_basis), a)
    e1 = np.eye(16)[0]
    np.testing.assert_allclose(apply_semigroup(e1, 1.0, pi_basis), math.exp(-1) * e1, rtol=1e-15)
    with pytest.raises(InvalidParameterError):
        apply_semigroup(a, -0.1, pi_basis)


@given(coeffs16, st.floats(0, 3), st.floats(0, 3))
def test_semigroup_property(a, s, t):
    b = build_basis(Domain(math.pi, 48), 16)
    lhs = apply_semigroup(apply_semigroup(a, s, b), t, b)
    np.testing.assert_allclose(lhs, apply_semigroup(a, s + t, b), atol=1e-12 * (1 + np.abs(a).max()))


def test_heat_decay_single_mode(pi_basis):
    e1 = np.eye(16)[0]
    for t in (0.1, 1.0, 5.0):
        assert np.linalg.norm(apply_semigroup(e1, t, pi_basis)) == pytest.approx(math.exp(-t), rel=1e-14)


def _c_zeta_oracle(zeta, mu, delta):
    # sup_t (mu t)^zeta e^{-(mu-delta)t} is attained at t* = zeta/(mu-delta); scan a fine grid as a check
    best = 0.0
    for m in mu:
        t = np.geomspace(1e-6, 50, 20001)
        best = max(best, float(np.max((m * t) ** zeta * np.exp(-(m - delta) * t))))
    return best


@pytest.mark.parametrize("zeta", [0.25, 0.6, 0.9])
def test_semigroup_constant_against_grid_scan(pi_basis, zeta):
    delta = default_delta(pi_basis)
    assert delta == pytest.approx(0.5)
    C = semigroup_constant(zeta, pi_basis)
    assert C == pytest.approx(_c_zeta_oracle(zeta, pi_basis.eigenvalues, delta), rel=1e-6)


def test_smoothing_bound_random_samples(pi_basis):
    rng = np.random.default_rng(11)
    delta = default_delta(pi_basis)
    for _ in range(1000):
        zeta = rng.uniform(0.05, 1.0)
        a = rng.standard_normal(16) * rng.uniform(0.1, 10)
        t = 10 ** rng.uniform(-4, 1)
        lhs = frac_norm(apply_semigroup(a, t, pi_basis), pi_basis, zeta)
        rhs = semigroup_constant(zeta, pi_basis, delta) * t ** (-zeta) * math.exp(-delta * t) * np.linalg.norm(a)
        assert lhs <= rhs * (1 + 1e-12)


def test_read_only_arrays(pi_basis):
    with pytest.raises(ValueError):
        pi_basis.eigenvalues[0] = 2.0
