import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from oracles import cauchy_projected, normal_projected, random_spd, random_unit
from projcauchy import circular as C
from projcauchy.quadrature import integrate_circle

TWO_PI = 2 * np.pi
angles = st.floats(-np.pi + 1e-9, np.pi, allow_nan=False)
gammas = st.floats(0.0, 20.0, allow_nan=False)
rhos = st.floats(0.05, 20.0, allow_nan=False)
# the anisotropy axis needs a nonzero location
pos_gammas = st.floats(1e-3, 20.0, allow_nan=False)


# ---- parameter objects and maps


def test_params_validation():
    with pytest.raises(ValueError):
        C.GcpcParams([1.0, 0.0], 0.0)
    with pytest.raises(ValueError):
        C.WcParams(0.0, 1.0)
    with pytest.raises(ValueError):
        C.CpcParams([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])


def test_lambda_map_examples():
    assert C.lambda_from_gamma(0.0) == 0.0
    assert C.lambda_from_gamma(4 / 3) == pytest.approx(0.5, abs=1e-15)
    assert C.gamma_from_lambda(0.5) == pytest.approx(4 / 3, abs=1e-15)


@given(st.floats(0.0, 1e4, allow_nan=False))
def test_lambda_round_trip(g):
    lam = C.lambda_from_gamma(g)
    assert 0 <= lam < 1
    assert C.gamma_from_lambda(lam) == pytest.approx(g, rel=1e-10, abs=1e-12)


# ---- densities


def test_cipc_examples():
    p0 = C.CipcParams([0.0, 0.0])
    np.testing.assert_allclose(C.cipc_density(np.linspace(-3, 3, 7), p0), 1 / TWO_PI, rtol=1e-15)
    p = C.CipcParams.from_polar(0.4, 1.0)
    assert C.cipc_density(0.4, p) == pytest.approx(1 / (TWO_PI * (np.sqrt(2) - 1)), rel=1e-14)
    assert C.cipc_density(0.4, p) == pytest.approx(0.384234, abs=1e-6)
    p = C.CipcParams.from_polar(0.4, 4 / 3)
    w = C.WcParams(0.4, 0.5)
    assert C.cipc_density(0.4, p) == pytest.approx(C.wc_density(0.4, w), rel=1e-14)


def test_gcpc_examples():
    p = C.GcpcParams.from_polar(np.pi, 3.0, 0.5)
    want = 1 / (TWO_PI * np.sqrt(0.5) * (np.sqrt(10) - 3))
    assert C.gcpc_density(np.pi, p) == pytest.approx(want, rel=1e-13)


def test_gcpc_inverse_scatter():
    np.testing.assert_allclose(C.gcpc_inverse_scatter(C.GcpcParams([3.0, 10.0], 1.0)), np.eye(2), atol=1e-15)
    p = C.GcpcParams([3.0, 10.0], 0.5)
    P = C.gcpc_inverse_scatter(p)
    np.testing.assert_allclose(P @ p.mu, p.mu, atol=1e-12)
    with pytest.raises(ValueError):
        C.gcpc_inverse_scatter(C.GcpcParams([0.0, 0.0], 0.5))


@given(angles, st.floats(0.1, 20), rhos)
def test_gcpc_scatter_determinant(omega, g, rho):
    P = C.gcpc_inverse_scatter(C.GcpcParams.from_polar(omega, g, rho))
    assert np.linalg.det(np.linalg.inv(P)) == pytest.approx(rho, rel=1e-10)


def test_wc_examples():
    np.testing.assert_allclose(C.wc_density(np.linspace(-3, 3, 5), C.WcParams(1.0, 0.0)), 1 / TWO_PI)
    assert C.wc_density(0.3, C.WcParams(0.3, 0.5)) == pytest.approx(0.75 / (TWO_PI * 0.25), rel=1e-14)
    assert C.wc_density(0.3, C.WcParams(0.3, 0.5)) == pytest.approx(0.47746, abs=1e-5)


def test_cipc_equals_wc_on_grid():
    theta = np.linspace(-np.pi, np.pi, 1000)
    for g in np.linspace(0, 10, 100):
        p = C.CipcParams.from_polar(0.9, g)
        w = C.WcParams(0.9, float(C.lambda_from_gamma(g)))
        np.testing.assert_allclose(C.cipc_density(theta, p), C.wc_density(theta, w), rtol=1e-12, atol=0)


def test_pn_examples():
    np.testing.assert_allclose(C.pn_density(np.linspace(-3, 3, 5), C.PnParams([0.0, 0.0])), 1 / TWO_PI)
    want = normal_projected(np.array([1.0, 0.0]), np.array([2.0, 0.0]), np.eye(2))
    assert C.pn_density(0.0, C.PnParams([2.0, 0.0])) == pytest.approx(want, rel=1e-10)


def test_densities_match_projection_oracle(rng):
    for _ in range(20):
        y = random_unit(rng, 2)
        t = np.arctan2(y[1], y[0])
        mu = rng.standard_normal(2) * rng.uniform(0, 6)
        sig = random_spd(rng, 2)
        assert C.cpc_density(y, C.CpcParams(mu, sig)) == pytest.approx(cauchy_projected(y, mu, sig), rel=1e-8)
        assert C.cipc_density(t, C.CipcParams(mu)) == pytest.approx(cauchy_projected(y, mu, np.eye(2)), rel=1e-8)
        gp = C.GcpcParams(mu, rng.uniform(0.05, 5))
        S = np.linalg.inv(C.gcpc_inverse_scatter(gp))
        assert C.gcpc_density(t, gp) == pytest.approx(cauchy_projected(y, mu, S), rel=1e-8)
        assert C.pn_density(t, C.PnParams(mu)) == pytest.approx(normal_projected(y, mu, np.eye(2)), rel=1e-8)


def test_normalization_sweep(rng):
    for g in (0.0, 1.0, 3.0, 10.0, 20.0):
        om = rng.uniform(-np.pi, np.pi)
        rho = rng.uniform(0.05, 5)
        dens = [
            lambda t: C.cipc_density(t, C.CipcParams.from_polar(om, g)),
            lambda t: C.gcpc_density(t, C.GcpcParams.from_polar(om, g, rho)),
            lambda t: C.wc_density(t, C.WcParams(om, float(C.lambda_from_gamma(g)))),
            lambda t: C.pn_density(t, C.PnParams(g * np.array([np.cos(om), np.sin(om)]))),
        ]
        for f in dens:
            assert integrate_circle(f, center=om) == pytest.approx(1.0, abs=1e-8)
        sig = random_spd(rng, 2)
        cp = C.CpcParams(rng.standard_normal(2) * g, sig)
        val = integrate_circle(lambda t: C.cpc_density(C.angle_to_unit(t), cp))
        assert val == pytest.approx(1.0, abs=1e-8)


@given(angles, pos_gammas, rhos, angles)
@settings(max_examples=200)
def test_gcpc_forms_agree(omega, g, rho, theta):
    p = C.GcpcParams.from_polar(omega, g, rho)
    f = C.gcpc_density(theta, p)
    fv = C.gcpc_density_vector(C.angle_to_unit(theta), p)
    assert fv == pytest.approx(f, rel=1e-9)
    if np.cos(theta - omega) > 1e-3:
        assert C.gcpc_density_tan(theta, p) == pytest.approx(f, rel=1e-9)


@given(angles, gammas, angles)
def test_gcpc_rho_one_is_cipc(omega, g, theta):
    a = C.gcpc_density(theta, C.GcpcParams.from_polar(omega, g, 1.0))
    b = C.cipc_density(theta, C.CipcParams.from_polar(omega, g))
    assert a == pytest.approx(b, rel=1e-14)


@given(angles, pos_gammas, rhos, st.floats(0, np.pi))
def test_gcpc_reflective_symmetry(omega, g, rho, delta):
    p = C.GcpcParams.from_polar(omega, g, rho)
    assert C.gcpc_density(omega + delta, p) == pytest.approx(C.gcpc_density(omega - delta, p), rel=1e-12)


def test_gcpc_symmetry_example():
    p = C.GcpcParams.from_polar(0.3, 2.5, 0.2)
    assert C.gcpc_density(1.0, p) == pytest.approx(C.gcpc_density(-0.4, p), rel=1e-14)


@given(angles, gammas, rhos)
def test_gcpc_positive_everywhere(omega, g, rho):
    t = np.linspace(-np.pi, np.pi, 101)
    f = C.gcpc_density(t, C.GcpcParams.from_polar(omega, g, rho))
    assert np.all(np.isfinite(f)) and np.all(f > 0)


# ---- sampling


def _ks(sample, density):
    F = lambda t: C.circular_cdf(np.atleast_1d(t), density)
    return stats.kstest(sample, F).pvalue


def test_sample_uniform_case():
    a = C.sample_cipc(C.CipcParams([0.0, 0.0]), 10_000, 1)
    assert stats.kstest(a, stats.uniform(-np.pi, TWO_PI).cdf).pvalue > 0.01


def test_sample_cipc_ks():
    p = C.CipcParams.from_polar(1.0, 2.0)
    assert _ks(C.sample_cipc(p, 10_000, 2), lambda t: C.cipc_density(t, p)) > 0.01


def test_sample_gcpc_ks():
    p = C.GcpcParams([3.0, 10.0], 0.3)
    assert _ks(C.sample_gcpc(p, 10_000, 3), lambda t: C.gcpc_density(t, p)) > 0.01


def test_samplers_deterministic():
    p = C.GcpcParams([1.0, 2.0], 0.4)
    np.testing.assert_array_equal(C.sample_gcpc(p, 50, 9), C.sample_gcpc(p, 50, 9))
    w = C.WcParams(0.2, 0.7)
    np.testing.assert_array_equal(C.sample_wc(w, 50, 9), C.sample_wc(w, 50, 9))
    a = C.sample_pn(C.PnParams([1.0, 1.0]), 50, 9)
    assert a.shape == (50,) and np.all((a > -np.pi) & (a <= np.pi))


# ---- distribution function


def test_cdf_closed_examples():
    p = C.GcpcParams.from_polar(0.5, 1.0, 1.0)
    assert C.gcpc_cdf_closed(0.7, 0.7, p) == 0.0
    num = C.gcpc_cdf_numeric(0.1, 0.9, p)
    assert C.gcpc_cdf_closed(0.1, 0.9, p) == pytest.approx(num, abs=1e-10)
    p = C.GcpcParams.from_polar(-2.0, 3.0, 0.5)
    lo, hi = -3.0, -1.0
    closed = C.gcpc_cdf_closed(lo, hi, p)
    from projcauchy.quadrature import integrate_arc

    ref = integrate_arc(lambda t: float(C.gcpc_density(t, p)), lo, hi, points=[-2.0])
    assert closed == pytest.approx(ref, abs=1e-8)
    with pytest.raises(C.OutOfWindowError):
        C.gcpc_cdf_closed(-0.5, 2.5, p)


def test_cdf_numeric_examples():
    p = C.GcpcParams.from_polar(0.0, 2.0, 0.4)
    assert C.gcpc_cdf_numeric(-np.pi, np.pi, p) == pytest.approx(1.0, abs=1e-10)
    assert C.gcpc_cdf_numeric(-np.pi, 0.0, p) == pytest.approx(0.5, abs=1e-10)
    assert C.gcpc_cdf_numeric(0.0, np.pi, p) == pytest.approx(0.5, abs=1e-10)


def test_cdf_numeric_monotone():
    p = C.GcpcParams.from_polar(2.0, 5.0, 0.1)
    t = np.linspace(-np.pi, np.pi, 201)[1:]
    F = C.circular_cdf(t, lambda x: C.gcpc_density(x, p), breaks=(2.0, 2.0 - np.pi))
    assert np.all(np.diff(F) >= -1e-15)
    assert C.circular_cdf([-np.pi + 1e-12], lambda x: C.gcpc_density(x, p))[0] == pytest.approx(0.0, abs=1e-10)
    assert F[-1] == pytest.approx(1.0, abs=1e-10)


@given(st.floats(0.1, 10), st.floats(0.1, 5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
@settings(max_examples=30, deadline=None)
def test_cdf_closed_matches_numeric(g, rho, a, b):
    lo, hi = min(a, b), max(a, b)
    p = C.GcpcParams.from_polar(0.0, g, rho)
    assert C.gcpc_cdf_closed(lo, hi, p) == pytest.approx(C.gcpc_cdf_numeric(lo, hi, p), abs=1e-8)


# ---- modes


def _grid_count(p, n=100_000):
    t = -np.pi + TWO_PI * np.arange(n) / n
    return C.grid_mode_count(C.gcpc_density(t, p))


def test_modes_rho_one():
    p = C.GcpcParams.from_polar(1.2, 2.0, 1.0)
    r = C.gcpc_modes(p)
    assert r.kind == "unimodal" and len(r.modes) == 1
    assert r.modes[0][0] == pytest.approx(1.2, abs=1e-12)


def test_modes_example_grid():
    p = C.GcpcParams.from_polar(0.0, 3.0, 0.1)
    r = C.gcpc_modes(p)
    assert len(r.modes) == _grid_count(p)


def test_modes_random_agree_with_grid(rng):
    for _ in range(60):
        p = C.GcpcParams.from_polar(rng.uniform(-np.pi, np.pi), np.exp(rng.uniform(-3, 3)), np.exp(rng.uniform(-4, 3)))
        assert len(C.gcpc_modes(p).modes) == _grid_count(p)
