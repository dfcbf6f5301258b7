import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cauchy_projected, normal_projected, random_spd, random_unit
from projcauchy import spherical as S
from projcauchy.geometry import normalize, tangent_frame
from projcauchy.quadrature import integrate_sphere

FOUR_PI = 4 * np.pi
coord = st.floats(-6, 6, allow_nan=False)
shape = st.floats(-3, 3, allow_nan=False)


def _mu_ok(mu):
    return np.hypot(mu[1], mu[2]) > 1e-3


# ---- SPC / SIPC


def test_spc_examples(rng):
    y = random_unit(rng, 3)
    assert S.spc_density(y, S.SpcParams(np.zeros(3), np.eye(3))) == pytest.approx(1 / FOUR_PI, rel=1e-15)
    mu = np.array([0.0, 0.0, 2.0])
    assert S.spc_density(y, S.SpcParams(mu, np.eye(3))) == pytest.approx(S.sipc_density(y, S.SipcParams(mu)), rel=1e-12)
    with pytest.raises(ValueError):
        S.SpcParams(mu, -np.eye(3))


def test_spc_matches_oracle(rng):
    for _ in range(20):
        y = random_unit(rng, 3)
        mu = rng.standard_normal(3) * rng.uniform(0, 5)
        sig = random_spd(rng, 3)
        assert S.spc_density(y, S.SpcParams(mu, sig)) == pytest.approx(cauchy_projected(y, mu, sig), rel=1e-8)


def test_sipc_examples():
    y = np.array([0.0, 0.6, 0.8])
    assert S.sipc_density(y, S.SipcParams(np.zeros(3))) == 1 / FOUR_PI
    mu = np.array([1.0, 0.0, 0.0])
    assert S.sipc_density(y, S.SipcParams(mu)) == pytest.approx(np.sqrt(2) / (8 * np.pi), rel=1e-14)
    assert S.sipc_density(y, S.SipcParams(mu)) == pytest.approx(0.05627, abs=1e-5)
    mu = np.array([1.0, 2.0, 2.0])
    p = S.SipcParams(mu)
    e = normalize(mu)
    u = normalize(np.cross(e, [1.0, 0, 0]))
    v = np.cross(e, u)
    y1 = 0.6 * e + 0.8 * u
    y2 = 0.6 * e + 0.8 * (np.cos(2.0) * u + np.sin(2.0) * v)
    assert S.sipc_density(y1, p) == pytest.approx(S.sipc_density(y2, p), rel=1e-14)


# ---- SESPC scatter


def test_sespc_scatter_examples():
    mu = np.array([5.843, 3.057, 3.758])
    np.testing.assert_allclose(S.sespc_inverse_scatter(S.SespcParams(mu, (0, 0))), np.eye(3), atol=1e-15)
    P = S.sespc_inverse_scatter(S.SespcParams(mu, (0.219, -0.846)))
    assert np.linalg.det(P) == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(P @ mu, mu, atol=1e-10)
    th = S.theta_from_rho_psi(0.4, 0.3)
    sig = np.linalg.inv(S.sespc_inverse_scatter(S.SespcParams(mu, th)))
    assert np.linalg.eigvalsh(sig).min() == pytest.approx(0.4, abs=1e-10)


@given(coord, coord, coord, shape, shape)
@settings(max_examples=100)
def test_sespc_scatter_contract(a, b, c, t1, t2):
    mu = np.array([a, b, c])
    if not _mu_ok(mu) or np.linalg.norm(mu) < 1e-3:
        return
    P = S.sespc_inverse_scatter(S.SespcParams(mu, (t1, t2)))
    np.testing.assert_allclose(P @ mu, mu, atol=1e-9 * max(1, np.linalg.norm(mu)))
    T = t1 * t1 + t2 * t2
    want = np.sort([1.0, np.sqrt(T + 1) + np.sqrt(T), np.sqrt(T + 1) - np.sqrt(T)])
    np.testing.assert_allclose(np.linalg.eigvalsh(P), want, rtol=1e-9, atol=1e-9)
    assert np.linalg.det(P) == pytest.approx(1.0, rel=1e-9)


def test_rho_psi_examples():
    np.testing.assert_allclose(S.theta_from_rho_psi(1.0, 0.7), (0.0, 0.0), atol=1e-15)
    np.testing.assert_allclose(S.theta_from_rho_psi(0.5, 0.0), (0.75, 0.0), atol=1e-15)
    rho, psi = S.rho_psi_from_theta(0.0, 0.75)
    assert rho == pytest.approx(0.5, abs=1e-15)
    assert psi == pytest.approx(np.pi / 4, abs=1e-15)
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            S.theta_from_rho_psi(bad, 0.0)


@given(st.floats(1e-3, 1.0), st.floats(-10, 10))
def test_rho_psi_round_trip(rho, psi):
    t1, t2 = S.theta_from_rho_psi(rho, psi)
    r, p = S.rho_psi_from_theta(t1, t2)
    assert r == pytest.approx(rho, rel=1e-12)
    if rho < 1 - 1e-9:
        d = (p - psi) % np.pi
        assert min(d, np.pi - d) < 1e-9


# ---- SESPC density


@given(coord, coord, coord)
@settings(max_examples=50)
def test_sespc_theta_zero_is_sipc(a, b, c):
    mu = np.array([a, b, c])
    if not _mu_ok(mu):
        return
    y = normalize(np.array([0.3, -0.2, 0.9]))
    assert S.sespc_density(y, S.SespcParams(mu)) == pytest.approx(S.sipc_density(y, S.SipcParams(mu)), rel=1e-14)


def test_sespc_matches_spc_and_oracle(rng):
    for _ in range(30):
        y = random_unit(rng, 3)
        mu = rng.standard_normal(3) * rng.uniform(0.1, 6)
        p = S.SespcParams(mu, rng.uniform(-3, 3, 2))
        sig = np.linalg.inv(S.sespc_inverse_scatter(p))
        f = S.sespc_density(y, p)
        assert f == pytest.approx(S.spc_density(y, S.SpcParams(mu, sig)), rel=1e-12)
        assert f == pytest.approx(cauchy_projected(y, mu, sig), rel=1e-8)


def test_sespc_sign_symmetry_axis_aligned():
    # mu along +z gives the frame (-e1, -e2, e3); theta2 = 0 aligns the axes
    p = S.SespcParams([0.0, 0.0, 2.0], (1.3, 0.0))
    y = normalize(np.array([0.4, -0.7, 0.5]))
    vals = [S.sespc_density(y * np.array([s1, s2, 1.0]), p) for s1 in (1, -1) for s2 in (1, -1)]
    np.testing.assert_allclose(vals, vals[0], rtol=1e-14)


@given(shape, shape, st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=50)
def test_sespc_reflective_symmetry_eigenframe(t1, t2, u1, u2):
    mu = np.array([1.0, -2.0, 1.5])
    p = S.SespcParams(mu, (t1, t2))
    f = tangent_frame(mu)
    phi = 0.5 * np.arctan2(t2, t1)
    a1 = np.cos(phi) * f.xi1_tilde + np.sin(phi) * f.xi2_tilde
    a2 = -np.sin(phi) * f.xi1_tilde + np.cos(phi) * f.xi2_tilde
    vals = [S.sespc_density(normalize(s1 * u1 * a1 + s2 * u2 * a2 + 0.5 * f.xi3), p)
            for s1 in (1, -1) for s2 in (1, -1)]
    np.testing.assert_allclose(vals, vals[0], rtol=1e-11)


# ---- SC


def test_sc_examples(rng):
    mu = normalize(np.array([1.0, 2.0, -1.0]))
    y = random_unit(rng, 3)
    assert S.sc_density(y, S.ScParams(mu, 0.0)) == pytest.approx(1 / FOUR_PI, rel=1e-14)
    p = S.ScParams(mu, 0.5)
    assert integrate_sphere(lambda x: S.sc_density(x, p), pole=mu) == pytest.approx(1.0, abs=1e-6)
    ys = np.array([random_unit(rng, 3) for _ in range(200)])
    assert np.all(S.sc_density(ys, p) <= S.sc_density(mu, p))
    e = np.cross(mu, [1.0, 0, 0])
    e /= np.linalg.norm(e)
    e2 = np.cross(mu, e)
    a = S.sc_density(0.3 * mu + np.sqrt(1 - 0.09) * e, p)
    b = S.sc_density(0.3 * mu + np.sqrt(1 - 0.09) * e2, p)
    assert a == pytest.approx(b, rel=1e-14)
    with pytest.raises(ValueError):
        S.ScParams(mu, 1.0)
    with pytest.raises(ValueError):
        S.ScParams(2 * mu, 0.5)


def test_sc_printed_kernel_fails_normalization():
    mu = np.array([0.0, 0.0, 1.0])
    p = S.ScParams(mu, 0.5)
    std = integrate_sphere(lambda x: S.sc_density(x, p), pole=mu)
    assert std == pytest.approx(1.0, abs=1e-6)
    # the printed kernel has a pole on the circle y'mu = (1 + lam^2) / 2
    from projcauchy.quadrature import QuadratureError

    with pytest.raises(QuadratureError):
        integrate_sphere(lambda x: S.sc_density(x, p, form="printed"), pole=mu)
    t = np.array([0.624, 0.6249, 0.62499])
    y = np.column_stack([np.sqrt(1 - t**2), np.zeros(3), t])
    f = S.sc_density(y, p, form="printed")
    assert np.all(np.diff(f) > 0) and f[-1] > 1e6


# ---- ESAG / IAG


def test_esag_gamma_zero_is_iag(rng):
    for _ in range(10):
        mu = rng.standard_normal(3) * 3
        ys = np.array([random_unit(rng, 3) for _ in range(20)])
        a = S.esag_density(ys, S.EsagParams(mu, (0.0, 0.0)))
        b = S.iag_density(ys, S.IagParams(mu))
        np.testing.assert_allclose(a, b, rtol=1e-12)
    p = S.IagParams([1.0, 2.0, 2.0])
    assert integrate_sphere(lambda x: S.iag_density(x, p), pole=p.mu) == pytest.approx(1.0, abs=1e-6)


def test_esag_matches_gaussian_oracle(rng):
    for _ in range(30):
        y = random_unit(rng, 3)
        mu = rng.standard_normal(3) * rng.uniform(0.1, 5)
        p = S.EsagParams(mu, rng.uniform(-3, 3, 2))
        V = np.linalg.inv(S.esag_inverse_covariance(p))
        assert S.esag_density(y, p) == pytest.approx(normal_projected(y, mu, V), rel=1e-8)


@pytest.mark.parametrize("g", [0.0, 1.0, 3.0, 5.0, 10.0])
def test_sphere_normalization(g, rng):
    d = random_unit(rng, 3)
    mu = g * d
    if g == 0:
        d = None
    th = tuple(rng.uniform(-3, 3, 2))
    dens = [
        lambda x: S.sipc_density(x, S.SipcParams(mu)),
        lambda x: S.iag_density(x, S.IagParams(mu)),
    ]
    if g > 0:
        dens += [
            lambda x: S.sespc_density(x, S.SespcParams(mu, th)),
            lambda x: S.esag_density(x, S.EsagParams(mu, th)),
            lambda x: S.sc_density(x, S.ScParams(normalize(mu), min(0.95, g / 10.5))),
        ]
    for f in dens:
        assert integrate_sphere(f, pole=d) == pytest.approx(1.0, abs=1e-6)


# ---- sampling


def _test_functions(rng, k=20):
    fs = []
    for _ in range(k):
        a = rng.standard_normal(3)
        b = rng.standard_normal(3)
        fs.append(lambda y, a=a, b=b: np.exp(0.5 * (y @ a)) + (y @ b) ** 2)
    return fs


def _check_expectations(sample, density, pole, rng):
    for f in _test_functions(rng):
        v = f(sample)
        se = v.std(ddof=1) / np.sqrt(v.size)
        want = integrate_sphere(lambda x: f(x) * density(x), pole=pole)
        assert abs(v.mean() - want) < 3 * se


def test_sample_sespc_expectations(rng):
    p = S.SespcParams([1.0, 2.0, 1.5], (1.0, -0.5))
    y = S.sample_sespc(p, 20_000, 11)
    np.testing.assert_allclose(np.linalg.norm(y, axis=1), 1.0, atol=1e-12)
    _check_expectations(y, lambda x: S.sespc_density(x, p), p.mu, rng)


def test_sample_esag_expectations(rng):
    p = S.EsagParams([1.0, -1.0, 2.0], (0.8, 0.3))
    _check_expectations(S.sample_esag(p, 20_000, 12), lambda x: S.esag_density(x, p), p.mu, rng)


def test_sample_sc_expectations(rng):
    p = S.ScParams(normalize(np.array([0.2, 1.0, -0.3])), 0.6)
    _check_expectations(S.sample_sc(p, 20_000, 13), lambda x: S.sc_density(x, p), p.mu, rng)


def test_sample_sipc_expectations(rng):
    p = S.SipcParams([0.5, 0.5, -1.0])
    _check_expectations(S.sample_sipc(p, 20_000, 14), lambda x: S.sipc_density(x, p), p.mu, rng)


def test_sample_examples():
    y = S.sample_sipc(S.SipcParams(np.zeros(3)), 10_000, 1)
    assert np.linalg.norm(y.mean(axis=0)) < 0.03
    mu = 5 * normalize(np.array([1.0, 1.0, 1.0]))
    y = S.sample_esag(S.EsagParams(mu, (0, 0)), 10_000, 2)
    ang = np.degrees(np.arccos(normalize(y.mean(axis=0)) @ normalize(mu)))
    assert ang < 2.0
    p = S.SespcParams([1.0, 2.0, 3.0], (0.5, 0.5))
    np.testing.assert_array_equal(S.sample_sespc(p, 30, 5), S.sample_sespc(p, 30, 5))


def test_sc_inverse_cdf_is_monotone_and_exact():
    u = np.linspace(0, 1, 1001)
    t = S.sc_inverse_cdf(u, 0.7)
    assert t[0] == pytest.approx(-1.0, abs=1e-12) and t[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(t) > 0)


# ---- mode diagnostic


def test_sespc_mode_count():
    assert S.sespc_mode_count(S.SespcParams([1.0, 2.0, 3.0], (0.3, 0.2))) == 1
    assert S.sespc_mode_count(S.SespcParams([0.1, 0.1, 0.2], (3.0, 0.0))) == 2


# ---- Fisher information between location and shape


def _sespc_info(mu, th):
    mu, th = np.asarray(mu, dtype=float), np.asarray(th, dtype=float)
    x0 = np.r_[mu, th]
    h = 1e-5

    def scores(y):
        cols = []
        for i in range(5):
            e = np.zeros(5)
            e[i] = h
            u, d = x0 + e, x0 - e
            cols.append((S.sespc_logpdf(y, u[:3], u[3:]) - S.sespc_logpdf(y, d[:3], d[3:])) / (2 * h))
        return np.stack(cols, -1)

    info = np.empty((5, 5))
    for i in range(5):
        for j in range(i, 5):
            g = lambda y: scores(y)[..., i] * scores(y)[..., j] * np.exp(S.sespc_logpdf(y, mu, th))
            info[i, j] = info[j, i] = integrate_sphere(g, pole=normalize(mu))
    d = np.sqrt(np.diag(info))
    return info, info / np.outer(d, d)


def test_location_shape_information_vanishes_at_isotropy():
    _, r = _sespc_info([1.0, 2.0, 3.0], (0.0, 0.0))
    assert np.max(np.abs(r[:3, 3:])) < 1e-6


def test_location_shape_information_generic_value():
    # the cross block is not zero in general: the tangent frame turns with mu
    _, r = _sespc_info([1.0, 2.0, 3.0], (0.5, 0.3))
    assert np.max(np.abs(r[:3, 3:])) == pytest.approx(0.1003, abs=2e-3)
    assert np.max(np.abs(r[0, 3:])) < 1e-6
