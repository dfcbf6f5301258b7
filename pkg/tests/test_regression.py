import numpy as np
import pytest

from projcauchy import circular as C
from projcauchy.estimation import OptimizerConfig, fit_cipc, fit_pn, fit_sespc, fit_sipc, numeric_gradient
from projcauchy.geometry import angle_to_unit
from projcauchy.regression import (
    RankDeficientError,
    cipc_reg_fit,
    circular_correlation,
    circular_reg_loglik,
    design_matrix,
    gcpc_reg_fit,
    regression_standard_errors,
    sphere_reg_fit,
    sphere_reg_loglik,
    spml_fit,
)
from projcauchy.simstudy import TABLE2_B, TABLE5_B, generate, table_spec

CFG = OptimizerConfig(restarts=5)
T2 = table_spec(2, B=1)
T5 = table_spec(5, B=1)


def _spml_data(B, n, rng):
    X = design_matrix(rng.standard_normal(n))
    M = X @ B
    return np.arctan2(*(M + rng.standard_normal((n, 2))).T[::-1]), X


# ---- SPML


def test_spml_intercept_only_equals_pn(rng):
    y = C.sample_pn(C.PnParams([1.0, 0.5]), 300, rng)
    r = spml_fit(y, design_matrix(n=300))
    p = fit_pn(y)
    assert np.allclose(r.coefficients[0], p.estimates, atol=1e-5)
    assert r.loglik == pytest.approx(p.loglik, abs=1e-7)


def test_spml_recovers_coefficients(rng):
    B = np.array([[1.0, -0.5], [0.7, 0.4]])
    y, X = _spml_data(B, 2000, rng)
    r = spml_fit(y, X)
    assert np.linalg.norm(r.coefficients - B) < 0.3
    assert r.loglik >= circular_reg_loglik("spml", np.zeros_like(B), y, X)


# ---- CIPC regression


def test_cipc_reg_intercept_only_equals_fit_cipc(rng):
    y = C.sample_cipc(C.CipcParams([1.5, -2.0]), 400, rng)
    r = cipc_reg_fit(y, design_matrix(n=400))
    c = fit_cipc(y)
    assert np.allclose(r.coefficients[0], c.estimates, atol=1e-6)


def test_cipc_reg_gradient_vanishes(rng):
    y, X = generate(T2, 1.0, 500, rng)
    r = cipc_reg_fit(y, X)
    g = numeric_gradient(lambda b: circular_reg_loglik("cipc", b.reshape(2, 2), y, X),
                         r.coefficients.ravel())
    assert np.max(np.abs(g)) < 1e-6


def test_cipc_reg_frobenius_error_table2_scale(rng):
    errs = []
    for _ in range(30):
        y, X = generate(T2, 1.0, 1000, rng)
        errs.append(np.linalg.norm(cipc_reg_fit(y, X).coefficients - np.array(TABLE2_B)))
    assert 0.5 * 0.190 <= np.mean(errs) <= 1.5 * 0.190


# ---- GCPC regression


def test_gcpc_reg_on_rho_one_data(rng):
    close = 0
    reps = 20
    for _ in range(reps):
        y, X = generate(T2, 1.0, 300, rng)
        g = gcpc_reg_fit(y, X, CFG)
        c = cipc_reg_fit(y, X)
        assert g.loglik >= c.loglik - 1e-8
        close += (g.loglik - c.loglik) < 2
    assert close >= 0.9 * reps


def test_gcpc_reg_rho_consistency(rng):
    rhos = []
    for _ in range(15):
        y, X = generate(T2, 0.2, 1000, rng)
        rhos.append(gcpc_reg_fit(y, X, CFG).nuisance["rho"])
    assert 0.12 <= np.median(rhos) <= 0.30


def test_gcpc_reg_intercept_only_matches_loglik(rng):
    from projcauchy.estimation import fit_gcpc

    y = C.sample_gcpc(C.GcpcParams([2.0, 4.0], 0.4), 400, rng)
    r = gcpc_reg_fit(y, design_matrix(n=400), CFG)
    g = fit_gcpc(y, CFG)
    assert r.loglik == pytest.approx(g.loglik, abs=1e-5)
    assert r.nuisance["rho"] == pytest.approx(g.params.rho, rel=1e-3)


# ---- design checks and invariants


def test_rank_deficient_design_rejected(rng):
    x = rng.standard_normal(50)
    X = np.column_stack([np.ones(50), x, 2 * x])
    y = rng.uniform(-np.pi, np.pi, 50)
    with pytest.raises(RankDeficientError):
        cipc_reg_fit(y, X)
    with pytest.raises(RankDeficientError):
        sphere_reg_fit("sipc", angle_to_unit(y) @ np.eye(2, 3), X)


def test_too_few_observations_rejected():
    X = design_matrix(np.arange(4.0))
    with pytest.raises(ValueError):
        spml_fit(np.zeros(4), X)


def test_covariate_scaling_equivariance(rng):
    y, X = generate(T2, 1.0, 400, rng)
    c = 10.0
    Xs = X.copy()
    Xs[:, 1] *= c
    for fitter in (spml_fit, cipc_reg_fit):
        a = fitter(y, X)
        b = fitter(y, Xs)
        assert a.loglik == pytest.approx(b.loglik, abs=1e-6)
        assert np.allclose(a.fitted_means(X), b.fitted_means(Xs), atol=1e-5)
        assert np.allclose(b.coefficients[1] * c, a.coefficients[1], atol=1e-4)


def test_circular_nesting(rng):
    for _ in range(3):
        y, X = generate(T2, 0.5, 300, rng)
        assert gcpc_reg_fit(y, X, CFG).loglik >= cipc_reg_fit(y, X).loglik - 1e-8


def test_standard_errors_shape(rng):
    y, X = generate(T2, 1.0, 500, rng)
    r = regression_standard_errors(cipc_reg_fit(y, X), y, X)
    assert r.std_errors.shape == (4,)
    assert np.all(r.std_errors > 0)


# ---- spherical regression


def test_sipc_reg_table5_scale(rng):
    errs = []
    for _ in range(20):
        y, X = generate(T5, (0.0, 0.0), 1000, rng)
        r = sphere_reg_fit("sipc", y, X)
        errs.append(np.linalg.norm(r.coefficients - np.array(TABLE5_B)))
    assert 0.5 * 0.152 <= np.mean(errs) <= 1.5 * 0.152


def test_sphere_reg_intercept_only(rng):
    y, _ = generate(table_spec(3, B=1), (1.0, 0.5), 300, rng)
    X = design_matrix(n=300)
    s = sphere_reg_fit("sipc", y, X)
    assert np.allclose(s.coefficients[0], fit_sipc(y).estimates, atol=1e-5)
    e = sphere_reg_fit("sespc", y, X, CFG, rotation="identity")
    f = fit_sespc(y, CFG)
    assert e.loglik == pytest.approx(f.loglik, abs=1e-5)
    assert np.allclose(e.coefficients[0], f.estimates[:3], atol=1e-4)


def test_sphere_nesting(rng):
    y, X = generate(T5, (1.0, -0.5), 200, rng)
    for big, small in (("sespc", "sipc"), ("esag", "iag")):
        b = sphere_reg_fit(big, y, X, CFG, rotation="identity")
        s = sphere_reg_fit(small, y, X)
        assert b.loglik >= s.loglik - 1e-8
        assert sphere_reg_loglik(small, s.coefficients, y, X) == pytest.approx(s.loglik, abs=1e-9)


def test_sphere_grid_refinement_monotone(rng):
    y, X = generate(T5, (1.5, 0.5), 150, rng)
    coarse = sphere_reg_fit("sespc", y, X, rotation="grid", grid=(2, 2, 2))
    fine = sphere_reg_fit("sespc", y, X, rotation="grid", grid=(4, 3, 4))
    assert fine.loglik >= coarse.loglik - 1e-6
    Q = fine.rotation
    assert np.allclose(Q @ Q.T, np.eye(3), atol=1e-10)
    ident = sphere_reg_fit("sespc", y, X, rotation="identity")
    assert fine.loglik >= ident.loglik - 1e-6


def test_sphere_reg_rejects_unknown_model(rng):
    with pytest.raises(ValueError):
        sphere_reg_fit("vmf", np.eye(3)[[0] * 20], design_matrix(n=20))


# ---- circular correlation


def test_circular_correlation_identity_and_reflection(rng):
    a = C.sample_cipc(C.CipcParams([1.0, 1.0]), 200, rng)
    assert circular_correlation(a, a) == pytest.approx(1.0, abs=1e-12)
    assert circular_correlation(a, -a) == pytest.approx(-1.0, abs=1e-12)


def test_circular_correlation_independent(rng):
    a = rng.uniform(-np.pi, np.pi, 10_000)
    b = rng.uniform(-np.pi, np.pi, 10_000)
    assert abs(circular_correlation(a, b)) < 0.05


def test_circular_correlation_errors():
    with pytest.raises(ValueError):
        circular_correlation(np.zeros(10), np.linspace(0, 1, 10))
    with pytest.raises(ValueError):
        circular_correlation([0.1, 0.2], [0.3, 0.4])
