"""Likelihood-ratio tests, bootstrap calibration, Kullback-Leibler
divergences and the accuracy metrics used by the simulation studies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import circular as C
from . import models
from .estimation import (
    OptimizerConfig,
    as_circle_data,
    as_sphere_data,
    fit_cipc,
    fit_gcpc,
    fit_sespc,
    fit_sipc,
)
from .geometry import arctan2, normalize, unit_to_angle, wrap_angle
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_circle, integrate_sphere


@dataclass(frozen=True)
class LrtResult:
    statistic: float
    null: str  # "mixture" or "chi2"
    df: int
    p_value: float
    logliks: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "null": self.null,
            "df": self.df,
            "p_value": self.p_value,
            "logliks": self.logliks,
        }


def mixture_p_value(stat: float) -> float:
    """Upper tail of the 0.5 point mass at zero + 0.5 chi-square(1) law."""
    if stat <= 0:
        return 1.0
    return float(0.5 * stats.chi2.sf(stat, 1))


def lrt_p_value(stat: float, null: str, df: int) -> float:
    if null == "mixture":
        return mixture_p_value(stat)
    if null == "chi2":
        return float(stats.chi2.sf(stat, df)) if stat > 0 else 1.0
    raise ValueError(f"unknown null {null!r}")


def lrt_from_logliks(ll_small: float, ll_big: float, null: str, df: int) -> LrtResult:
    stat = max(0.0, 2.0 * (ll_big - ll_small))
    return LrtResult(stat, null, df, lrt_p_value(stat, null, df),
                     {"restricted": ll_small, "full": ll_big})


def lrt_rho_one(data, cfg: OptimizerConfig = OptimizerConfig(), null: str = "mixture") -> LrtResult:
    """Test ``rho = 1`` (CIPC inside GCPC).

    ``null="mixture"`` refers the statistic to the boundary law
    0.5 delta_0 + 0.5 chi2(1); ``null="chi2"`` uses a plain chi2(1).
    """
    y = as_circle_data(data)
    if y.shape[0] < 4:
        raise ValueError("at least four observations are required")
    small = fit_cipc(y, cfg)
    big = fit_gcpc(y, cfg)
    return lrt_from_logliks(small.loglik, big.loglik, null, 1)


def lrt_isotropy_sphere(data, cfg: OptimizerConfig = OptimizerConfig()) -> LrtResult:
    """Test rotational symmetry (SIPC inside SESPC) against chi2(2)."""
    y = as_sphere_data(data)
    if y.shape[0] < 6:
        raise ValueError("at least six observations are required")
    small = fit_sipc(y, cfg)
    big = fit_sespc(y, cfg)
    return lrt_from_logliks(small.loglik, big.loglik, "chi2", 2)


# --------------------------------------------------------------------------
# bootstrap


def _wc_cdf(d, lam):
    # wrapped Cauchy distribution function of d in (-pi, pi], centred at 0
    return 0.5 + np.arctan((1 + lam) / (1 - lam) * np.tan(d / 2)) / np.pi


def _wc_quantile(u, lam):
    return 2.0 * np.arctan((1 - lam) / (1 + lam) * np.tan(np.pi * (u - 0.5)))


def _null_transform_rho_one(y, cfg):
    """Map the data through the fitted GCPC distribution function and back
    through the fitted CIPC quantile function, so the transformed sample
    follows the restricted fit."""
    g = fit_gcpc(y, cfg)
    c = fit_cipc(y, cfg)
    pg = g.params
    d = wrap_angle(unit_to_angle(y) - pg.omega)
    # same law re-centred at zero
    gp = C.GcpcParams([pg.gamma, 0.0], pg.rho)
    u = C.circular_cdf(d, lambda t: C.gcpc_density(t, gp), breaks=(0.0, np.pi))
    u = np.clip(u, 1e-12, 1 - 1e-12)
    lam = C.lambda_from_gamma(c.params.gamma)
    omega_c = c.params.omega if c.params.gamma > 0 else 0.0
    return wrap_angle(omega_c + _wc_quantile(u, lam))


def _null_transform_isotropy(y, cfg, rng):
    """Rotate each point about the fitted SIPC axis by a uniform angle."""
    axis = normalize(fit_sipc(y, cfg).estimates)
    k = np.broadcast_to(axis, y.shape)
    phi = rng.uniform(0, 2 * np.pi, y.shape[0])[:, None]
    # Rodrigues rotation of each row about the common axis
    kxy = np.cross(k, y)
    kdy = (y @ axis)[:, None]
    return normalize(y * np.cos(phi) + kxy * np.sin(phi) + k * kdy * (1 - np.cos(phi)))


def bootstrap_lrt(data, test: str = "rho1", B: int = 199, seed=0,
                  cfg: OptimizerConfig = OptimizerConfig()) -> dict:
    """Non-parametric bootstrap p-value of a likelihood-ratio test.

    The sample is first moved onto the null hypothesis (``rho1``: probability
    transform from the fitted GCPC to the fitted CIPC; ``isotropy``: random
    rotation of each point about the fitted SIPC axis). Bootstrap samples are
    drawn with replacement from the transformed data and refitted under both
    models. ``p = (1 + #{T*_b >= T}) / (B + 1)``.
    """
    if B < 99:
        raise ValueError("B must be at least 99")
    rng = np.random.default_rng(seed)
    if test == "rho1":
        y = as_circle_data(data)
        observed = lrt_rho_one(y, cfg)
        null_data = C.angle_to_unit(_null_transform_rho_one(y, cfg))
        run = lambda d: lrt_rho_one(d, cfg).statistic
    elif test == "isotropy":
        y = as_sphere_data(data)
        observed = lrt_isotropy_sphere(y, cfg)
        null_data = _null_transform_isotropy(y, cfg, rng)
        run = lambda d: lrt_isotropy_sphere(d, cfg).statistic
    else:
        raise ValueError("test must be 'rho1' or 'isotropy'")
    n = y.shape[0]
    boot = []
    failures = 0
    for _ in range(B):
        idx = rng.integers(0, n, n)
        try:
            boot.append(run(null_data[idx]))
        except (ValueError, ArithmeticError, np.linalg.LinAlgError):
            failures += 1
    boot = np.asarray(boot)
    p = (1 + np.sum(boot >= observed.statistic - 1e-10)) / (boot.size + 1)
    return {
        "statistic": observed.statistic,
        "p_value": float(p),
        "asymptotic_p_value": observed.p_value,
        "B": B,
        "effective_B": int(boot.size),
        "failures": failures,
    }


# --------------------------------------------------------------------------
# Kullback-Leibler divergence


def kld(p, q, spec: QuadratureSpec = DEFAULT_SPEC, return_info: bool = False):
    """KL divergence of ``q`` from ``p``, the integral of p log(p / q)."""
    dp, dq = models.domain(p), models.domain(q)
    if dp != dq:
        raise ValueError("both models must live on the same domain")

    def integrand(x):
        lp = models.logpdf(p, x)
        lq = models.logpdf(q, x)
        return np.exp(lp) * (lp - lq)

    direction = models.location_direction(p)
    if dp == "circle":
        center = 0.0 if direction is None else float(arctan2(direction[1], direction[0]))
        val = integrate_circle(integrand, spec, center=center)
        info = {"domain": "circle", "center": center}
    else:
        val, order = integrate_sphere(integrand, spec, pole=direction, return_order=True)
        info = {"domain": "sphere", "order": order}
    val = float(val)
    return (val, info) if return_info else val


# --------------------------------------------------------------------------
# metrics


def metric_euclid(mu_hat, mu) -> float:
    a, b = np.asarray(mu_hat, dtype=float), np.asarray(mu, dtype=float)
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    return float(np.linalg.norm(a - b))


def metric_frobenius(B_hat, B) -> float:
    a, b = np.asarray(B_hat, dtype=float), np.asarray(B, dtype=float)
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    return float(np.linalg.norm(a - b, "fro"))


def metric_error_m(m_hats, m) -> float:
    """``sqrt(2 (1 - mean(m_hat' m)))`` over a set of estimated directions."""
    mh = np.atleast_2d(np.asarray(m_hats, dtype=float))
    m = np.asarray(m, dtype=float)
    if mh.shape[1] != m.shape[0]:
        raise ValueError("shape mismatch")
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - np.mean(mh @ m)))))
