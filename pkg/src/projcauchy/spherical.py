"""Spherical projected Cauchy family (SPC, SIPC, SESPC) and the spherical
baselines SC, ESAG and IAG.

Evaluation points are ``(..., 3)`` arrays of unit vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfcx

from .circular import _as_rng, _frozen, check_scatter
from .geometry import (
    TangentFrame3,
    arctan2,
    normalize,
    tangent_frame,
    tangent_frames,
)

LOG_4PI2 = np.log(4 * np.pi**2)


# --------------------------------------------------------------------------
# parameter containers


@dataclass(frozen=True)
class SpcParams:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, (3,)))
        object.__setattr__(self, "sigma", _frozen(check_scatter(self.sigma, 3)))


@dataclass(frozen=True)
class SipcParams:
    mu: np.ndarray
    name: str = field(default="sipc", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, (3,)))

    @property
    def gamma(self) -> float:
        return float(np.linalg.norm(self.mu))


@dataclass(frozen=True)
class SespcParams:
    mu: np.ndarray
    theta: np.ndarray = (0.0, 0.0)
    name: str = field(default="sespc", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, (3,)))
        object.__setattr__(self, "theta", _frozen(self.theta, (2,)))

    @property
    def gamma(self) -> float:
        return float(np.linalg.norm(self.mu))

    @property
    def rho_psi(self):
        return rho_psi_from_theta(*self.theta)


@dataclass(frozen=True)
class ScParams:
    mu: np.ndarray
    lam: float
    name: str = field(default="sc", init=False, repr=False)

    def __post_init__(self):
        mu = _frozen(self.mu, (3,))
        if abs(np.linalg.norm(mu) - 1.0) > 1e-9:
            raise ValueError("SC location must be a unit vector")
        if not 0 <= self.lam < 1:
            raise ValueError("lambda must lie in [0, 1)")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True)
class EsagParams:
    mu: np.ndarray
    gamma: np.ndarray = (0.0, 0.0)
    name: str = field(default="esag", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, (3,)))
        object.__setattr__(self, "gamma", _frozen(self.gamma, (2,)))


@dataclass(frozen=True)
class IagParams:
    mu: np.ndarray
    name: str = field(default="iag", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, (3,)))


# --------------------------------------------------------------------------
# scatter parameterisation


def theta_from_rho_psi(rho: float, psi: float):
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    r = 0.5 * (1.0 / rho - rho)
    return r * np.cos(2 * psi), r * np.sin(2 * psi)


def rho_psi_from_theta(theta1: float, theta2: float):
    """Inverse of :func:`theta_from_rho_psi`; psi is returned in [0, pi)."""
    r = np.hypot(theta1, theta2)
    rho = 1.0 / (np.sqrt(r**2 + 1.0) + r)
    psi = 0.5 * np.arctan2(theta2, theta1) % np.pi if r > 0 else 0.0
    return float(rho), float(psi)


def _inverse_scatter_from_frame(frame: TangentFrame3, theta) -> np.ndarray:
    t1, t2 = theta
    e1, e2, e3 = frame.xi1_tilde, frame.xi2_tilde, frame.xi3
    lift = np.sqrt(t1**2 + t2**2 + 1.0) - 1.0
    return (
        np.eye(3)
        + t1 * (np.outer(e1, e1) - np.outer(e2, e2))
        + t2 * (np.outer(e1, e2) + np.outer(e2, e1))
        + lift * (np.outer(e1, e1) + np.outer(e2, e2))
    )


def sespc_inverse_scatter(p: SespcParams) -> np.ndarray:
    """Inverse scatter with unit eigenvalue along ``mu`` and unit determinant."""
    return _inverse_scatter_from_frame(tangent_frame(p.mu), p.theta)


def esag_inverse_covariance(p: EsagParams) -> np.ndarray:
    return _inverse_scatter_from_frame(tangent_frame(p.mu), p.gamma)


def _quad_form_in_frame(y, mu, theta):
    """``y' S^{-1} y`` for the constrained scatter, vectorised over rows.

    ``mu`` may be a single location or one location per row of ``y``.
    """
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if mu.ndim == 1:
        fr = tangent_frame(mu)
        u1 = y @ fr.xi1_tilde
        u2 = y @ fr.xi2_tilde
    else:
        xi1, xi2, _ = tangent_frames(mu)
        u1 = np.einsum("ij,ij->i", y, xi1)
        u2 = np.einsum("ij,ij->i", y, xi2)
    t1, t2 = np.asarray(theta, dtype=float)[..., 0], np.asarray(theta, dtype=float)[..., 1]
    root = np.sqrt(t1**2 + t2**2 + 1.0)
    # 1 on the location axis plus the tangent-plane block
    return 1.0 + t1 * (u1**2 - u2**2) + 2.0 * t2 * u1 * u2 + (root - 1.0) * (u1**2 + u2**2)


# --------------------------------------------------------------------------
# projected Cauchy kernel


def _spc_log_kernel(A, B, G2, half_logdet=0.0):
    """log of the projected trivariate Cauchy density given its quadratic forms."""
    C = G2 + 1.0
    D = B * C - A**2
    sd = np.sqrt(D)
    bracket = arctan2(sd, -A) - arctan2(sd, A) + np.pi
    num = B * C * sd * bracket + 2.0 * A * D
    return np.log(num) - LOG_4PI2 - half_logdet - np.log(B) - 2.0 * np.log(D)


class NumericalDomainError(ArithmeticError):
    pass


def spc_density(y, p: SpcParams):
    """Density of the projection onto the sphere of a trivariate Cauchy."""
    y = np.asarray(y, dtype=float)
    prec = np.linalg.inv(p.sigma)
    A = y @ (prec @ p.mu)
    B = np.einsum("...i,ij,...j->...", y, prec, y)
    G2 = p.mu @ prec @ p.mu
    if np.any(B * (G2 + 1.0) - A**2 <= 0):
        raise NumericalDomainError("non-positive discriminant in projected density")
    half_logdet = 0.5 * np.linalg.slogdet(p.sigma)[1]
    return np.exp(_spc_log_kernel(A, B, G2, half_logdet))


def sipc_logpdf(y, mu):
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    alpha = np.einsum("...i,...i->...", y, mu)
    g2 = np.einsum("...i,...i->...", mu, mu)
    return _spc_log_kernel(alpha, 1.0, g2)


def sipc_density(y, p: SipcParams):
    """Rotationally symmetric projected Cauchy density (identity scatter)."""
    return np.exp(sipc_logpdf(y, p.mu))


def sespc_logpdf(y, mu, theta):
    """SESPC log density; ``mu`` and ``theta`` may carry one row per point."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    alpha = np.einsum("...i,...i->...", y, mu)
    g2 = np.einsum("...i,...i->...", mu, mu)
    B = _quad_form_in_frame(y, mu, theta)
    return _spc_log_kernel(alpha, B, g2)


def sespc_density(y, p: SespcParams):
    return np.exp(sespc_logpdf(y, p.mu, p.theta))


# --------------------------------------------------------------------------
# spherical Cauchy


def sc_logpdf(y, mu, lam, form: str = "standard"):
    """Spherical Cauchy log density.

    ``form="standard"`` uses the kernel ``(1 - lam^2) / (1 + lam^2 - 2 lam y'mu)``.
    ``form="printed"`` drops the ``lam`` multiplying ``y'mu``; it does not
    integrate to one and is kept only so that can be checked.
    """
    t = np.asarray(y, dtype=float) @ np.asarray(mu, dtype=float)
    if form == "standard":
        den = 1.0 + lam**2 - 2.0 * lam * t
    elif form == "printed":
        den = 1.0 + lam**2 - 2.0 * t
    else:
        raise ValueError(f"unknown SC form {form!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.log(4 * np.pi) + 2.0 * np.log((1.0 - lam**2) / den)


def sc_density(y, p: ScParams, form: str = "standard"):
    return np.exp(sc_logpdf(y, p.mu, p.lam, form))


# --------------------------------------------------------------------------
# angular Gaussian


def _m2_scaled(a):
    # e^{a^2/2} * ((1 + a^2) Phi(a) + a phi(a))
    return 0.5 * (1.0 + a**2) * erfcx(-a / np.sqrt(2.0)) + a / np.sqrt(2 * np.pi)


def esag_logpdf(y, mu, gam):
    """ESAG log density; ``gam = (0, 0)`` gives the isotropic angular Gaussian."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    gam = np.asarray(gam, dtype=float)
    A = np.einsum("...i,...i->...", y, mu)
    if np.all(gam == 0):
        B = np.ones_like(A)
    else:
        B = _quad_form_in_frame(y, mu, gam)
    a = A / np.sqrt(B)
    g2 = np.einsum("...i,...i->...", mu, mu)
    return -np.log(2 * np.pi) - 1.5 * np.log(B) - 0.5 * g2 + np.log(_m2_scaled(a))


def esag_density(y, p: EsagParams):
    return np.exp(esag_logpdf(y, p.mu, p.gamma))


def iag_logpdf(y, mu):
    return esag_logpdf(y, mu, (0.0, 0.0))


def iag_density(y, p: IagParams):
    return np.exp(iag_logpdf(y, p.mu))


# --------------------------------------------------------------------------
# sampling


def _cauchy_directions(mu, chol, n, rng):
    z = rng.standard_normal((n, 3))
    g = np.abs(rng.standard_normal(n))
    x = mu + (z @ chol.T) / g[:, None]
    return normalize(x)


def sample_sipc(p: SipcParams, n: int, seed=None) -> np.ndarray:
    rng = _as_rng(seed)
    return _cauchy_directions(p.mu, np.eye(3), n, rng)


def sample_sespc(p: SespcParams, n: int, seed=None) -> np.ndarray:
    rng = _as_rng(seed)
    if np.all(p.theta == 0):
        chol = np.eye(3)
    else:
        sigma = np.linalg.inv(sespc_inverse_scatter(p))
        chol = np.linalg.cholesky(0.5 * (sigma + sigma.T))
    return _cauchy_directions(p.mu, chol, n, rng)


def sample_esag(p: EsagParams, n: int, seed=None) -> np.ndarray:
    rng = _as_rng(seed)
    z = rng.standard_normal((n, 3))
    if np.all(p.gamma == 0):
        return normalize(p.mu + z)
    V = np.linalg.inv(esag_inverse_covariance(p))
    chol = np.linalg.cholesky(0.5 * (V + V.T))
    return normalize(p.mu + z @ chol.T)


def sample_iag(p: IagParams, n: int, seed=None) -> np.ndarray:
    return sample_esag(EsagParams(p.mu), n, seed)


def sc_inverse_cdf(u, lam):
    """Quantile of ``t = y'mu`` under the spherical Cauchy."""
    u = np.asarray(u, dtype=float)
    if lam < 1e-10:
        return 2.0 * u - 1.0
    w = 4.0 * lam * u / (1.0 - lam**2) ** 2 + 1.0 / (1.0 + lam) ** 2
    return np.clip((1.0 + lam**2 - 1.0 / w) / (2.0 * lam), -1.0, 1.0)


def sample_sc(p: ScParams, n: int, seed=None) -> np.ndarray:
    """Tangent-normal construction: exact inverse CDF for ``y'mu``, uniform
    angle around ``mu``."""
    rng = _as_rng(seed)
    t = sc_inverse_cdf(rng.uniform(size=n), p.lam)
    phi = rng.uniform(0.0, 2 * np.pi, size=n)
    m = p.mu
    helper = np.array([1.0, 0.0, 0.0]) if abs(m[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = normalize(helper - helper @ m * m)
    e2 = np.cross(m, e1)
    r = np.sqrt(np.clip(1.0 - t**2, 0.0, None))
    y = t[:, None] * m + r[:, None] * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
    return normalize(y)


# --------------------------------------------------------------------------
# shape diagnostics


def sespc_mode_count(p: SespcParams, n_lat: int = 181, n_lon: int = 360) -> int:
    """Count local maxima of an SESPC density on a latitude-longitude grid.

    The grid pole is placed on the minor scatter axis so that any pair of
    modes lies on the grid equator rather than at a pole.
    """
    fr = tangent_frame(p.mu)
    _, psi = rho_psi_from_theta(*p.theta)
    minor = fr.xi1_tilde * np.cos(psi) + fr.xi2_tilde * np.sin(psi)
    other = np.cross(minor, fr.xi3)
    colat = np.linspace(0, np.pi, n_lat + 2)[1:-1]
    lon = 2 * np.pi * np.arange(n_lon) / n_lon
    C, L = np.meshgrid(colat, lon, indexing="ij")
    pts = (
        np.cos(C)[..., None] * minor
        + (np.sin(C) * np.cos(L))[..., None] * fr.xi3
        + (np.sin(C) * np.sin(L))[..., None] * other
    )
    f = sespc_logpdf(pts.reshape(-1, 3), p.mu, p.theta).reshape(C.shape)
    pad = np.pad(f, ((1, 1), (0, 0)), constant_values=-np.inf)
    is_max = np.ones_like(f, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = np.roll(pad, -dj, axis=1)[1 + di: 1 + di + n_lat]
            is_max &= f > nb
    return int(is_max.sum())

