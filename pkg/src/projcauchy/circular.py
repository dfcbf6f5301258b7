"""Circular projected Cauchy family and its circular baselines.

Densities are vectorised over the evaluation point. Angles are radians;
``y`` arguments are ``(..., 2)`` arrays of unit vectors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import erfcx

from .geometry import angle_to_unit, arctan2, unit_to_angle, wrap_angle
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_arc

LOG_2PI = np.log(2 * np.pi)


class ScatterError(ValueError):
    """Scatter matrix is not symmetric positive definite."""


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _frozen(x, shape=None):
    a = np.array(x, dtype=float)
    if shape is not None and a.shape != shape:
        raise ValueError(f"expected shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("parameters must be finite")
    a.setflags(write=False)
    return a


def check_scatter(sigma, dim):
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (dim, dim):
        raise ScatterError(f"scatter must be {dim}x{dim}")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
        raise ScatterError("scatter matrix is not symmetric")
    if np.linalg.eigvalsh(sigma).min() <= 0:
        raise ScatterError("scatter matrix is not positive definite")
    return sigma


# --------------------------------------------------------------------------
# parameter containers


@dataclass(frozen=True)
class CpcParams:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, (2,)))
        object.__setattr__(self, "sigma", _frozen(check_scatter(self.sigma, 2)))


@dataclass(frozen=True)
class CipcParams:
    mu: np.ndarray
    name: str = field(default="cipc", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, (2,)))

    @classmethod
    def from_polar(cls, omega, gamma):
        if gamma < 0:
            raise ValueError("gamma must be non-negative")
        return cls(gamma * np.array([np.cos(omega), np.sin(omega)]))

    @property
    def gamma(self) -> float:
        return float(np.hypot(*self.mu))

    @property
    def omega(self) -> float:
        if self.gamma == 0:
            raise ValueError("location angle undefined when gamma = 0")
        return float(arctan2(self.mu[1], self.mu[0]))


@dataclass(frozen=True)
class GcpcParams:
    mu: np.ndarray
    rho: float
    name: str = field(default="gcpc", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, (2,)))
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ValueError("rho must be positive")
        object.__setattr__(self, "rho", float(self.rho))

    @classmethod
    def from_polar(cls, omega, gamma, rho):
        if gamma < 0:
            raise ValueError("gamma must be non-negative")
        return cls(gamma * np.array([np.cos(omega), np.sin(omega)]), rho)

    @property
    def gamma(self) -> float:
        return float(np.hypot(*self.mu))

    @property
    def omega(self) -> float:
        # with gamma = 0 the direction is arbitrary; 0 keeps the density defined
        if self.gamma == 0:
            return 0.0
        return float(arctan2(self.mu[1], self.mu[0]))


@dataclass(frozen=True)
class WcParams:
    omega: float
    lam: float
    name: str = field(default="wc", init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.lam < 1:
            raise ValueError("lambda must lie in [0, 1)")
        object.__setattr__(self, "omega", float(wrap_angle(self.omega)))
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True)
class PnParams:
    mu: np.ndarray
    name: str = field(default="pn", init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(self.mu, (2,)))

    @property
    def gamma(self) -> float:
        return float(np.hypot(*self.mu))


# --------------------------------------------------------------------------
# concentration maps


def lambda_from_gamma(gamma):
    """Wrapped Cauchy concentration equivalent to a CIPC norm ``gamma``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("gamma must be non-negative")
    # (sqrt(g^2+1) - 1) / g rewritten without cancellation; -> 0 as g -> 0
    out = gamma / (np.sqrt(gamma**2 + 1.0) + 1.0)
    return out[()] if out.ndim == 0 else out


def gamma_from_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any((lam < 0) | (lam >= 1)):
        raise ValueError("lambda must lie in [0, 1)")
    out = 2.0 * lam / (1.0 - lam**2)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# densities


def cpc_density(y, p: CpcParams):
    """Density of the projection of a bivariate Cauchy with arbitrary scatter."""
    y = np.asarray(y, dtype=float)
    prec = np.linalg.inv(p.sigma)
    A = y @ (prec @ p.mu)
    B = np.einsum("...i,ij,...j->...", y, prec, y)
    G2 = p.mu @ prec @ p.mu
    s = np.sqrt(G2 + 1.0)
    sb = np.sqrt(B)
    # sqrt(B)*s - A, stable when A > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = np.where(A > 0, (B * (G2 + 1.0) - A**2) / (sb * s + np.abs(A)), sb * s - A)
    return 1.0 / (2 * np.pi * np.sqrt(np.linalg.det(p.sigma)) * sb * diff)


def _gcpc_log_kernel(c, sn, gamma, rho):
    """log density of GCPC given cos and sin of (theta - omega)."""
    s = np.sqrt(gamma**2 + 1.0)
    b = c**2 + sn**2 / rho
    sqb = np.sqrt(b)
    gc = gamma * c
    # sqrt(b) s - gamma c == (b + gamma^2 sn^2 / rho) / (sqrt(b) s + gamma c)
    with np.errstate(divide="ignore", invalid="ignore"):
        E = np.where(gc > 0, (b + gamma**2 * sn**2 / rho) / (sqb * s + gc), sqb * s - gc)
    return -LOG_2PI - 0.5 * np.log(rho) - 0.5 * np.log(b) - np.log(E)


def cipc_logpdf(theta, p: CipcParams):
    g = p.gamma
    if g == 0:
        return np.full(np.shape(theta), -LOG_2PI)[()]
    d = np.asarray(theta, dtype=float) - p.omega
    return _gcpc_log_kernel(np.cos(d), np.sin(d), g, 1.0)


def cipc_density(theta, p: CipcParams):
    return np.exp(cipc_logpdf(theta, p))


def cipc_logpdf_vec(y, mu):
    """CIPC log density in the Euclidean form, ``y`` unit vectors ``(n, 2)``."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    g2 = mu @ mu
    s = np.sqrt(g2 + 1.0)
    alpha = y @ mu
    perp2 = (y[..., 0] * mu[1] - y[..., 1] * mu[0]) ** 2
    D = np.where(alpha > 0, (1.0 + perp2) / (s + alpha), s - alpha)
    return -LOG_2PI - np.log(D)


def gcpc_logpdf(theta, p: GcpcParams):
    d = np.asarray(theta, dtype=float) - p.omega
    return _gcpc_log_kernel(np.cos(d), np.sin(d), p.gamma, p.rho)


def gcpc_density(theta, p: GcpcParams):
    """GCPC density in polar form; defined for every angle."""
    return np.exp(gcpc_logpdf(theta, p))


def gcpc_inverse_scatter(p: GcpcParams) -> np.ndarray:
    """Inverse scatter with ``mu / |mu|`` as unit-eigenvalue eigenvector and
    ``rho`` as the other eigenvalue of the scatter."""
    g = p.gamma
    if g == 0:
        raise ValueError("inverse scatter undefined for a zero location vector")
    xi2 = p.mu / g
    xi1 = np.array([-xi2[1], xi2[0]])
    return np.outer(xi1, xi1) / p.rho + np.outer(xi2, xi2)


def gcpc_density_vector(y, p: GcpcParams):
    """GCPC density evaluated literally through the quadratic form ``B``."""
    y = np.asarray(y, dtype=float)
    B = np.einsum("...i,ij,...j->...", y, gcpc_inverse_scatter(p), y)
    alpha = y @ p.mu
    s = np.sqrt(p.gamma**2 + 1.0)
    return 1.0 / (2 * np.pi * np.sqrt(p.rho) * (B * s - alpha * np.sqrt(B)))


def gcpc_density_tan(theta, p: GcpcParams):
    """Tangent form of the GCPC density.

    It coincides with :func:`gcpc_density` only where ``cos(theta - omega) > 0``;
    on the far half circle it returns the density of the reflected angle.
    """
    d = np.asarray(theta, dtype=float) - p.omega
    t2 = np.tan(d) ** 2
    g = p.gamma
    q = 1.0 + t2 / p.rho
    return 1.0 / (
        2 * np.pi * np.sqrt(p.rho) * np.cos(d) ** 2 * np.sqrt(q)
        * (np.sqrt((g**2 + 1.0) * q) - g)
    )


def wc_density(theta, p: WcParams):
    lam = p.lam
    d = np.asarray(theta, dtype=float) - p.omega
    return (1 - lam**2) / (2 * np.pi * (1 + lam**2 - 2 * lam * np.cos(d)))


def wc_logpdf(theta, p: WcParams):
    return np.log(wc_density(theta, p))


def _pn_log_g(a):
    # log of (phi(a) + a Phi(a)) / phi(a) * phi(0), computed through erfcx
    return np.log(1.0 / np.sqrt(2 * np.pi) + 0.5 * a * erfcx(-a / np.sqrt(2.0)))


def pn_logpdf_vec(y, mu):
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    a = y @ mu
    return -0.5 * LOG_2PI - 0.5 * (mu @ mu) + _pn_log_g(a)


def pn_logpdf(theta, p: PnParams):
    return pn_logpdf_vec(angle_to_unit(theta), p.mu)


def pn_density(theta, p: PnParams):
    """Projected normal density with identity covariance."""
    return np.exp(pn_logpdf(theta, p))


# --------------------------------------------------------------------------
# sampling


def _project_cauchy(mu, chol, n, rng):
    d = len(mu)
    z = rng.standard_normal((n, d))
    g = np.abs(rng.standard_normal(n))
    x = mu + (z @ chol.T) / g[:, None]
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sample_cipc(p: CipcParams, n: int, seed=None) -> np.ndarray:
    """Draw angles by normalising bivariate Cauchy vectors (normal over |normal|)."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = _as_rng(seed)
    return unit_to_angle(_project_cauchy(p.mu, np.eye(2), n, rng))


def sample_gcpc(p: GcpcParams, n: int, seed=None) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    rng = _as_rng(seed)
    if p.gamma == 0:
        sigma = np.diag([p.rho, 1.0])
    else:
        sigma = np.linalg.inv(gcpc_inverse_scatter(p))
    chol = np.linalg.cholesky(0.5 * (sigma + sigma.T))
    return unit_to_angle(_project_cauchy(p.mu, chol, n, rng))


def sample_wc(p: WcParams, n: int, seed=None) -> np.ndarray:
    # wrapping a linear Cauchy with scale s gives resultant length exp(-s)
    rng = _as_rng(seed)
    if p.lam == 0:
        return wrap_angle(rng.uniform(-np.pi, np.pi, n))
    s = -np.log(p.lam)
    return wrap_angle(p.omega + s * np.tan(np.pi * (rng.uniform(size=n) - 0.5)))


def sample_pn(p: PnParams, n: int, seed=None) -> np.ndarray:
    rng = _as_rng(seed)
    x = p.mu + rng.standard_normal((n, 2))
    return unit_to_angle(x)


# --------------------------------------------------------------------------
# distribution function


class OutOfWindowError(ValueError):
    """Closed-form GCPC probabilities exist only for |theta - omega| < pi/2."""


def _cdf_closed_term(d, p: GcpcParams):
    t = np.tan(d)
    g = p.gamma
    k = np.sqrt(p.rho) * (np.sqrt(g**2 + 1.0) + g)
    # (sqrt(1 + t^2/rho) - 1) / t without the 0/0 at t = 0
    ratio = (t / p.rho) / (np.sqrt(1.0 + t**2 / p.rho) + 1.0)
    return np.arctan(k * ratio) / np.pi


def gcpc_cdf_closed(theta_lower, theta_upper, p: GcpcParams) -> float:
    """P(theta_lower <= Theta <= theta_upper) by the closed arctangent formula.

    Both limits must satisfy |theta - omega| < pi/2; otherwise use
    :func:`gcpc_cdf_numeric`.
    """
    dl = float(wrap_angle(theta_lower - p.omega))
    du = float(wrap_angle(theta_upper - p.omega))
    half = np.pi / 2
    if not (-half < dl < half and -half < du < half):
        raise OutOfWindowError(
            "closed form needs |theta - omega| < pi/2; use gcpc_cdf_numeric"
        )
    if dl > du:
        raise ValueError("theta_lower must not exceed theta_upper")
    return float(_cdf_closed_term(du, p) - _cdf_closed_term(dl, p))


def _breakpoints(lo, hi, p: GcpcParams):
    pts = []
    for base in (p.omega, p.omega + np.pi):
        for k in (-2, -1, 0, 1, 2):
            x = base + 2 * np.pi * k
            if lo < x < hi:
                pts.append(x)
    return sorted(pts) or None


def gcpc_cdf_numeric(theta_lower, theta_upper, p: GcpcParams, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Probability of the arc [theta_lower, theta_upper] by adaptive quadrature.

    Limits are positions on the cut circle (-pi, pi] with
    ``theta_lower <= theta_upper``.
    """
    if theta_lower > theta_upper:
        raise ValueError("theta_lower must not exceed theta_upper")
    if theta_lower == theta_upper:
        return 0.0

    def f(t):
        return float(gcpc_density(t, p))

    return integrate_arc(f, theta_lower, theta_upper, spec, _breakpoints(theta_lower, theta_upper, p))


def circular_cdf(theta, density, spec: QuadratureSpec = DEFAULT_SPEC, breaks=()):
    """Distribution function F(t) = P(-pi < Theta <= t) at many points.

    ``density`` is a scalar callable. Consecutive sorted points are joined by
    adaptive quadrature, so the cost is one small integral per point.
    """
    theta = wrap_angle(np.asarray(theta, dtype=float))
    order = np.argsort(theta)
    srt = theta[order]
    knots = np.concatenate([[-np.pi], srt])
    breaks = sorted(wrap_angle(np.asarray(breaks, dtype=float)).tolist()) if len(breaks) else []
    pieces = np.empty(len(srt))
    for i in range(len(srt)):
        lo, hi = knots[i], knots[i + 1]
        if hi <= lo:
            pieces[i] = 0.0
            continue
        pts = [b for b in breaks if lo < b < hi] or None
        pieces[i] = integrate_arc(lambda t: float(density(t)), lo, hi, spec, pts)
    out = np.empty_like(srt)
    out[order] = np.cumsum(pieces)
    return out


# --------------------------------------------------------------------------
# modes


@dataclass(frozen=True)
class ModeReport:
    modes: list
    antimodes: list
    kind: str


def _gcpc_dlog(d, gamma, rho):
    """d/dtheta log f as a function of d = theta - omega."""
    c, sn = np.cos(d), np.sin(d)
    s = np.sqrt(gamma**2 + 1.0)
    b = c**2 + sn**2 / rho
    E = np.sqrt(b) * s - gamma * c
    return -sn * _gcpc_stationary(d, gamma, rho) / (rho * b * E)


def _gcpc_stationary(d, gamma, rho):
    # the factor multiplying sin(d) in the derivative numerator (scaled by rho)
    c, sn = np.cos(d), np.sin(d)
    s = np.sqrt(gamma**2 + 1.0)
    b = c**2 + sn**2 / rho
    E = np.sqrt(b) * s - gamma * c
    return 2.0 * (1.0 - rho) * c * E + gamma


def gcpc_modes(p: GcpcParams, n_bracket: int = 512) -> ModeReport:
    """Locate the modes of a GCPC density.

    Stationary points are d = 0, d = pi and the roots of the non-trivial
    factor of the derivative numerator, bracketed on ``n_bracket`` points in
    (0, pi) and refined by Brent's method. Each is classified by the sign of
    the derivative on either side.
    """
    g, rho = p.gamma, p.rho
    if g == 0:
        raise ValueError("modes undefined for a zero location vector")
    grid = np.linspace(0.0, np.pi, n_bracket + 1)[1:-1]
    h = _gcpc_stationary(grid, g, rho)
    roots = []
    for i in np.nonzero(np.sign(h[:-1]) * np.sign(h[1:]) < 0)[0]:
        roots.append(optimize.brentq(_gcpc_stationary, grid[i], grid[i + 1], args=(g, rho), xtol=1e-14))
    candidates = [0.0, np.pi] + roots + [-r for r in roots]
    modes, antimodes = [], []
    for d in candidates:
        eps = 1e-6
        left = _gcpc_dlog(d - eps, g, rho)
        right = _gcpc_dlog(d + eps, g, rho)
        theta = float(wrap_angle(p.omega + d))
        val = float(gcpc_density(theta, p))
        if left > 0 and right < 0:
            modes.append((theta, val))
        elif left < 0 and right > 0:
            antimodes.append((theta, val))
    modes.sort(key=lambda m: -m[1])
    kind = "unimodal" if len(modes) <= 1 else "bimodal"
    return ModeReport(modes=modes, antimodes=antimodes, kind=kind)


def grid_mode_count(density_values) -> int:
    """Number of strict local maxima of a periodic sampled function."""
    f = np.asarray(density_values)
    return int(np.sum((f > np.roll(f, 1)) & (f > np.roll(f, -1))))
