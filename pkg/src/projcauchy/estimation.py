"""Maximum likelihood fitting for the circular and spherical models.

Every fitter returns a :class:`FitResult`. Parameter vectors use the natural
scale of each model (see ``MODEL_PARAM_NAMES``); optimisation runs on an
unconstrained scale internally (log rho, logit lambda).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.special import erfcx, expit, logit

from . import circular as C
from . import spherical as S
from .geometry import angle_to_unit, arctan2, cartesian_to_spherical, normalize, spherical_to_cartesian

LOG_2PI = np.log(2 * np.pi)

MODEL_PARAM_NAMES = {
    "cipc": ("mu1", "mu2"),
    "gcpc": ("mu1", "mu2", "rho"),
    "wc": ("omega", "lambda"),
    "pn": ("mu1", "mu2"),
    "sipc": ("mu1", "mu2", "mu3"),
    "sespc": ("mu1", "mu2", "mu3", "theta1", "theta2"),
    "sc": ("colatitude", "longitude", "lambda"),
    "esag": ("mu1", "mu2", "mu3", "gamma1", "gamma2"),
    "iag": ("mu1", "mu2", "mu3"),
}
CIRCULAR_MODELS = ("cipc", "gcpc", "wc", "pn")
SPHERICAL_MODELS = ("sipc", "sespc", "sc", "esag", "iag")


class FitError(RuntimeError):
    """Raised when no start produced a finite log-likelihood."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by the optimisers.

    ``restarts=None`` selects the model default (50 for GCPC and SESPC
    profile stages, 1 otherwise).
    """

    max_iterations: int = 5000
    tolerance: float = 1e-8
    restarts: int | None = None
    seed: int | None = 0

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.restarts is not None and self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")

    def n_restarts(self, default: int) -> int:
        return default if self.restarts is None else self.restarts


@dataclass
class FitResult:
    model: str
    loglik: float
    estimates: np.ndarray
    names: tuple
    params: object
    converged: bool
    iterations: int = 0
    starts_used: int = 1
    std_errors: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "model": self.model,
            "loglik": float(self.loglik),
            "estimates": {k: float(v) for k, v in zip(self.names, self.estimates)},
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "starts_used": int(self.starts_used),
            "std_errors": None
            if self.std_errors is None
            else {k: float(v) for k, v in zip(self.names, self.std_errors)},
            "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()},
        }
        return out


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


# --------------------------------------------------------------------------
# generic optimisers


def nelder_mead(objective: Callable, x0, cfg: OptimizerConfig = OptimizerConfig()):
    """Minimise ``objective`` with the Nelder-Mead simplex method.

    Terminates when both the simplex spread and the objective spread fall
    below ``cfg.tolerance`` or after ``cfg.max_iterations`` iterations.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    f0 = objective(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the starting point")
    res = optimize.minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "xatol": cfg.tolerance,
            "fatol": cfg.tolerance,
            "maxiter": cfg.max_iterations,
            "maxfev": 4 * cfg.max_iterations,
            "adaptive": x0.size > 3,
        },
    )
    return res.x, float(res.fun)


def _bfgs(fun, x0, jac=True, cfg: OptimizerConfig = OptimizerConfig()):
    """BFGS followed by a simplex polish when BFGS reports failure."""
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore")
        res = optimize.minimize(
            fun, x0, jac=jac, method="BFGS",
            options={"gtol": 1e-7, "maxiter": cfg.max_iterations},
        )
        x, f, nit, ok = res.x, float(res.fun), int(res.nit), bool(res.success)
        if not ok and res.status == 2 and np.linalg.norm(res.jac) < 1e-4:
            # line search stalled at the optimum: the gradient is already small
            ok = True
        if not ok or not np.isfinite(f):
            g = (lambda z: fun(z)[0]) if jac is True else fun
            start = x if np.isfinite(f) else np.asarray(x0, dtype=float)
            try:
                x2, f2 = nelder_mead(g, start, cfg)
            except ValueError:
                x2, f2 = start, np.inf
            if f2 <= f or not np.isfinite(f):
                x, f = x2, f2
            ok = np.isfinite(f)
    return x, f, nit, ok


def numeric_hessian(fun: Callable, x, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    H = np.empty((k, k))
    f0 = fun(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        H[i, i] = (fun(x + ei) - 2 * f0 + fun(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)
            ) / (4 * h[i] * h[j])
    return H


def numeric_gradient(fun: Callable, x, rel_step: float = 1e-5) -> np.ndarray:
    """Central differences with one Richardson extrapolation step (error of
    order ``h**4``), robust to parameters multiplying large covariates."""
    x = np.asarray(x, dtype=float)
    h = rel_step * np.maximum(1.0, np.abs(x))
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h[i]
        d1 = (fun(x + e) - fun(x - e)) / (2 * h[i])
        d2 = (fun(x + e / 2) - fun(x - e / 2)) / h[i]
        g[i] = (4 * d2 - d1) / 3
    return g


# --------------------------------------------------------------------------
# data handling


def as_circle_data(data) -> np.ndarray:
    """Accept angles ``(n,)`` or unit vectors ``(n, 2)``; return unit vectors."""
    a = np.asarray(data, dtype=float)
    if a.ndim == 1:
        return angle_to_unit(a)
    if a.ndim == 2 and a.shape[1] == 2:
        return normalize(a)
    raise ValueError("circular data must be angles or (n, 2) unit vectors")


def as_sphere_data(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError("spherical data must be an (n, 3) array")
    return normalize(a)


def mean_direction(y) -> np.ndarray:
    m = y.mean(axis=0)
    r = np.linalg.norm(m)
    if r < 1e-12:
        out = np.zeros(y.shape[1])
        out[0] = 1.0
        return out
    return m / r


def _start_location(y) -> np.ndarray:
    # moment mean direction, unit norm
    return mean_direction(y)


def safe_location(mu) -> tuple[np.ndarray, bool]:
    """Nudge a location lying on the first coordinate axis so the tangent
    frame is defined. Returns the location and whether it was changed."""
    mu = np.array(mu, dtype=float)
    if np.hypot(mu[1], mu[2]) < 1e-12:
        mu[1] += 1e-8
        return mu, True
    return mu, False


# --------------------------------------------------------------------------
# CIPC: analytic derivatives


def cipc_loglik_mu(mu, y):
    """CIPC log-likelihood with gradient and Hessian in the location vector.

    ``y`` holds unit vectors ``(n, 2)``.
    """
    mu = np.asarray(mu, dtype=float)
    n = y.shape[0]
    g2 = mu @ mu
    s = np.sqrt(g2 + 1.0)
    alpha = y @ mu
    perp2 = (y[:, 0] * mu[1] - y[:, 1] * mu[0]) ** 2
    D = np.where(alpha > 0, (1.0 + perp2) / (s + alpha), s - alpha)
    ll = -np.sum(np.log(D)) - n * LOG_2PI
    v = mu / s - y  # (n, 2)
    grad = -np.sum(v / D[:, None], axis=0)
    dv = (np.eye(2) * s - np.outer(mu, mu) / s) / (g2 + 1.0)
    hess = -(
        dv * np.sum(1.0 / D)
        - np.einsum("ni,nj,n->ij", v, v, 1.0 / D**2)
    )
    return ll, grad, hess


def cipc_loglik_polar(omega, gamma, theta):
    """CIPC log-likelihood with gradient and Hessian in ``(omega, gamma)``."""
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    d = theta - omega
    c, sn = np.cos(d), np.sin(d)
    s = np.sqrt(gamma**2 + 1.0)
    den = np.where(
        gamma * c > 0,
        (1.0 + gamma**2 * sn**2) / (s + gamma * c),
        s - gamma * c,
    )
    ll = -np.sum(np.log(den)) - n * LOG_2PI
    q = gamma / s - c
    g_w = np.sum(gamma * sn / den)
    g_g = -np.sum(q / den)
    h_ww = np.sum(gamma**2 * sn**2 / den**2 - gamma * c / den)
    h_gg = np.sum(q**2 / den**2 - (1.0 / s - gamma**2 / s**3) / den)
    h_wg = np.sum(sn / (s * den**2))
    return ll, np.array([g_w, g_g]), np.array([[h_ww, h_wg], [h_wg, h_gg]])


# --------------------------------------------------------------------------
# GCPC: analytic derivatives from the polar form


def gcpc_obs_derivatives(c, sn, gamma, rho, hessian: bool = False):
    """Per-observation log density and its derivatives in ``(omega, gamma, rho)``.

    ``c`` and ``sn`` are ``cos`` and ``sin`` of ``theta - omega``; ``gamma``
    may be a scalar or one value per observation. Returns ``(ll, grad)`` with
    ``grad`` of shape ``(n, 3)``, plus ``hess`` ``(n, 3, 3)`` on request.
    """
    c = np.asarray(c, dtype=float)
    sn = np.asarray(sn, dtype=float)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), c.shape)
    s = np.sqrt(gamma**2 + 1.0)
    k = 1.0 - 1.0 / rho
    b = c**2 + sn**2 / rho
    u = np.sqrt(b)
    gc = gamma * c
    E = np.where(gc > 0, (b + gamma**2 * sn**2 / rho) / (u * s + gc), u * s - gc)
    ll = -LOG_2PI - 0.5 * np.log(rho) - np.log(u) - np.log(E)

    b_w = 2 * k * c * sn
    b_r = -(sn**2) / rho**2
    u_w = b_w / (2 * u)
    u_r = b_r / (2 * u)
    E_w = s * u_w - gamma * sn
    E_g = u * gamma / s - c
    E_r = s * u_r
    zero = np.zeros_like(c)
    du = np.stack([u_w, zero, u_r], axis=-1)
    dE = np.stack([E_w, E_g, E_r], axis=-1)
    grad = -du / u[..., None] - dE / E[..., None]
    grad[..., 2] -= 0.5 / rho
    if not hessian:
        return ll, grad

    b_ww = 2 * k * (sn**2 - c**2)
    b_rr = 2 * sn**2 / rho**3
    b_wr = 2 * sn * c / rho**2
    u_ww = b_ww / (2 * u) - b_w**2 / (4 * u**3)
    u_rr = b_rr / (2 * u) - b_r**2 / (4 * u**3)
    u_wr = b_wr / (2 * u) - b_w * b_r / (4 * u**3)
    d2u = np.zeros(c.shape + (3, 3))
    d2u[..., 0, 0] = u_ww
    d2u[..., 2, 2] = u_rr
    d2u[..., 0, 2] = d2u[..., 2, 0] = u_wr
    d2E = np.zeros(c.shape + (3, 3))
    d2E[..., 0, 0] = s * u_ww + gamma * c
    d2E[..., 1, 1] = u / s**3
    d2E[..., 2, 2] = s * u_rr
    d2E[..., 0, 1] = d2E[..., 1, 0] = u_w * gamma / s - sn
    d2E[..., 0, 2] = d2E[..., 2, 0] = s * u_wr
    d2E[..., 1, 2] = d2E[..., 2, 1] = u_r * gamma / s
    uu = u[..., None, None]
    EE = E[..., None, None]
    hess = -(d2u / uu - np.einsum("...i,...j->...ij", du, du) / uu**2)
    hess -= d2E / EE - np.einsum("...i,...j->...ij", dE, dE) / EE**2
    hess[..., 2, 2] += 0.5 / rho**2
    return ll, grad, hess


def gcpc_loglik_polar(omega, gamma, rho, theta, hessian: bool = True):
    """Summed GCPC log-likelihood with gradient (and Hessian) in
    ``(omega, gamma, rho)``."""
    d = np.asarray(theta, dtype=float) - omega
    out = gcpc_obs_derivatives(np.cos(d), np.sin(d), gamma, rho, hessian=hessian)
    return tuple(np.sum(o, axis=0) for o in out)


def _gcpc_obs_mu(mu_rows, y, rho):
    """Per-observation GCPC log density and gradient in ``(mu, log rho)``.

    ``mu_rows`` is ``(2,)`` or ``(n, 2)``.
    """
    mu_rows = np.broadcast_to(mu_rows, y.shape)
    m1, m2 = mu_rows[:, 0], mu_rows[:, 1]
    g2 = m1**2 + m2**2
    g = np.sqrt(g2)
    c = (y[:, 0] * m1 + y[:, 1] * m2) / g
    sn = (y[:, 1] * m1 - y[:, 0] * m2) / g
    ll, gr = gcpc_obs_derivatives(c, sn, g, rho)
    l_w, l_g, l_r = gr[:, 0], gr[:, 1], gr[:, 2]
    d_m1 = l_w * (-m2 / g2) + l_g * m1 / g
    d_m2 = l_w * (m1 / g2) + l_g * m2 / g
    return ll, np.stack([d_m1, d_m2, rho * l_r], axis=1)


# --------------------------------------------------------------------------
# log-likelihood evaluators on the natural parameter vector


def _loglik_cipc(x, y):
    return float(np.sum(C.cipc_logpdf_vec(y, x[:2])))


def _loglik_gcpc(x, y):
    mu, rho = x[:2], x[2]
    if rho <= 0:
        return -np.inf
    g = np.hypot(*mu)
    if g == 0:
        return float(np.sum(C._gcpc_log_kernel(y[:, 0], y[:, 1], 0.0, rho)))
    c = (y @ mu) / g
    sn = (y[:, 1] * mu[0] - y[:, 0] * mu[1]) / g
    return float(np.sum(C._gcpc_log_kernel(c, sn, g, rho)))


def _loglik_wc(x, y):
    omega, lam = x
    if not 0 <= lam < 1:
        return -np.inf
    th = arctan2(y[:, 1], y[:, 0])
    return float(np.sum(C.wc_logpdf(th, C.WcParams(omega, lam))))


def _loglik_pn(x, y):
    return float(np.sum(C.pn_logpdf_vec(y, x[:2])))


def _loglik_sipc(x, y):
    return float(np.sum(S.sipc_logpdf(y, x[:3])))


def _loglik_sespc(x, y):
    mu, _ = safe_location(x[:3])
    return float(np.sum(S.sespc_logpdf(y, mu, x[3:5])))


def _loglik_sc(x, y):
    colat, lon, lam = x
    if not 0 <= lam < 1:
        return -np.inf
    m = spherical_to_cartesian(colat, lon)
    return float(np.sum(S.sc_logpdf(y, m, lam)))


def _loglik_esag(x, y):
    mu, _ = safe_location(x[:3])
    return float(np.sum(S.esag_logpdf(y, mu, x[3:5])))


def _loglik_iag(x, y):
    return float(np.sum(S.iag_logpdf(y, x[:3])))


LOGLIK = {
    "cipc": _loglik_cipc,
    "gcpc": _loglik_gcpc,
    "wc": _loglik_wc,
    "pn": _loglik_pn,
    "sipc": _loglik_sipc,
    "sespc": _loglik_sespc,
    "sc": _loglik_sc,
    "esag": _loglik_esag,
    "iag": _loglik_iag,
}


def params_from_vector(model: str, x):
    x = np.asarray(x, dtype=float)
    if model == "cipc":
        return C.CipcParams(x[:2])
    if model == "gcpc":
        return C.GcpcParams(x[:2], x[2])
    if model == "wc":
        return C.WcParams(float(C.wrap_angle(x[0])), x[1])
    if model == "pn":
        return C.PnParams(x[:2])
    if model == "sipc":
        return S.SipcParams(x[:3])
    if model == "sespc":
        return S.SespcParams(x[:3], x[3:5])
    if model == "sc":
        return S.ScParams(spherical_to_cartesian(x[0], x[1]), x[2])
    if model == "esag":
        return S.EsagParams(x[:3], x[3:5])
    if model == "iag":
        return S.IagParams(x[:3])
    raise ValueError(f"unknown model {model!r}")


def _result(model, x, ll, ok, nit=0, starts=1, **diag) -> FitResult:
    x = np.asarray(x, dtype=float)
    return FitResult(
        model=model,
        loglik=float(ll),
        estimates=x,
        names=MODEL_PARAM_NAMES[model],
        params=params_from_vector(model, x),
        converged=bool(ok and np.isfinite(ll)),
        iterations=int(nit),
        starts_used=int(starts),
        diagnostics=dict(diag),
    )


# --------------------------------------------------------------------------
# circular fitters


def newton_raphson_cipc(data, start=None, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    """Newton-Raphson with step halving for the CIPC location vector.

    ``start`` may be a location vector or an ``(omega, gamma)`` pair given as
    a dict with those keys. Falls back to Nelder-Mead when the Hessian is not
    negative definite.
    """
    y = as_circle_data(data)
    if y.shape[0] < 2:
        raise ValueError("at least two observations are required")
    if start is None:
        mu = _start_location(y)
    elif isinstance(start, dict):
        mu = start["gamma"] * np.array([np.cos(start["omega"]), np.sin(start["omega"])])
    else:
        mu = np.asarray(start, dtype=float).copy()
    diag = {}
    ll, g, H = cipc_loglik_mu(mu, y)
    it = 0
    used_fallback = False
    for it in range(1, cfg.max_iterations + 1):
        if np.linalg.norm(g) < 1e-10:
            break
        try:
            np.linalg.cholesky(-H)
            step = np.linalg.solve(-H, g)
        except np.linalg.LinAlgError:
            if used_fallback:
                step = g / max(1.0, np.linalg.norm(g))
            else:
                used_fallback = True
                diag["fallback"] = "nelder_mead"
                mu, _ = nelder_mead(lambda z: -_loglik_cipc(z, y), mu, cfg)
                ll, g, H = cipc_loglik_mu(mu, y)
                continue
        t = 1.0
        while True:
            cand = mu + t * step
            ll_c, g_c, H_c = cipc_loglik_mu(cand, y)
            if ll_c >= ll - 1e-12 or t < 1e-10:
                break
            t *= 0.5
        converged_step = np.max(np.abs(cand - mu)) < 1e-14
        mu, ll, g, H = cand, ll_c, g_c, H_c
        if converged_step:
            break
    gnorm = float(np.linalg.norm(g))
    diag["gradient_norm"] = gnorm
    return _result("cipc", mu, ll, gnorm < 1e-8 * max(1, y.shape[0]), it, 1, **diag)


def fit_cipc(data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    y = as_circle_data(data)
    best = newton_raphson_cipc(y, None, cfg)
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.n_restarts(1) - 1):
        r = newton_raphson_cipc(y, rng.normal(0, 2, 2), cfg)
        if r.loglik > best.loglik:
            best = r
    best.starts_used = cfg.n_restarts(1)
    return best


def _gcpc_negll(z, y):
    rho = np.exp(z[2])
    ll, gr = _gcpc_obs_mu(z[:2], y, rho)
    return -np.sum(ll), -np.sum(gr, axis=0)


def _gcpc_profile(logrho, y, starts, cfg):
    """Maximise over the location at fixed ``log rho``; returns (negll, mu)."""
    rho = np.exp(logrho)

    def f(m):
        ll, gr = _gcpc_obs_mu(m, y, rho)
        return -np.sum(ll), -np.sum(gr[:, :2], axis=0)

    best = (np.inf, None)
    for m0 in starts:
        x, v, _, _ = _bfgs(f, m0, True, cfg)
        if v < best[0]:
            best = (v, x)
    return best


def fit_gcpc(data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    """Two-stage GCPC fit.

    Stage 1 profiles the log-likelihood over ``log rho`` (coarse grid, then a
    bounded scalar search), starting the location from the CIPC estimate, its
    reflection and random draws. Stage 2 refines all parameters jointly from
    the profile optimum and from ``restarts - 1`` random joint starts.
    """
    y = as_circle_data(data)
    if y.shape[0] < 3:
        raise ValueError("at least three observations are required")
    rng = np.random.default_rng(cfg.seed)
    cipc = fit_cipc(y, OptimizerConfig(cfg.max_iterations, cfg.tolerance, 1, cfg.seed))
    m_c = cipc.estimates
    if np.hypot(*m_c) < 1e-6:
        m_c = np.array([1e-3, 0.0])
    scale = max(1.0, np.hypot(*m_c))
    n_starts = cfg.n_restarts(50)

    # stage 1: profile over log rho
    grid = np.linspace(np.log(0.01), np.log(20.0), 13)
    warm = m_c
    prof = []
    for lr in grid:
        v, m = _gcpc_profile(lr, y, [warm, m_c, -m_c], cfg)
        prof.append((v, lr, m))
        warm = m
    i_best = int(np.argmin([p[0] for p in prof]))
    lo = grid[max(i_best - 1, 0)]
    hi = grid[min(i_best + 1, len(grid) - 1)]
    m_best = prof[i_best][2]
    cache = {}

    def prof_f(lr):
        v, m = _gcpc_profile(lr, y, [m_best], cfg)
        cache[lr] = m
        return v

    r = optimize.minimize_scalar(prof_f, bounds=(lo, hi), method="bounded",
                                 options={"xatol": 1e-6})
    z_prof = np.r_[cache.get(r.x, m_best), r.x]

    # stage 2: joint refinement from the profile optimum plus random starts
    starts = [z_prof, np.r_[m_c, 0.0]]
    for _ in range(n_starts - 1):
        ang = rng.uniform(-np.pi, np.pi)
        g = rng.uniform(0.1, 2.0) * scale
        starts.append(np.r_[g * np.cos(ang), g * np.sin(ang), rng.uniform(np.log(0.05), np.log(5.0))])
    best = (np.inf, None, 0, False)
    for z0 in starts:
        x, v, nit, ok = _bfgs(lambda z: _gcpc_negll(z, y), z0, True, cfg)
        if v < best[0] - 1e-12:
            best = (v, x, nit, ok)
    v, z, nit, ok = best
    est = np.r_[z[:2], np.exp(z[2])]
    ll = _loglik_gcpc(est, y)
    if ll < cipc.loglik:
        # never report less than the nested model
        est, ll = np.r_[cipc.estimates, 1.0], cipc.loglik
    return _result("gcpc", est, ll, ok, nit, len(starts), profile_log_rho=float(r.x))


def fit_wc(data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    """Wrapped Cauchy fit on ``z`` in the plane: ``lambda = tanh(|z|)``,
    ``omega = arg z``."""
    y = as_circle_data(data)
    th = arctan2(y[:, 1], y[:, 0])

    def negll(z):
        r = np.hypot(*z)
        lam = np.tanh(r)
        if lam >= 1:
            return np.inf
        om = np.arctan2(z[1], z[0])
        return -np.sum(np.log1p(-lam**2) - LOG_2PI - np.log1p(lam**2 - 2 * lam * np.cos(th - om)))

    m = y.mean(axis=0)
    rbar = min(np.linalg.norm(m), 0.95)
    z0 = np.arctanh(max(rbar, 1e-3)) * mean_direction(y)
    x, f, nit, ok = _bfgs(negll, z0, "3-point", cfg)
    est = np.array([np.arctan2(x[1], x[0]), np.tanh(np.hypot(*x))])
    return _result("wc", est, -f, np.isfinite(f), nit)


def _pn_negll(mu, y):
    a = y @ mu
    sc = 0.5 * erfcx(-a / np.sqrt(2.0))
    g = 1.0 / np.sqrt(2 * np.pi) + a * sc
    ll = np.sum(-0.5 * LOG_2PI - 0.5 * (mu @ mu) + np.log(g))
    w = a + sc / g
    grad = y.T @ w - y.shape[0] * mu
    return -ll, -grad


def fit_pn(data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    y = as_circle_data(data)
    x, f, nit, ok = _bfgs(lambda m: _pn_negll(m, y), _start_location(y), True, cfg)
    return _result("pn", x, -f, ok, nit)


# --------------------------------------------------------------------------
# spherical fitters


def _iag_negll(mu, y):
    a = y @ mu
    sc = 0.5 * erfcx(-a / np.sqrt(2.0))
    m2 = (1.0 + a**2) * sc + a / np.sqrt(2 * np.pi)
    g = 1.0 / np.sqrt(2 * np.pi) + a * sc
    ll = np.sum(-np.log(2 * np.pi) - 0.5 * (mu @ mu) + np.log(m2))
    w = a + 2.0 * g / m2
    return -ll, -(y.T @ w - y.shape[0] * mu)


def fit_iag(data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    y = as_sphere_data(data)
    x, f, nit, ok = _bfgs(lambda m: _iag_negll(m, y), _start_location(y), True, cfg)
    return _result("iag", x, -f, ok, nit)


def fit_sipc(data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    y = as_sphere_data(data)
    negll = lambda m: -_loglik_sipc(m, y)
    x, f, nit, ok = _bfgs(negll, _start_location(y), "3-point", cfg)
    return _result("sipc", x, -f, ok, nit)


def _fit_elliptic(model, y, base: FitResult, cfg, default_restarts):
    """Shared driver for SESPC and ESAG: start the shape at zero from the
    nested isotropic fit, plus random shape starts."""
    loglik = LOGLIK[model]
    negll = lambda z: -loglik(z, y)
    rng = np.random.default_rng(cfg.seed)
    mu0, moved = safe_location(base.estimates)
    starts = [np.r_[mu0, 0.0, 0.0]]
    for _ in range(cfg.n_restarts(default_restarts) - 1):
        starts.append(np.r_[mu0 * rng.uniform(0.7, 1.3), rng.normal(0, 1.0, 2)])
    best = (np.inf, None, 0, False)
    for z0 in starts:
        x, v, nit, ok = _bfgs(negll, z0, "3-point", cfg)
        if v < best[0] - 1e-12:
            best = (v, x, nit, ok)
    v, x, nit, ok = best
    diag = {}
    x_mu, moved2 = safe_location(x[:3])
    if moved or moved2:
        diag["location_perturbed"] = 1e-8
    x = np.r_[x_mu, x[3:]]
    ll = -v
    if ll < base.loglik:
        x, ll = np.r_[mu0, 0.0, 0.0], loglik(np.r_[mu0, 0.0, 0.0], y)
    return _result(model, x, ll, ok, nit, len(starts), **diag)


def fit_sespc(data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    """SESPC fit in the unconstrained ``(mu, theta)`` parameterisation."""
    y = as_sphere_data(data)
    base = fit_sipc(y, cfg)
    res = _fit_elliptic("sespc", y, base, cfg, 50)
    rho, psi = S.rho_psi_from_theta(*res.estimates[3:5])
    res.diagnostics.update(rho=rho, psi=psi)
    return res


def fit_esag(data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    y = as_sphere_data(data)
    base = fit_iag(y, cfg)
    return _fit_elliptic("esag", y, base, cfg, 1)


def fit_sc(data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    """Spherical Cauchy fit on ``(colatitude, longitude, logit lambda)``."""
    y = as_sphere_data(data)
    m0 = mean_direction(y)
    rbar = float(np.clip(np.linalg.norm(y.mean(axis=0)), 1e-3, 0.95))

    def negll(z):
        m = spherical_to_cartesian(z[0], z[1])
        return -np.sum(S.sc_logpdf(y, m, expit(z[2])))

    best = (np.inf, None, 0, False)
    # put the start away from the coordinate poles to keep longitude informative
    colat0, lon0 = cartesian_to_spherical(m0)
    for z0 in ([colat0, lon0, logit(rbar)], [colat0, lon0, logit(0.5)]):
        x, v, nit, ok = _bfgs(negll, np.asarray(z0, float), "3-point", cfg)
        if v < best[0]:
            best = (v, x, nit, ok)
    v, x, nit, ok = best
    m = spherical_to_cartesian(x[0], x[1])
    colat, lon = cartesian_to_spherical(m)
    return _result("sc", np.array([colat, lon, expit(x[2])]), -v, ok, nit)


FITTERS = {
    "cipc": fit_cipc,
    "gcpc": fit_gcpc,
    "wc": fit_wc,
    "pn": fit_pn,
    "sipc": fit_sipc,
    "sespc": fit_sespc,
    "sc": fit_sc,
    "esag": fit_esag,
    "iag": fit_iag,
}


def fit(model: str, data, cfg: OptimizerConfig = OptimizerConfig()) -> FitResult:
    try:
        fitter = FITTERS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}") from None
    return fitter(data, cfg)


# --------------------------------------------------------------------------
# standard errors


def standard_errors(res: FitResult, data) -> FitResult:
    """Attach standard errors from the numeric observed information.

    The information is the negated central-difference Hessian of the
    log-likelihood at the estimate, in the natural parameterisation. When it
    is not positive definite the errors are left absent and the reason is
    recorded in ``diagnostics``.
    """
    model = res.model
    y = as_circle_data(data) if model in CIRCULAR_MODELS else as_sphere_data(data)
    ll = LOGLIK[model]
    H = numeric_hessian(lambda x: ll(x, y), res.estimates)
    info = -H
    if not np.all(np.isfinite(info)):
        res.std_errors = None
        res.diagnostics["std_errors"] = "non-finite information"
        return res
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        res.std_errors = None
        res.diagnostics["std_errors"] = "information not positive definite"
        return res
    if np.linalg.cond(info) > 1e12:
        # flat direction, e.g. a location running off to infinity
        res.std_errors = None
        res.diagnostics["std_errors"] = "information ill-conditioned"
        return res
    res.std_errors = np.sqrt(np.diag(np.linalg.inv(info)))
    return res
