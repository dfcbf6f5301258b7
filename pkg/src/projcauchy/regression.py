"""Regression of circular and spherical responses on covariates.

The location of observation ``i`` is ``mu_i = B' x_i`` where ``x_i`` is a row
of the design matrix (intercept included). Circular models: SPML (projected
normal), CIPC and GCPC. Spherical models: SIPC, SESPC, IAG and ESAG, with an
optional rotation ``Q`` of the responses, ``Q y_i ~ model(B' x_i, shape)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import erfcx

from . import circular as C
from . import spherical as S
from .estimation import (
    OptimizerConfig,
    _bfgs,
    _gcpc_obs_mu,
    as_circle_data,
    as_sphere_data,
    numeric_hessian,
)
from .geometry import arctan2, euler_grid, euler_to_rotation, normalize

LOG_2PI = np.log(2 * np.pi)


class RankDeficientError(ValueError):
    """Design matrix does not have full column rank."""


@dataclass
class RegressionFit:
    model: str
    coefficients: np.ndarray
    loglik: float
    converged: bool
    nuisance: dict | None = None
    rotation: np.ndarray | None = None
    std_errors: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def fitted_means(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coefficients

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "coefficients": self.coefficients.tolist(),
            "nuisance": self.nuisance,
            "rotation": None if self.rotation is None else self.rotation.tolist(),
            "loglik": float(self.loglik),
            "converged": bool(self.converged),
            "std_errors": None if self.std_errors is None else self.std_errors.tolist(),
            "diagnostics": self.diagnostics,
        }


def design_matrix(covariates=None, n: int | None = None) -> np.ndarray:
    """Prepend an intercept column to ``covariates`` (``(n, q)`` or ``None``)."""
    if covariates is None:
        return np.ones((n, 1))
    Z = np.asarray(covariates, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    return np.column_stack([np.ones(Z.shape[0]), Z])


def check_design(X, n_obs: int, dim: int, extra: int = 0) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != n_obs:
        raise ValueError("design matrix rows must match the number of responses")
    if not np.all(np.isfinite(X)):
        raise ValueError("design matrix contains non-finite values")
    p = X.shape[1]
    if np.linalg.matrix_rank(X) < p:
        raise RankDeficientError("design matrix is rank deficient")
    if n_obs <= dim * p + extra:
        raise ValueError(f"need more than {dim * p + extra} observations for {p} covariates")
    return X


def _ls_start(y, X):
    """Least-squares fit of the unit responses, a cheap coefficient start."""
    B, *_ = np.linalg.lstsq(X, y, rcond=None)
    return B


# --------------------------------------------------------------------------
# circular regression


def _spml_negll(b, y, X):
    p = X.shape[1]
    B = b.reshape(p, 2)
    M = X @ B
    a = np.einsum("ij,ij->i", y, M)
    sc = 0.5 * erfcx(-a / np.sqrt(2.0))
    g = 1.0 / np.sqrt(2 * np.pi) + a * sc
    ll = np.sum(-0.5 * LOG_2PI - 0.5 * np.sum(M**2, axis=1) + np.log(g))
    w = a + sc / g
    G = w[:, None] * y - M
    return -ll, -(X.T @ G).ravel()


def _cipc_reg_negll(b, y, X):
    p = X.shape[1]
    M = X @ b.reshape(p, 2)
    g2 = np.sum(M**2, axis=1)
    s = np.sqrt(g2 + 1.0)
    alpha = np.einsum("ij,ij->i", y, M)
    perp2 = (y[:, 0] * M[:, 1] - y[:, 1] * M[:, 0]) ** 2
    D = np.where(alpha > 0, (1.0 + perp2) / (s + alpha), s - alpha)
    ll = -np.sum(np.log(D)) - y.shape[0] * LOG_2PI
    G = -(M / s[:, None] - y) / D[:, None]
    return -ll, -(X.T @ G).ravel()


def _gcpc_reg_obs(b, y, X):
    p = X.shape[1]
    M = X @ b[: 2 * p].reshape(p, 2)
    # a vanishing location makes the anisotropy axis undefined; keep it finite
    small = np.hypot(M[:, 0], M[:, 1]) < 1e-12
    if np.any(small):
        M = M.copy()
        M[small] = [1e-12, 0.0]
    return _gcpc_obs_mu(M, y, np.exp(b[2 * p]))


def _gcpc_reg_negll(b, y, X):
    ll, G = _gcpc_reg_obs(b, y, X)
    return -np.sum(ll), -np.r_[(X.T @ G[:, :2]).ravel(), np.sum(G[:, 2])]


def _newton_polish(fun, x, f, steps: int = 4):
    """A few Newton steps on an analytic-gradient objective, Hessian from
    central differences of the gradient. BFGS can stall with a gradient of
    order 1e-5 when covariates are on a large scale; this removes it."""
    for _ in range(steps):
        g = fun(x)[1]
        if not np.all(np.isfinite(g)) or np.max(np.abs(g)) < 1e-10:
            break
        k = x.size
        H = np.empty((k, k))
        for j in range(k):
            h = 1e-5 * max(1.0, abs(x[j]))
            e = np.zeros(k)
            e[j] = h
            H[:, j] = (fun(x + e)[1] - fun(x - e)[1]) / (2 * h)
        H = 0.5 * (H + H.T)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        x_new = x - step
        f_new = fun(x_new)[0]
        if not np.isfinite(f_new) or f_new > f + 1e-12 * max(1.0, abs(f)):
            break
        x, f = x_new, f_new
    return x, f


def _best_of(fun, starts, cfg):
    best = (np.inf, None, 0, False)
    for z0 in starts:
        x, v, nit, ok = _bfgs(fun, z0, True, cfg)
        if v < best[0] - 1e-12:
            best = (v, x, nit, ok)
    v, x, nit, ok = best
    if x is not None and np.isfinite(v):
        x, v = _newton_polish(fun, x, v)
    return v, x, nit, ok


def spml_fit(y, X, cfg: OptimizerConfig = OptimizerConfig()) -> RegressionFit:
    """Projected normal regression with identity covariance."""
    y = as_circle_data(y)
    X = check_design(X, y.shape[0], 2)
    p = X.shape[1]
    starts = [np.zeros(2 * p), _ls_start(y, X).ravel()]
    v, b, nit, ok = _best_of(lambda z: _spml_negll(z, y, X), starts, cfg)
    return RegressionFit("spml", b.reshape(p, 2), -v, ok, diagnostics={"iterations": nit})


def cipc_reg_fit(y, X, cfg: OptimizerConfig = OptimizerConfig()) -> RegressionFit:
    """CIPC regression; concentration varies with the fitted location."""
    y = as_circle_data(y)
    X = check_design(X, y.shape[0], 2)
    p = X.shape[1]
    b_ls = _ls_start(y, X)
    starts = [b_ls.ravel(), 3.0 * b_ls.ravel(), np.r_[normalize(y.mean(0)), np.zeros(2 * p - 2)]]
    v, b, nit, ok = _best_of(lambda z: _cipc_reg_negll(z, y, X), starts, cfg)
    return RegressionFit("cipc", b.reshape(p, 2), -v, ok, diagnostics={"iterations": nit})


def gcpc_reg_fit(y, X, cfg: OptimizerConfig = OptimizerConfig()) -> RegressionFit:
    """GCPC regression, fitted in two stages.

    Stage 1 profiles the log-likelihood over ``log rho`` on a coarse grid
    followed by a bounded search, warm-starting the coefficients from the
    CIPC regression. Stage 2 refines everything jointly from the profile
    optimum and from ``restarts - 1`` perturbed starts.
    """
    y = as_circle_data(y)
    X = check_design(X, y.shape[0], 2, extra=1)
    p = X.shape[1]
    rng = np.random.default_rng(cfg.seed)
    base = cipc_reg_fit(y, X, cfg)
    b_c = base.coefficients.ravel()

    def prof(lr, starts):
        def f(z):
            v, g = _gcpc_reg_negll(np.r_[z, lr], y, X)
            return v, g[: 2 * p]

        v, b, _, _ = _best_of(f, starts, cfg)
        return v, b

    grid = np.linspace(np.log(0.01), np.log(20.0), 13)
    warm = b_c
    table = []
    for lr in grid:
        v, b = prof(lr, [warm, b_c])
        table.append((v, lr, b))
        warm = b
    i = int(np.argmin([t[0] for t in table]))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    b_best = table[i][2]
    cache = {}

    def prof_f(lr):
        v, b = prof(lr, [b_best])
        cache[lr] = b
        return v

    r = optimize.minimize_scalar(prof_f, bounds=(lo, hi), method="bounded",
                                 options={"xatol": 1e-5})
    starts = [np.r_[cache.get(r.x, b_best), r.x], np.r_[b_c, 0.0]]
    scale = np.maximum(np.abs(b_c), 0.1)
    for _ in range(cfg.n_restarts(50) - 1):
        starts.append(np.r_[b_c + rng.normal(0, 0.5, b_c.size) * scale,
                            rng.uniform(np.log(0.05), np.log(5.0))])
    v, z, nit, ok = _best_of(lambda z: _gcpc_reg_negll(z, y, X), starts, cfg)
    ll = -v
    if ll < base.loglik:
        z, ll = np.r_[b_c, 0.0], base.loglik
    return RegressionFit(
        "gcpc", z[: 2 * p].reshape(p, 2), ll, ok,
        nuisance={"rho": float(np.exp(z[2 * p]))},
        diagnostics={"iterations": nit, "starts": len(starts)},
    )


def circular_reg_loglik(model: str, B, y, X, rho: float = 1.0) -> float:
    y = as_circle_data(y)
    b = np.asarray(B, dtype=float).ravel()
    if model == "spml":
        return -_spml_negll(b, y, X)[0]
    if model == "cipc":
        return -_cipc_reg_negll(b, y, X)[0]
    if model == "gcpc":
        return -_gcpc_reg_negll(np.r_[b, np.log(rho)], y, X)[0]
    raise ValueError(f"unknown circular regression model {model!r}")


# --------------------------------------------------------------------------
# spherical regression


_SHAPE_MODELS = {"sespc": "sipc", "esag": "iag"}


def _sphere_obs_loglik(model, M, y, shape):
    if model == "sipc":
        return S.sipc_logpdf(y, M)
    if model == "iag":
        return S.iag_logpdf(y, M)
    # keep every location off the first coordinate axis so its frame exists
    off = np.hypot(M[:, 1], M[:, 2]) < 1e-12
    if np.any(off):
        M = M.copy()
        M[off, 1] += 1e-8
    if model == "sespc":
        return S.sespc_logpdf(y, M, shape)
    if model == "esag":
        return S.esag_logpdf(y, M, shape)
    raise ValueError(f"unknown spherical regression model {model!r}")


def sphere_reg_loglik(model, B, y, X, shape=(0.0, 0.0), rotation=None) -> float:
    y = as_sphere_data(y)
    if rotation is not None:
        y = y @ np.asarray(rotation).T
    M = np.asarray(X, dtype=float) @ np.asarray(B, dtype=float)
    return float(np.sum(_sphere_obs_loglik(model, M, y, np.asarray(shape, dtype=float))))


def _iag_reg_negll(b, y, X):
    p = X.shape[1]
    M = X @ b.reshape(p, 3)
    a = np.einsum("ij,ij->i", y, M)
    sc = 0.5 * erfcx(-a / np.sqrt(2.0))
    m2 = (1.0 + a**2) * sc + a / np.sqrt(2 * np.pi)
    g = 1.0 / np.sqrt(2 * np.pi) + a * sc
    ll = np.sum(-np.log(2 * np.pi) - 0.5 * np.sum(M**2, axis=1) + np.log(m2))
    w = a + 2.0 * g / m2
    return -ll, -(X.T @ (w[:, None] * y - M)).ravel()


def _fit_sphere_fixed_rotation(model, y, X, starts, cfg):
    """Fit coefficients (and shape) for responses already rotated."""
    p = X.shape[1]
    k = 3 * p
    if model == "iag":
        fun, jac = (lambda z: _iag_reg_negll(z, y, X)), True
    else:
        def fun(z):
            M = X @ z[:k].reshape(p, 3)
            v = -np.sum(_sphere_obs_loglik(model, M, y, z[k:]))
            return v if np.isfinite(v) else np.inf
        jac = "3-point"
    best = (np.inf, None, 0, False)
    for z0 in starts:
        x, v, nit, ok = _bfgs(fun, z0, jac, cfg)
        if v < best[0] - 1e-12:
            best = (v, x, nit, ok)
    return best


def _rotation_key(Q):
    return tuple(np.round(Q, 9).ravel() + 0.0)


def _unique_rotations(cells):
    out, seen = [], set()
    for cell in cells:
        Q = euler_to_rotation(*cell)
        key = _rotation_key(Q)
        if key not in seen:
            seen.add(key)
            out.append((key, Q))
    return out


def _nested_grids(grid):
    """The grid itself followed by every coarser grid it contains."""
    out = [tuple(grid)]
    na, nb, nc = grid
    while na % 2 == 0 and nc % 2 == 0 and nb % 2 == 1 and nb > 1:
        na, nb, nc = na // 2, (nb + 1) // 2, nc // 2
        out.append((na, nb, nc))
    return out


def _skew(w):
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def _exp_so3(w):
    """Rotation matrix of the rotation vector ``w`` (Rodrigues formula)."""
    t = np.linalg.norm(w)
    K = _skew(w)
    if t < 1e-8:
        return np.eye(3) + K + 0.5 * K @ K
    return np.eye(3) + np.sin(t) / t * K + (1 - np.cos(t)) / t**2 * K @ K


def sphere_reg_fit(
    model: str,
    y,
    X,
    cfg: OptimizerConfig = OptimizerConfig(),
    rotation: str = "grid",
    grid: tuple[int, int, int] = (12, 6, 12),
    refine: bool = True,
    refine_top: int = 3,
) -> RegressionFit:
    """Spherical regression with an estimable rotation of the responses.

    ``rotation="grid"`` searches a Z-Y-Z Euler grid crossed with a reflection
    flag. Each distinct rotation is fitted from the isotropic solution. With
    ``refine=True`` the ``refine_top`` best cells of the grid, and of every
    coarser grid nested in it, are polished jointly with the coefficients
    through a rotation vector ``w``, ``Q = exp([w]) Q_cell``; the best result
    is kept. Because the fit of a cell depends only on its rotation, doubling
    the grid resolution cannot lower the returned log-likelihood.

    For SIPC and IAG every rotation can be absorbed into the coefficients, so
    the search is skipped and the identity is reported. ``rotation="identity"``
    fixes ``Q = I``.
    """
    model = model.lower()
    if model not in ("sipc", "sespc", "iag", "esag"):
        raise ValueError(f"unknown spherical regression model {model!r}")
    y = as_sphere_data(y)
    X = check_design(X, y.shape[0], 3)
    p = X.shape[1]
    k = 3 * p
    has_shape = model in _SHAPE_MODELS
    seed = 0 if cfg.seed is None else int(cfg.seed)

    # isotropic fit with Q = I; seeds every rotation cell
    iso = "iag" if model in ("iag", "esag") else "sipc"
    b_ls = _ls_start(y, X).ravel()
    v_iso, b_iso, nit, ok = _fit_sphere_fixed_rotation(iso, y, X, [b_ls, 3 * b_ls], cfg)
    diag = {"iterations": nit}

    def starts_for(b, key=()):
        st = [np.r_[b, 0.0, 0.0]]
        # random shape starts seeded by the rotation, not by visiting order
        rng = np.random.default_rng([seed] + [int(round(1e6 * (v + 2.0))) for v in key])
        for _ in range(cfg.n_restarts(1) - 1):
            st.append(np.r_[b, rng.normal(0, 1.0, 2)])
        return st

    if not has_shape:
        B = b_iso.reshape(p, 3)
        diag["rotation"] = "absorbed into coefficients"
        return RegressionFit(model, B, -v_iso, ok, rotation=np.eye(3), diagnostics=diag)

    if rotation == "identity":
        v, z, nit, ok = _fit_sphere_fixed_rotation(model, y, X, starts_for(b_iso), cfg)
        return RegressionFit(
            model, z[:k].reshape(p, 3), -v, ok,
            nuisance=_shape_dict(model, z[k:]), rotation=np.eye(3), diagnostics=diag,
        )
    if rotation != "grid":
        raise ValueError("rotation must be 'grid' or 'identity'")

    B_iso = b_iso.reshape(p, 3)
    cells = {}
    for key, Q in _unique_rotations(euler_grid(*grid)):
        b0 = (B_iso @ Q.T).ravel()
        v, z, nit, ok = _fit_sphere_fixed_rotation(model, y @ Q.T, X, starts_for(b0, key), cfg)
        cells[key] = (v, z, ok, Q)

    def ranked(keys):
        # ties broken by the rotation itself so the order is grid independent
        return sorted(keys, key=lambda kk: (cells[kk][0], kk))

    best_key = ranked(cells)[0]
    v, z, ok, Q = cells[best_key]
    diag.update(grid=list(grid), cells=len(cells))
    if refine:
        seeds = []
        for g in _nested_grids(grid):
            sub = [kk for kk, _ in _unique_rotations(euler_grid(*g))]
            for kk in ranked(sub)[:refine_top]:
                if kk not in seeds:
                    seeds.append(kk)
        for kk in ranked(seeds):
            _, zc, _, Qc = cells[kk]

            def fun(w, Qc=Qc):
                Qw = _exp_so3(w[:3]) @ Qc
                M = X @ w[3: 3 + k].reshape(p, 3)
                val = -np.sum(_sphere_obs_loglik(model, M, y @ Qw.T, w[3 + k:]))
                return val if np.isfinite(val) else np.inf

            w, vw, _, okw = _bfgs(fun, np.r_[np.zeros(3), zc], "3-point", cfg)
            if vw < v - 1e-12:
                v, z, ok = vw, w[3:], okw
                Q = _exp_so3(w[:3]) @ Qc
        diag["refined_cells"] = len(seeds)
    return RegressionFit(
        model, z[:k].reshape(p, 3), -v, ok,
        nuisance=_shape_dict(model, z[k:]), rotation=Q, diagnostics=diag,
    )


def _shape_dict(model, shape):
    if model == "sespc":
        rho, psi = S.rho_psi_from_theta(*shape)
        return {"theta1": float(shape[0]), "theta2": float(shape[1]), "rho": rho, "psi": psi}
    return {"gamma1": float(shape[0]), "gamma2": float(shape[1])}


# --------------------------------------------------------------------------
# standard errors and fit quality


def regression_standard_errors(fit: RegressionFit, y, X) -> RegressionFit:
    """Numeric observed-information standard errors for the coefficients
    (and nuisance parameters, ``log rho`` for GCPC, ``theta`` or ``gamma``
    for the elliptical spherical models). The rotation is held fixed."""
    X = np.asarray(X, dtype=float)
    B = fit.coefficients
    shape = B.shape
    if fit.model in ("spml", "cipc", "gcpc"):
        y = as_circle_data(y)
        if fit.model == "gcpc":
            x0 = np.r_[B.ravel(), np.log(fit.nuisance["rho"])]
            f = lambda z: -_gcpc_reg_negll(z, y, X)[0]
        else:
            x0 = B.ravel()
            f = lambda z: circular_reg_loglik(fit.model, z.reshape(shape), y, X)
    else:
        ys = as_sphere_data(y)
        if fit.rotation is not None:
            ys = ys @ fit.rotation.T
        extra = []
        if fit.nuisance:
            extra = [v for key, v in fit.nuisance.items() if key in ("theta1", "theta2", "gamma1", "gamma2")]
        x0 = np.r_[B.ravel(), extra]
        k = B.size
        f = lambda z: sphere_reg_loglik(fit.model, z[:k].reshape(shape), ys, X, z[k:] if extra else (0.0, 0.0))
    info = -numeric_hessian(f, x0)
    try:
        np.linalg.cholesky(info)
        fit.std_errors = np.sqrt(np.diag(np.linalg.inv(info)))
    except np.linalg.LinAlgError:
        fit.std_errors = None
        fit.diagnostics["std_errors"] = "information not positive definite"
    return fit


def circular_correlation(observed, fitted) -> float:
    """Circular correlation between two sequences of angles."""
    a = np.asarray(observed, dtype=float)
    b = np.asarray(fitted, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be 1-d arrays of equal length")
    if a.size < 3:
        raise ValueError("at least three pairs are required")
    ma = arctan2(np.sin(a).sum(), np.cos(a).sum())
    mb = arctan2(np.sin(b).sum(), np.cos(b).sum())
    sa, sb = np.sin(a - ma), np.sin(b - mb)
    den = np.sqrt(np.sum(sa**2) * np.sum(sb**2))
    if den < 1e-300:
        raise ValueError("a sequence has zero circular variance")
    return float(np.sum(sa * sb) / den)
