"""Uniform access to densities and samplers across parameter types."""
from __future__ import annotations

import numpy as np

from . import circular as C
from . import spherical as S

_CIRCLE_LOGPDF = {
    C.CipcParams: C.cipc_logpdf,
    C.GcpcParams: C.gcpc_logpdf,
    C.WcParams: C.wc_logpdf,
    C.PnParams: C.pn_logpdf,
}
_SPHERE_LOGPDF = {
    S.SipcParams: lambda y, p: S.sipc_logpdf(y, p.mu),
    S.SespcParams: lambda y, p: S.sespc_logpdf(y, p.mu, p.theta),
    S.ScParams: lambda y, p: S.sc_logpdf(y, p.mu, p.lam),
    S.EsagParams: lambda y, p: S.esag_logpdf(y, p.mu, p.gamma),
    S.IagParams: lambda y, p: S.iag_logpdf(y, p.mu),
}
_SAMPLERS = {
    C.CipcParams: C.sample_cipc,
    C.GcpcParams: C.sample_gcpc,
    C.WcParams: C.sample_wc,
    C.PnParams: C.sample_pn,
    S.SipcParams: S.sample_sipc,
    S.SespcParams: S.sample_sespc,
    S.ScParams: S.sample_sc,
    S.EsagParams: S.sample_esag,
    S.IagParams: S.sample_iag,
}


def domain(p) -> str:
    if type(p) in _CIRCLE_LOGPDF or isinstance(p, C.CpcParams):
        return "circle"
    if type(p) in _SPHERE_LOGPDF or isinstance(p, S.SpcParams):
        return "sphere"
    raise TypeError(f"unsupported parameter type {type(p).__name__}")


def logpdf(p, x):
    """Log density at angles (circle) or ``(..., 3)`` unit vectors (sphere)."""
    t = type(p)
    if t in _CIRCLE_LOGPDF:
        return _CIRCLE_LOGPDF[t](x, p)
    if t in _SPHERE_LOGPDF:
        return _SPHERE_LOGPDF[t](np.asarray(x, dtype=float), p)
    if t is C.CpcParams:
        return np.log(C.cpc_density(C.angle_to_unit(x), p))
    if t is S.SpcParams:
        return np.log(S.spc_density(x, p))
    raise TypeError(f"unsupported parameter type {t.__name__}")


def density(p, x):
    return np.exp(logpdf(p, x))


def sample(p, n: int, seed=None):
    try:
        return _SAMPLERS[type(p)](p, n, seed)
    except KeyError:
        raise TypeError(f"no sampler for {type(p).__name__}") from None


def location_direction(p) -> np.ndarray | None:
    """Unit vector of the location, used to align quadrature grids."""
    if isinstance(p, C.WcParams):
        return np.array([np.cos(p.omega), np.sin(p.omega)])
    mu = np.asarray(p.mu, dtype=float)
    g = np.linalg.norm(mu)
    return mu / g if g > 0 else None
