"""Numerical integration on the half line, the circle and the sphere."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .geometry import normalize


class QuadratureError(RuntimeError):
    """Integration failed to reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_subdivisions: int = 500
    sphere_min_order: int = 16
    sphere_max_order: int = 1024
    sphere_tol: float = 1e-11

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.sphere_tol <= 0:
            raise ValueError("tolerances must be positive")


DEFAULT_SPEC = QuadratureSpec()


def _quad(f, a, b, spec: QuadratureSpec, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                f, a, b,
                epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                limit=spec.max_subdivisions, points=points,
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return val, err


def integrate_radial(f, spec: QuadratureSpec = DEFAULT_SPEC, peak=None) -> float:
    """Integrate ``f`` over (0, inf) after mapping ``r = u / (1 - u)``.

    ``peak`` is an optional location in ``r`` where the integrand is
    concentrated; it is passed to the adaptive rule as a breakpoint.
    """

    def g(u):
        if u >= 1.0:
            return 0.0
        one_m = 1.0 - u
        return f(u / one_m) / one_m**2

    points = None
    if peak is not None and peak > 0 and np.isfinite(peak):
        points = [peak / (1.0 + peak)]
    return _quad(g, 0.0, 1.0, spec, points)[0]


def integrate_circle(f, spec: QuadratureSpec = DEFAULT_SPEC, center: float = 0.0) -> float:
    """Integrate a function of the angle over one full turn.

    The turn is taken as (center - pi, center + pi], so a density peaked at
    ``center`` never straddles the cut. ``f`` receives scalar angles.
    """
    return _quad(f, center - np.pi, center + np.pi, spec, points=[center])[0]


_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)
SHORT_ARC = 1e-6


def integrate_arc(f, lower: float, upper: float, spec: QuadratureSpec = DEFAULT_SPEC, points=None):
    """Integrate a scalar function over [lower, upper].

    Arcs shorter than ``SHORT_ARC`` use a fixed 5-point Gauss-Legendre rule;
    the adaptive rule misreports such intervals as badly behaved."""
    h = upper - lower
    if 0 < abs(h) < SHORT_ARC:
        mid = 0.5 * (lower + upper)
        return 0.5 * h * sum(w * f(mid + 0.5 * h * x) for x, w in zip(_GL_X, _GL_W))
    return _quad(f, lower, upper, spec, points=points)[0]


@lru_cache(maxsize=32)
def _sphere_nodes(order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    n_az = 2 * order
    phi = 2 * np.pi * np.arange(n_az) / n_az
    st = np.sqrt(1.0 - t**2)
    pts = np.empty((order, n_az, 3))
    pts[..., 0] = st[:, None] * np.cos(phi)[None, :]
    pts[..., 1] = st[:, None] * np.sin(phi)[None, :]
    pts[..., 2] = t[:, None]
    weights = np.repeat(w[:, None] * (2 * np.pi / n_az), n_az, axis=1)
    pts.setflags(write=False)
    weights.setflags(write=False)
    return pts.reshape(-1, 3), weights.reshape(-1)


def pole_rotation(pole) -> np.ndarray:
    """A rotation matrix taking +z onto ``pole``."""
    z = normalize(np.asarray(pole, dtype=float))
    helper = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    x = normalize(helper - helper @ z * z)
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def sphere_rule(order: int, pole=None):
    """Product Gauss-Legendre x trapezoid nodes and weights on the unit sphere."""
    pts, w = _sphere_nodes(int(order))
    if pole is not None:
        pts = pts @ pole_rotation(pole).T
    return pts, w


def integrate_sphere(f, spec: QuadratureSpec = DEFAULT_SPEC, pole=None, return_order=False):
    """Integrate a vectorised ``f((m, 3) array) -> (m,)`` over the sphere.

    The order doubles from ``spec.sphere_min_order`` until two successive
    estimates agree to ``spec.sphere_tol`` (relative, with an absolute floor
    of the same size).
    """
    order = spec.sphere_min_order
    prev = None
    while order <= spec.sphere_max_order:
        pts, w = sphere_rule(order, pole)
        val = float(np.dot(w, f(pts)))
        if prev is not None and abs(val - prev) <= spec.sphere_tol * max(1.0, abs(val)):
            return (val, order) if return_order else val
        prev = val
        order *= 2
    raise QuadratureError(
        f"sphere integral did not converge up to order {spec.sphere_max_order}"
    )
