"""Coordinate conversions, frames and rotations shared by the circular and
spherical families.

Internally every direction is a Cartesian unit vector. Angles live in
(-pi, pi].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateDirectionError(ValueError):
    """Raised when a tangent frame cannot be built for a location vector."""


def arctan2(y, x):
    """Two-argument arctangent with the six-case convention.

    Differs from :func:`numpy.arctan2` only on signed zeros: ``y = -0.0``
    with ``x < 0`` returns ``+pi`` so the range is always (-pi, pi].
    Raises ``ValueError`` at the origin.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any((x == 0) & (y == 0)):
        raise ValueError("arctan2 is undefined at x = y = 0")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        base = np.arctan(y / x)
    out = np.where(
        x > 0,
        base,
        np.where(
            x < 0,
            np.where(y >= 0, base + np.pi, base - np.pi),
            np.where(y > 0, np.pi / 2, -np.pi / 2),
        ),
    )
    # base - pi rounds to -pi when y < 0 is tiny; keep the range half-open
    out = np.where(out <= -np.pi, np.pi, out)
    return out[()] if out.ndim == 0 else out


def wrap_angle(theta):
    """Map any real angle into (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    out = np.pi - np.mod(np.pi - theta, 2 * np.pi)
    return out[()] if out.ndim == 0 else out


def angle_to_unit(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def unit_to_angle(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return arctan2(y[..., 1], y[..., 0])


def normalize(x, axis=-1) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x, axis=axis, keepdims=True)


def spherical_to_cartesian(colat, lon) -> np.ndarray:
    """Colatitude from +z and longitude east from +x (radians) to unit vectors."""
    colat = np.asarray(colat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    s = np.sin(colat)
    return np.stack([s * np.cos(lon), s * np.sin(lon), np.cos(colat)], axis=-1)


def cartesian_to_spherical(y):
    y = np.asarray(y, dtype=float)
    colat = np.arccos(np.clip(y[..., 2], -1.0, 1.0))
    lon = np.arctan2(y[..., 1], y[..., 0])
    return colat, lon


@dataclass(frozen=True)
class TangentFrame3:
    xi1_tilde: np.ndarray
    xi2_tilde: np.ndarray
    xi3: np.ndarray

    def as_matrix(self) -> np.ndarray:
        """Rows are (xi1_tilde, xi2_tilde, xi3)."""
        return np.vstack([self.xi1_tilde, self.xi2_tilde, self.xi3])


def tangent_frame(mu) -> TangentFrame3:
    """Orthonormal frame whose third axis is ``mu / |mu|``.

    The first two axes follow the fixed construction used by the elliptically
    symmetric families; it breaks down when ``mu`` is parallel to the first
    coordinate axis, in which case :class:`DegenerateDirectionError` is raised.
    """
    mu = np.asarray(mu, dtype=float)
    gamma = np.linalg.norm(mu)
    mu0 = np.hypot(mu[1], mu[2])
    if gamma == 0 or mu0 == 0:
        raise DegenerateDirectionError(
            "tangent frame undefined: location is zero or parallel to the first axis"
        )
    xi1 = np.array([-mu0**2, mu[0] * mu[1], mu[0] * mu[2]]) / (gamma * mu0)
    xi2 = np.array([0.0, -mu[2], mu[1]]) / mu0
    return TangentFrame3(xi1, xi2, mu / gamma)


def tangent_frames(mu) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised :func:`tangent_frame` for an ``(n, 3)`` array of locations.

    Returns three ``(n, 3)`` arrays. Rows with a degenerate location are NaN.
    """
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    gamma = np.linalg.norm(mu, axis=1)
    mu0 = np.hypot(mu[:, 1], mu[:, 2])
    with np.errstate(divide="ignore", invalid="ignore"):
        xi1 = np.stack(
            [-mu0**2, mu[:, 0] * mu[:, 1], mu[:, 0] * mu[:, 2]], axis=1
        ) / (gamma * mu0)[:, None]
        xi2 = np.stack([np.zeros_like(mu0), -mu[:, 2], mu[:, 1]], axis=1) / mu0[:, None]
        xi3 = mu / gamma[:, None]
    return xi1, xi2, xi3


def rotate_tangent_pair(frame: TangentFrame3, psi: float):
    c, s = np.cos(psi), np.sin(psi)
    xi1 = frame.xi1_tilde * c + frame.xi2_tilde * s
    xi2 = -frame.xi1_tilde * s + frame.xi2_tilde * c
    return xi1, xi2


def _rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(b):
    c, s = np.cos(b), np.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def euler_to_rotation(a: float, b: float, c: float, reflect: bool = False) -> np.ndarray:
    """Z-Y-Z Euler rotation, optionally followed by diag(1, 1, -1)."""
    R = _rot_z(a) @ _rot_y(b) @ _rot_z(c)
    if reflect:
        R = R @ np.diag([1.0, 1.0, -1.0])
    return R


def euler_grid(n_a: int, n_b: int, n_c: int, reflections: bool = True):
    """Enumerate Euler-angle grid points as ``(a, b, c, reflect)`` tuples.

    ``a`` and ``c`` are uniform on [0, 2pi), ``b`` includes both ends of
    [0, pi]. Grid ``(2n_a, 2n_b - 1, 2n_c)`` contains grid ``(n_a, n_b, n_c)``.
    """
    a_vals = 2 * np.pi * np.arange(n_a) / n_a
    b_vals = np.pi * np.arange(n_b) / max(n_b - 1, 1) if n_b > 1 else np.zeros(1)
    c_vals = 2 * np.pi * np.arange(n_c) / n_c
    flags = (False, True) if reflections else (False,)
    return [
        (a, b, c, r)
        for r in flags
        for a in a_vals
        for b in b_vals
        for c in c_vals
    ]
