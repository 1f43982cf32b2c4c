"""Series solution for line-source scattering off a homogeneous cylinder.

Independent reference for validating the grid solver: a lossless dielectric
cylinder of relative permittivity eps_r centered at the origin, illuminated
by the same unit line current the solver uses, with the exp(+i omega t)
convention throughout.  The expansion enforces continuity of the field and
its radial derivative at the cylinder surface; truncation is chosen well past
the interior electrical radius, where the terms decay faster than
geometrically.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import hankel2, jv

__all__ = ["cylinder_scattered_field", "cylinder_interior_field"]


def _jvp(n, x):
    return 0.5 * (jv(n - 1, x) - jv(n + 1, x))


def _h2vp(n, x):
    return 0.5 * (hankel2(n - 1, x) - hankel2(n + 1, x))


def _orders(k1a: float) -> np.ndarray:
    nmax = int(math.ceil(k1a)) + 25
    return np.arange(-nmax, nmax + 1)


def _coefficients(k0: float, eps_r: float, radius: float, rho0: float):
    """Per-order exterior (scattered) and interior expansion coefficients."""
    k1 = k0 * math.sqrt(eps_r)
    n = _orders(k1 * radius)
    qn = -0.25j * hankel2(n, k0 * rho0)
    num = k1 * _jvp(n, k1 * radius) * jv(n, k0 * radius) \
        - k0 * jv(n, k1 * radius) * _jvp(n, k0 * radius)
    den = k0 * jv(n, k1 * radius) * _h2vp(n, k0 * radius) \
        - k1 * _jvp(n, k1 * radius) * hankel2(n, k0 * radius)
    an = qn * num / den
    bn = (qn * jv(n, k0 * radius) + an * hankel2(n, k0 * radius)) / jv(n, k1 * radius)
    return n, an, bn


def cylinder_scattered_field(omega: float, eps_r: float, radius: float,
                             source: tuple[float, float],
                             points: np.ndarray,
                             amplitude: complex = 1.0) -> np.ndarray:
    """Scattered field at exterior points for a cylinder at the origin.

    Parameters
    ----------
    omega : float
        Angular frequency, rad/s.
    eps_r : float
        Relative permittivity of the cylinder (>= 1, lossless).
    radius : float
        Cylinder radius in meters.
    source : (float, float)
        Line-source position, outside the cylinder.
    points : ndarray, shape (M, 2)
        Evaluation points, all outside the cylinder.
    amplitude : complex
        Source strength multiplying the unit-current field.

    Returns
    -------
    ndarray, shape (M,), complex
    """
    from .fdfd import C0

    k0 = omega / C0
    rho0 = math.hypot(*source)
    if rho0 <= radius:
        raise ValueError("source must lie outside the cylinder")
    phi0 = math.atan2(source[1], source[0])
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    rho = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(rho <= radius):
        raise ValueError("evaluation points must lie outside the cylinder")
    phi = np.arctan2(pts[:, 1], pts[:, 0])

    n, an, _ = _coefficients(k0, eps_r, radius, rho0)
    terms = an[None, :] * hankel2(n[None, :], k0 * rho[:, None]) \
        * np.exp(1j * n[None, :] * (phi - phi0)[:, None])
    return amplitude * terms.sum(axis=1)


def cylinder_interior_field(omega: float, eps_r: float, radius: float,
                            source: tuple[float, float],
                            points: np.ndarray,
                            amplitude: complex = 1.0) -> np.ndarray:
    """Total field at points inside the cylinder (same conventions as above)."""
    from .fdfd import C0

    k0 = omega / C0
    k1 = k0 * math.sqrt(eps_r)
    rho0 = math.hypot(*source)
    if rho0 <= radius:
        raise ValueError("source must lie outside the cylinder")
    phi0 = math.atan2(source[1], source[0])
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    rho = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(rho > radius):
        raise ValueError("evaluation points must lie inside the cylinder")
    phi = np.arctan2(pts[:, 1], pts[:, 0])

    n, _, bn = _coefficients(k0, eps_r, radius, rho0)
    terms = bn[None, :] * jv(n[None, :], k1 * rho[:, None]) \
        * np.exp(1j * n[None, :] * (phi - phi0)[:, None])
    return amplitude * terms.sum(axis=1)
