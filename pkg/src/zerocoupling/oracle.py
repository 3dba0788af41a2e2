"""Closed-form ground truth: an explicit convex potential on the right
half-plane whose gradient pushes one 1-homogeneous measure onto another.

psi(x, y) = y^4 / x^2 for x > 0, 0 at the origin, +inf elsewhere; its
gradient (-2 y^4/x^3, 4 y^3/x^2) is 1-homogeneous and maps the measure with
density x^3/(x^2+y^2)^3 on {x > 0} onto the measure with density
64 |u|^3/(4 u^2 + v^2)^3 on {u < 0}.  Every end-to-end test in the package
checks against these formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .measures import (ANGULAR_DENSITIES, HomogeneousMeasure, discretize)
from .monotone import push_forward

__all__ = [
    "psi55",
    "grad55",
    "mu55_density",
    "nu55_density",
    "mu55_polar_angular",
    "nu55_polar_angular",
    "mu55_measure",
    "nu55_measure",
    "verify_pushforward_55",
    "PushforwardReport",
]


def psi55(p):
    """Potential value and gradient at a 2D point.

    Returns (value, grad) with grad None outside the open right half-plane;
    value is +inf off {x > 0} except 0 at the origin.
    """
    x, y = float(p[0]), float(p[1])
    if x > 0.0:
        val = y ** 4 / x ** 2
        return val, np.array([-2.0 * y ** 4 / x ** 3, 4.0 * y ** 3 / x ** 2])
    if x == 0.0 and y == 0.0:
        return 0.0, None
    return math.inf, None


def grad55(points):
    """Vectorized gradient on {x > 0}; points (n, 2) -> (n, 2)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0.0):
        raise ValueError("domain violation: gradient defined on x > 0 only")
    return np.column_stack([-2.0 * y ** 4 / x ** 3, 4.0 * y ** 3 / x ** 2])


def mu55_density(x, y):
    """Source density x^3/(x^2+y^2)^3 on the open right half-plane."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.where(x > 0.0, x ** 3 / np.maximum(x ** 2 + y ** 2, 1e-300) ** 3, 0.0)
    return out if out.ndim else float(out)


def nu55_density(u, v):
    """Target density 64|u|^3/(4u^2+v^2)^3 on the open left half-plane."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.where(u < 0.0,
                   64.0 * np.abs(u) ** 3 / np.maximum(4.0 * u ** 2 + v ** 2, 1e-300) ** 3,
                   0.0)
    return out if out.ndim else float(out)


def mu55_polar_angular(theta):
    """(cos theta)^3 on (-pi/2, pi/2); radial part is r^{-2} dr."""
    theta = np.asarray(theta, dtype=float)
    out = np.where(np.cos(theta) > 0.0, np.cos(theta) ** 3, 0.0)
    return out if out.ndim else float(out)


def nu55_polar_angular(theta):
    """64|cos theta|^3/(1+3 cos^2 theta)^3 on (pi/2, 3pi/2).

    This is the polar form of the Cartesian density above: with
    u = r cos(theta), v = r sin(theta) the denominator 4u^2 + v^2 becomes
    r^2 (1 + 3 cos^2 theta), and the area element contributes r, giving
    angular x r^{-2} dr.
    """
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    out = np.where(c < 0.0, 64.0 * np.abs(c) ** 3 / (1.0 + 3.0 * c ** 2) ** 3, 0.0)
    return out if out.ndim else float(out)


def mu55_measure() -> HomogeneousMeasure:
    dens, support = ANGULAR_DENSITIES["cos3_right"]
    return HomogeneousMeasure(dim=2, alpha=1.0, angular_kind="density",
                              density=dens, density_support=support,
                              smooth=True, density_name="cos3_right")


def nu55_measure() -> HomogeneousMeasure:
    dens, support = ANGULAR_DENSITIES["cos3_left_pushed"]
    return HomogeneousMeasure(dim=2, alpha=1.0, angular_kind="density",
                              density=dens, density_support=support,
                              smooth=True, density_name="cos3_left_pushed")


def _image_radius(theta):
    """||grad(cos theta, sin theta)||: radial stretch of the unit circle."""
    s, c = np.sin(theta), np.cos(theta)
    return np.sqrt(4.0 * s ** 8 / c ** 6 + 16.0 * s ** 6 / c ** 4)


def _image_angle(theta):
    """Direction angle of grad(cos theta, sin theta)."""
    s, c = np.sin(theta), np.cos(theta)
    return np.arctan2(4.0 * s ** 3 / c ** 2, -2.0 * s ** 4 / c ** 3)


# Test dictionary: cone-and-annulus sets in the image plane whose preimage
# is guaranteed to sit inside the source annulus [1, 10], so the pushed
# truncated measure agrees with the closed-form target there.  The cone
# boundaries are images of dyadic source angles (multiples of pi/16), which
# are angular cell edges for every resolution divisible by 16 -- atoms are
# then never split by a cone boundary.
_WINDOWS = ((math.pi / 8, 3 * math.pi / 16),
            (-3 * math.pi / 16, -math.pi / 8))
_ANNULI = ((1.1, 2.6), (1.3, 2.2))
_R_LO, _R_HI = 1.0, 10.0


def _dictionary():
    sets = []
    for (t1, t2) in _WINDOWS:
        tt = np.linspace(t1, t2, 2001)
        rho = _image_radius(tt)
        rho_min, rho_max = float(np.min(rho)), float(np.max(rho))
        phi1 = float(_image_angle(t1))
        phi2 = float(_image_angle(t2))
        lo, hi = min(phi1, phi2), max(phi1, phi2)
        center = 0.5 * (lo + hi)
        eps = math.cos(0.5 * (hi - lo))
        direction = np.array([math.cos(center), math.sin(center)])
        for (a, b) in _ANNULI:
            if not (a >= rho_max * _R_LO and b <= rho_min * _R_HI):
                raise AssertionError("test annulus not covered by the image "
                                     "of the source annulus")
            ang, _ = quad(nu55_polar_angular, lo, hi,
                          epsabs=1e-12, epsrel=1e-12, limit=200)
            expected = ang * (1.0 / a - 1.0 / b)
            name = f"cone[{t1:.4f},{t2:.4f}]xann[{a},{b}]"
            sets.append((name, direction, eps, a, b, expected))
    return sets


@dataclass(frozen=True)
class PushforwardReport:
    passed: bool
    tol: float
    max_mass_rel_error: float
    max_grad_fd_error: float
    max_value_homog_error: float
    right_half_plane_mass: float
    details: tuple  # of (name, expected, actual, rel_error)


_FD_GRID = [(0.5, -1.5), (0.5, 0.7), (1.0, 1.0), (1.0, -0.3),
            (2.0, 2.0), (2.0, -1.0), (3.0, 0.5), (0.7, 2.5)]


def _grad_fd_error(h: float = 1e-6) -> float:
    worst = 0.0
    for (x, y) in _FD_GRID:
        _, g = psi55((x, y))
        fd = np.array([
            (psi55((x + h, y))[0] - psi55((x - h, y))[0]) / (2 * h),
            (psi55((x, y + h))[0] - psi55((x, y - h))[0]) / (2 * h),
        ])
        err = float(np.max(np.abs(fd - g) / np.maximum(1.0, np.abs(g))))
        worst = max(worst, err)
    return worst


def _value_homog_error(lams=(0.5, 2.0, 10.0)) -> float:
    worst = 0.0
    for (x, y) in _FD_GRID:
        v, _ = psi55((x, y))
        for lam in lams:
            vl, _ = psi55((lam * x, lam * y))
            if v == 0.0:
                worst = max(worst, abs(vl))
            else:
                worst = max(worst, abs(vl - lam ** 2 * v) / abs(lam ** 2 * v))
    return worst


def verify_pushforward_55(resolution: int = 128, tol: float = 1e-3,
                          radial_factor: int = 64) -> PushforwardReport:
    """Push the discretized source through the gradient and compare cone and
    annulus masses in the image against the closed-form target.

    resolution is the angular cell count; it must be a multiple of 16 so
    that the dictionary cone boundaries coincide with cell edges.  The
    radial grid is radial_factor times finer to keep radial quantization
    below the tolerance.
    """
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    if resolution % 16 != 0:
        raise ValueError("resolution must be a multiple of 16")
    mu = mu55_measure()
    disc = discretize(mu, _R_LO, _R_HI, mode="quadrature",
                      resolution=resolution,
                      radial_resolution=radial_factor * resolution)
    pushed = push_forward(grad55, disc)
    pts = pushed.points
    w = pushed.weights
    radii = np.linalg.norm(pts, axis=1)
    units = pts / radii[:, None]
    details = []
    worst = 0.0
    for (name, direction, eps, a, b, expected) in _dictionary():
        inside = (units @ direction > eps) & (radii >= a) & (radii < b)
        actual = float(np.sum(w[inside]))
        rel = abs(actual - expected) / expected
        worst = max(worst, rel)
        details.append((name, expected, actual, rel))
    right_mass = float(np.sum(w[pts[:, 0] > 0.0]))
    fd_err = _grad_fd_error()
    homog_err = _value_homog_error()
    passed = (worst <= tol and fd_err <= 1e-6 and homog_err <= 1e-12
              and right_mass == 0.0)
    return PushforwardReport(passed, tol, worst, fd_err, homog_err,
                             right_mass, tuple(details))
