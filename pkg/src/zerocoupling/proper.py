"""Properness of zero-couplings and criteria on measure descriptions.

A zero-coupling is proper when it feeds no mass from the origin into the
punctured space.  For analytic homogeneous measures, sufficient and
necessary criteria are evaluated on angular grids: positive-inner-product
reachability, the infinite-cone condition, support homogeneity, and the
1D half-line mass comparison with symbolic infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import Cone, HomogeneousMeasure, mass_cone
from .monotone import SupportSet
from .transport import ORIGIN, ZeroCoupling

__all__ = [
    "ResidualDecomposition",
    "residual_decomposition",
    "check_proper",
    "check_necessary",
    "check_cone_condition",
    "check_homogeneous_support",
    "check_1d_criterion",
    "INFINITE_MASS",
    "HalfLineMasses",
    "DEFAULT_EPS_GRID",
]

DEFAULT_EPS_GRID = (0.5, 0.25, 0.1, 0.05, 0.01)


@dataclass(frozen=True)
class ResidualDecomposition:
    left_residual: float   # gamma({0} x punctured space)
    right_residual: float  # gamma(punctured space x {0})
    per_target: dict       # j -> gamma({0} x {y_j})
    per_source: dict       # i -> gamma({x_i} x {0})


def residual_decomposition(c: ZeroCoupling) -> ResidualDecomposition:
    per_target = {}
    per_source = {}
    left = 0.0
    right = 0.0
    for src, dst, mass in c.entries:
        if src == ORIGIN:
            left += mass
            per_target[dst] = per_target.get(dst, 0.0) + mass
        elif dst == ORIGIN:
            right += mass
            per_source[src] = per_source.get(src, 0.0) + mass
    return ResidualDecomposition(left, right, per_target, per_source)


def check_proper(c: ZeroCoupling, tol: float = 1e-9) -> bool:
    """True iff the origin feeds (almost) nothing: left residual <= tol * total."""
    total = 0.0
    for _, _, mass in c.entries:
        total += mass
    return residual_decomposition(c).left_residual <= tol * max(total, 1e-300)


def _support_directions(m: HomogeneousMeasure, resolution: int) -> np.ndarray:
    """Grid of unit directions carrying angular mass (threshold 1e-12)."""
    if m.angular_kind == "discrete":
        return m.directions
    lo, hi = m.density_support
    theta = lo + (hi - lo) * (np.arange(resolution) + 0.5) / resolution
    dens = np.asarray(m.density(theta), dtype=float)
    theta = theta[dens > 1e-12]
    if theta.size == 0:
        raise ValueError("empty angular support")
    return np.column_stack([np.cos(theta), np.sin(theta)])


@dataclass(frozen=True)
class NecessaryReport:
    holds: bool
    failing_direction: np.ndarray | None = None


def check_necessary(mu: HomogeneousMeasure, nu: HomogeneousMeasure,
                    resolution: int = 64) -> NecessaryReport:
    """For every target support direction, some source support direction has
    a strictly positive inner product with it.

    The source grid is 4x finer than the target grid so that exact
    orthogonality between matching midpoint grids cannot mask a genuinely
    overlapping pair of angular supports.
    """
    nu_dirs = _support_directions(nu, resolution)
    mu_dirs = _support_directions(mu, 4 * resolution)
    dots = nu_dirs @ mu_dirs.T
    reachable = np.any(dots > 0.0, axis=1)
    if np.all(reachable):
        return NecessaryReport(True)
    bad = int(np.argmin(reachable))
    return NecessaryReport(False, nu_dirs[bad])


@dataclass(frozen=True)
class ConeConditionReport:
    holds: bool
    undetermined: bool
    per_direction: tuple  # of (direction, eps or None)


def check_cone_condition(mu: HomogeneousMeasure, nu: HomogeneousMeasure,
                         eps_grid=DEFAULT_EPS_GRID,
                         resolution: int = 64) -> ConeConditionReport:
    """Search, per target support direction y, for an aperture eps with
    mu(H+(y, eps)) infinite.

    The condition is monotone in eps (smaller eps means a bigger cone), so
    only the smallest grid value is decisive; a direction failing at the
    smallest eps is reported as undetermined, not false.
    """
    eps_grid = sorted(eps_grid, reverse=True)
    report = []
    all_ok = True
    for y in _support_directions(nu, resolution):
        found = None
        for eps in eps_grid:
            if mass_cone(mu, Cone(y, eps)).infinite:
                found = eps
                break
        report.append((y, found))
        if found is None:
            all_ok = False
    return ConeConditionReport(all_ok, not all_ok, tuple(report))


def check_homogeneous_support(S: SupportSet, alphas, lam_grid,
                              tol: float) -> bool:
    """Every scaled pair (lam^a x, lam^b y) stays within tol of the set.

    The set is a finite sample from a (conical) support, so scaled pairs
    that leave the sampled radial range cannot have a nearby witness and are
    skipped — unless every scaled pair leaves the range for some lam, in
    which case all of them are checked strictly (a scaling that empties the
    window is never certified vacuously).
    """
    if S.size == 0:
        raise ValueError("empty support set")
    a, b = alphas
    rx = np.linalg.norm(S.xs, axis=1)
    ry = np.linalg.norm(S.ys, axis=1)
    for lam in lam_grid:
        xs = lam ** a * S.xs
        ys = lam ** b * S.ys
        srx = np.linalg.norm(xs, axis=1)
        sry = np.linalg.norm(ys, axis=1)
        inside = ((srx >= np.min(rx)) & (srx <= np.max(rx))
                  & (sry >= np.min(ry)) & (sry <= np.max(ry)))
        if not np.any(inside):
            inside = np.ones(S.size, dtype=bool)
        xs = xs[inside]
        ys = ys[inside]
        # nearest-pair distance in the product space
        d2 = (np.sum((xs[:, None, :] - S.xs[None, :, :]) ** 2, axis=2)
              + np.sum((ys[:, None, :] - S.ys[None, :, :]) ** 2, axis=2))
        if np.max(np.min(d2, axis=1)) > tol * tol:
            return False
    return True


class _InfiniteMass:
    """Symbolic infinite mass for the extended-real half-line comparison."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE_MASS"


INFINITE_MASS = _InfiniteMass()


@dataclass(frozen=True)
class HalfLineMasses:
    """1D measure summary: mass on (0, inf) and on (-inf, 0); each entry is
    a nonnegative float or INFINITE_MASS."""
    mass_pos: object
    mass_neg: object


def _ge(m1, m2) -> bool:
    if m1 is INFINITE_MASS:
        return True
    if m2 is INFINITE_MASS:
        return False
    return float(m1) >= float(m2)


def check_1d_criterion(mu: HalfLineMasses, nu: HalfLineMasses) -> bool:
    """Source dominates target on each half-line (extended-real comparison)."""
    return _ge(mu.mass_pos, nu.mass_pos) and _ge(mu.mass_neg, nu.mass_neg)
