"""Discrete and analytic infinite measures on punctured Euclidean space.

Measures live on R^d minus the origin and are finite on every set bounded
away from 0, but may carry infinite total mass.  The analytic type is an
alpha-homogeneous measure given in polar form (angular part times an exact
Pareto radial part); the discrete type is a weighted point cloud used as its
finite proxy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

__all__ = [
    "DiscreteMeasure",
    "HomogeneousMeasure",
    "Cone",
    "ConeMass",
    "mass_annulus",
    "mass_cone",
    "discretize",
    "truncate_and_balance",
    "ANGULAR_DENSITIES",
]

_DENSITY_QUAD_TOL = 1e-12


def _ltr_sum(values) -> float:
    """Plain left-to-right accumulation; the reproducibility contract for totals."""
    acc = 0.0
    for v in values:
        acc += float(v)
    return acc


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atoms on R^d \\ {0}.

    points : (n, d) array, no atom at the origin, all coordinates finite
    weights : (n,) array, strictly positive
    meta : optional provenance (truncation radius, sample size, seed, ...)
    """

    points: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[1] if pts.ndim == 2 and pts.shape[1] else 1)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights length mismatch")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite coordinates")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("weights must be finite and strictly positive")
        if pts.shape[0] and np.any(np.linalg.norm(pts, axis=1) == 0.0):
            raise ValueError("atom at the origin is not allowed")
        pts = pts.copy()
        w = w.copy()
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)

    def total_mass(self) -> float:
        return _ltr_sum(self.weights)

    def restrict(self, r_lo: float, r_hi: float = math.inf) -> "DiscreteMeasure":
        """Atoms with r_lo <= ||x|| < r_hi."""
        r = self.norms()
        keep = (r >= r_lo) & (r < r_hi)
        return DiscreteMeasure(self.points[keep], self.weights[keep],
                               dict(self.meta, r_lo=r_lo, r_hi=r_hi))

    @classmethod
    def empty(cls, dim: int) -> "DiscreteMeasure":
        return cls(np.zeros((0, dim)), np.zeros(0))

    # CSV format: header x0,...,x{d-1},w  one atom per row
    def save_csv(self, path) -> None:
        d = self.dim
        header = ",".join([f"x{k}" for k in range(d)] + ["w"])
        data = np.column_stack([self.points, self.weights])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in data:
                fh.write(",".join("%.17g" % v for v in row) + "\n")

    @classmethod
    def load_csv(cls, path) -> "DiscreteMeasure":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            cols = header.split(",")
            if not cols or cols[-1] != "w" or any(c != f"x{k}" for k, c in enumerate(cols[:-1])):
                raise ValueError(f"bad measure CSV header: {header!r}")
            d = len(cols) - 1
            rows = [line.strip() for line in fh if line.strip()]
        if not rows:
            return cls.empty(d)
        data = np.array([[float(v) for v in line.split(",")] for line in rows])
        if data.shape[1] != d + 1:
            raise ValueError("measure CSV row width mismatch")
        return cls(data[:, :d], data[:, d])


# Named angular densities (on the circle, argument is the angle in radians).
# Each entry: (density function, (theta_lo, theta_hi) support interval).
ANGULAR_DENSITIES: dict[str, tuple[Callable[[np.ndarray], np.ndarray], tuple[float, float]]] = {
    "uniform": (lambda t: np.ones_like(np.asarray(t, dtype=float)) / (2.0 * np.pi),
                (-np.pi, np.pi)),
    "cos3_right": (lambda t: np.cos(t) ** 3, (-np.pi / 2, np.pi / 2)),
    "cos3_left_pushed": (
        lambda t: 64.0 * np.abs(np.cos(t)) ** 3 / (1.0 + 3.0 * np.cos(t) ** 2) ** 3,
        (np.pi / 2, 3 * np.pi / 2),
    ),
}


@dataclass(frozen=True)
class HomogeneousMeasure:
    """alpha-homogeneous measure in polar form: angular part x Pareto radial part.

    The radial part is exact Pareto, so the measure of {||x|| > s} equals
    total_angular_mass * s**(-alpha) for every s > 0, and scaling a set by
    lambda scales its mass by lambda**(-alpha).

    Angular part is either discrete (unit directions with positive weights)
    or a density on the circle (dim 2 only).  ``smooth`` records, never
    infers, that the measure vanishes on sets of dimension <= d-1; it is
    only accepted for density-type angular parts with d >= 2.
    """

    dim: int
    alpha: float
    angular_kind: str  # "discrete" | "density"
    directions: np.ndarray | None = None
    angular_weights: np.ndarray | None = None
    density: Callable[[np.ndarray], np.ndarray] | None = None
    density_support: tuple[float, float] = (-np.pi, np.pi)
    smooth: bool = False
    density_name: str | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.angular_kind == "discrete":
            dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
            w = np.asarray(self.angular_weights, dtype=float).ravel()
            nrm = np.linalg.norm(dirs, axis=1)
            if np.any(nrm == 0.0):
                raise ValueError("zero angular direction")
            dirs = dirs / nrm[:, None]
            if np.any(w <= 0.0):
                raise ValueError("angular weights must be positive")
            if dirs.shape[1] != self.dim:
                raise ValueError("angular direction dimension mismatch")
            dirs.setflags(write=False)
            w.setflags(write=False)
            object.__setattr__(self, "directions", dirs)
            object.__setattr__(self, "angular_weights", w)
            if self.smooth:
                raise ValueError("smooth flag requires a density-type angular part")
        elif self.angular_kind == "density":
            if self.dim != 2:
                raise ValueError("density angular parts are supported for dim 2 only")
            if self.density is None:
                raise ValueError("density angular part requires a density callable")
        else:
            raise ValueError(f"unknown angular_kind {self.angular_kind!r}")

    @property
    def total_angular_mass(self) -> float:
        if self.angular_kind == "discrete":
            return float(np.sum(self.angular_weights))
        lo, hi = self.density_support
        val, _ = quad(lambda t: float(self.density(t)), lo, hi,
                      epsabs=_DENSITY_QUAD_TOL, epsrel=_DENSITY_QUAD_TOL, limit=200)
        return val

    def angular_cap_mass(self, direction: np.ndarray, eps: float) -> float:
        """Angular mass of {theta : <theta, b/||b||> > eps}."""
        b = np.asarray(direction, dtype=float)
        nb = np.linalg.norm(b)
        if nb == 0.0:
            raise ValueError("cone direction must be nonzero")
        u = b / nb
        if self.angular_kind == "discrete":
            dots = self.directions @ u
            return float(np.sum(self.angular_weights[dots > eps]))
        # circle: the cap is the arc |theta - theta_b| < arccos(eps)
        if eps >= 1.0:
            return 0.0
        theta_b = math.atan2(u[1], u[0])
        half = math.acos(max(eps, -1.0))
        lo, hi = self.density_support
        total = 0.0
        # the cap may wrap; integrate over intersections with the support,
        # testing the support interval shifted by full turns
        for shift in (-2 * math.pi, 0.0, 2 * math.pi):
            a = max(theta_b - half + shift, lo)
            b2 = min(theta_b + half + shift, hi)
            if a < b2:
                val, _ = quad(lambda t: float(self.density(t)), a, b2,
                              epsabs=_DENSITY_QUAD_TOL, epsrel=_DENSITY_QUAD_TOL,
                              limit=200)
                total += val
        return total


@dataclass(frozen=True)
class Cone:
    """Open cone H+(b, eps) = {x != 0 : <x/||x||, b> > eps}."""

    direction: np.ndarray
    eps: float

    def __post_init__(self):
        b = np.asarray(self.direction, dtype=float)
        if np.linalg.norm(b) == 0.0:
            raise ValueError("cone direction must be nonzero")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("cone aperture must lie in (0, 1)")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "direction", b)


@dataclass(frozen=True)
class ConeMass:
    infinite: bool
    angular_cap_mass: float


def mass_annulus(m, r_lo: float, r_hi: float = math.inf) -> float:
    """Mass of {r_lo <= ||x|| < r_hi}; closed form for homogeneous measures."""
    if not r_lo > 0.0:
        raise ValueError("annulus must be bounded away from the origin (r_lo > 0)")
    if r_hi < r_lo:
        raise ValueError("need r_lo <= r_hi")
    if isinstance(m, DiscreteMeasure):
        r = m.norms()
        return float(np.sum(m.weights[(r >= r_lo) & (r < r_hi)]))
    a = m.alpha
    tail_hi = 0.0 if math.isinf(r_hi) else r_hi ** (-a)
    return m.total_angular_mass * (r_lo ** (-a) - tail_hi)


# threshold below which an angular cap counts as empty
_CAP_MASS_EPS = 1e-12


def mass_cone(m: HomogeneousMeasure, c: Cone) -> ConeMass:
    """Cone mass query: a cone with positive angular mass has infinite total mass."""
    cap = m.angular_cap_mass(c.direction, c.eps)
    return ConeMass(infinite=cap > _CAP_MASS_EPS, angular_cap_mass=cap)


def _angular_cells(m: HomogeneousMeasure, resolution: int):
    """Angular quadrature cells: (directions (k, d), masses (k,)).

    Discrete angular parts are kept as-is.  Density parts are split into
    ``resolution`` equal arcs with per-arc masses integrated numerically
    (the arc mass, not a midpoint-rule estimate, so totals are exact up to
    quadrature tolerance).
    """
    if m.angular_kind == "discrete":
        return m.directions, m.angular_weights.astype(float)
    lo, hi = m.density_support
    edges = np.linspace(lo, hi, resolution + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    masses = np.empty(resolution)
    for k in range(resolution):
        val, _ = quad(lambda t: float(m.density(t)), edges[k], edges[k + 1],
                      epsabs=_DENSITY_QUAD_TOL, epsrel=_DENSITY_QUAD_TOL, limit=200)
        masses[k] = val
    dirs = np.column_stack([np.cos(mids), np.sin(mids)])
    keep = masses > 0.0
    return dirs[keep], masses[keep]


def _pareto_strata(alpha: float, r_lo: float, r_hi: float, k: int):
    """Equal-mass radial strata of the Pareto(alpha) law restricted to [r_lo, r_hi].

    Returns (radii (k,), fractions (k,), edges (k+1,)).  Each stratum carries
    exactly 1/k of the restricted radial mass; the representative radius is
    the stratum's median.
    """
    s_lo, s_hi = r_lo ** (-alpha), r_hi ** (-alpha)
    u_edges = np.linspace(0.0, 1.0, k + 1)
    edges = (s_lo - u_edges * (s_lo - s_hi)) ** (-1.0 / alpha)
    u_mid = 0.5 * (u_edges[:-1] + u_edges[1:])
    radii = (s_lo - u_mid * (s_lo - s_hi)) ** (-1.0 / alpha)
    fractions = np.full(k, (s_lo - s_hi) / k)
    return radii, fractions, edges


def discretize(m: HomogeneousMeasure, r_lo: float, r_hi: float,
               mode: str = "quadrature", resolution: int = 64,
               seed: int | None = None,
               radial_resolution: int | None = None) -> DiscreteMeasure:
    """Finite proxy of ``m`` restricted to the annulus [r_lo, r_hi).

    Quadrature mode is deterministic: angular cells (see _angular_cells)
    crossed with exact equal-mass Pareto radial strata; the total weight
    equals mass_annulus(m, r_lo, r_hi) up to the angular quadrature
    tolerance, and annulus masses are exact at the radial stratum edges.
    Monte-Carlo mode samples ``resolution`` i.i.d. atoms, deterministic per
    seed, with total weight correct in expectation.
    """
    if not (0.0 < r_lo < r_hi < math.inf):
        raise ValueError("need 0 < r_lo < r_hi < inf")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    total = mass_annulus(m, r_lo, r_hi)
    meta = {"mode": mode, "resolution": resolution, "r_lo": r_lo, "r_hi": r_hi}
    if mode == "quadrature":
        k_rad = radial_resolution if radial_resolution is not None else resolution
        if k_rad < 1:
            raise ValueError("radial_resolution must be >= 1")
        dirs, ang_masses = _angular_cells(m, resolution)
        radii, fractions, _ = _pareto_strata(m.alpha, r_lo, r_hi, k_rad)
        pts = (radii[None, :, None] * dirs[:, None, :]).reshape(-1, m.dim)
        w = (ang_masses[:, None] * fractions[None, :]).ravel()
        return DiscreteMeasure(pts, w, meta)
    if mode == "montecarlo":
        if seed is None:
            raise ValueError("montecarlo mode requires a seed")
        rng = np.random.default_rng(seed)
        n = resolution
        # radial inverse CDF on the truncated Pareto
        s_lo, s_hi = r_lo ** (-m.alpha), r_hi ** (-m.alpha)
        u = rng.random(n)
        radii = (s_lo - u * (s_lo - s_hi)) ** (-1.0 / m.alpha)
        dirs = _sample_angular(m, n, rng)
        pts = radii[:, None] * dirs
        w = np.full(n, total / n)
        meta["seed"] = seed
        return DiscreteMeasure(pts, w, meta)
    raise ValueError(f"unknown discretization mode {mode!r}")


def _sample_angular(m: HomogeneousMeasure, n: int, rng: np.random.Generator,
                    grid: int = 4096) -> np.ndarray:
    """Draw n unit directions from the angular law of ``m``."""
    if m.angular_kind == "discrete":
        p = m.angular_weights / np.sum(m.angular_weights)
        idx = rng.choice(m.directions.shape[0], size=n, p=p)
        return m.directions[idx]
    lo, hi = m.density_support
    edges = np.linspace(lo, hi, grid + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    dens = np.maximum(np.asarray(m.density(mids), dtype=float), 0.0)
    cdf = np.concatenate([[0.0], np.cumsum(dens)])
    cdf /= cdf[-1]
    u = rng.random(n)
    pos = np.searchsorted(cdf, u, side="right") - 1
    pos = np.clip(pos, 0, grid - 1)
    frac = (u - cdf[pos]) / np.maximum(cdf[pos + 1] - cdf[pos], 1e-300)
    theta = edges[pos] + frac * (edges[pos + 1] - edges[pos])
    return np.column_stack([np.cos(theta), np.sin(theta)])


def _balance_shell(dim: int, radius: float, k: int) -> np.ndarray:
    """k deterministic points on the sphere of the given radius."""
    if dim == 1:
        signs = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(k)])
        return (radius * signs)[:, None]
    if dim == 2:
        ang = 2.0 * np.pi * (np.arange(k) + 0.5) / k
        return radius * np.column_stack([np.cos(ang), np.sin(ang)])
    # Fibonacci lattice for d >= 3 (extra coordinates zero beyond the third)
    i = np.arange(k) + 0.5
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    z = 1.0 - 2.0 * i / k
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    pts = np.zeros((k, dim))
    pts[:, 0] = rho * np.cos(phi)
    pts[:, 1] = rho * np.sin(phi)
    pts[:, 2] = z
    return radius * pts


def truncate_and_balance(mu, nu, n: int, r_hi: float | None = None,
                         resolution: int = 64, mode: str = "quadrature",
                         seed: int | None = None):
    """Restrict both measures to {||x|| > 1/n} and equalise their totals.

    Homogeneous inputs are discretized on [1/n, r_hi].  If the truncated
    totals differ by delta > 0, the lighter output gains delta spread over a
    deterministic shell at radius 1/(2n) (``resolution`` equal atoms); the
    last shell atom absorbs rounding so both totals agree bit-for-bit under
    left-to-right summation.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    r_trunc = 1.0 / n

    def _prepare(m):
        if isinstance(m, DiscreteMeasure):
            return m.restrict(r_trunc + 0.0, math.inf)
        if r_hi is None:
            raise ValueError("homogeneous input requires r_hi")
        return discretize(m, r_trunc, r_hi, mode=mode, resolution=resolution,
                          seed=seed)

    left, right = _prepare(mu), _prepare(nu)
    t_left, t_right = left.total_mass(), right.total_mass()
    if t_left == 0.0 and t_right == 0.0:
        raise ValueError("empty truncation")
    if t_left == t_right:
        return left, right

    light, t_light = (left, t_left) if t_left < t_right else (right, t_right)
    t_heavy = max(t_left, t_right)
    delta = t_heavy - t_light
    dim = light.dim if light.size else (left.dim or right.dim)
    shell = _balance_shell(dim, 1.0 / (2 * n), resolution)
    w = np.full(resolution, delta / resolution)
    # make the balanced total reproduce t_heavy exactly under the same
    # left-to-right accumulation
    acc = t_light
    for k in range(resolution - 1):
        acc += w[k]
    w[-1] = t_heavy - acc
    balanced = DiscreteMeasure(
        np.vstack([light.points, shell]) if light.size else shell,
        np.concatenate([light.weights, w]) if light.size else w,
        dict(light.meta, balance_mass=delta, balance_radius=1.0 / (2 * n)),
    )
    if t_left < t_right:
        return balanced, right
    return left, balanced


# --- key-value config files for homogeneous measures -----------------------

def parse_config(path) -> dict:
    """Parse a ``key = value`` text file into a dict of strings."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def homogeneous_from_config(cfg: dict) -> HomogeneousMeasure:
    """Build a HomogeneousMeasure from parsed config keys.

    Keys: dim, alpha, angular_kind (discrete|density), angular_spec,
    angular_mass (optional rescale), smooth.
    Discrete spec: ``x0,x1:w; x0,x1:w; ...``.  Density spec: a name from
    ANGULAR_DENSITIES.
    """
    dim = int(cfg["dim"])
    alpha = float(cfg["alpha"])
    kind = cfg["angular_kind"]
    smooth = cfg.get("smooth", "false").lower() in ("1", "true", "yes")
    target_mass = float(cfg["angular_mass"]) if "angular_mass" in cfg else None
    if kind == "discrete":
        dirs, ws = [], []
        for part in cfg["angular_spec"].split(";"):
            part = part.strip()
            if not part:
                continue
            coords, w = part.rsplit(":", 1)
            dirs.append([float(v) for v in coords.split(",")])
            ws.append(float(w))
        dirs = np.array(dirs)
        ws = np.array(ws)
        if target_mass is not None:
            ws = ws * (target_mass / np.sum(ws))
        return HomogeneousMeasure(dim=dim, alpha=alpha, angular_kind="discrete",
                                  directions=dirs, angular_weights=ws, smooth=smooth)
    if kind == "density":
        name = cfg["angular_spec"]
        if name not in ANGULAR_DENSITIES:
            raise ValueError(f"unknown angular density {name!r}")
        dens, support = ANGULAR_DENSITIES[name]
        if target_mass is not None:
            lo, hi = support
            natural, _ = quad(lambda t: float(dens(t)), lo, hi,
                              epsabs=_DENSITY_QUAD_TOL, epsrel=_DENSITY_QUAD_TOL,
                              limit=200)
            scale = target_mass / natural
            base = dens
            dens = lambda t, _b=base, _s=scale: _s * _b(t)
        return HomogeneousMeasure(dim=dim, alpha=alpha, angular_kind="density",
                                  density=dens, density_support=support,
                                  smooth=smooth, density_name=name)
    raise ValueError(f"unknown angular_kind {kind!r}")
