"""Minimum-quadratic-cost discrete zero-couplings with an origin reservoir.

A zero-coupling routes source atoms to target atoms and, optionally,
through the origin: mass sent to the origin (dst = ORIGIN) and mass fed
from the origin (src = ORIGIN) are unconstrained, making the problem
feasible for unequal totals.  Costs are squared Euclidean distances with
the origin counted as the zero vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measures import DiscreteMeasure, _ltr_sum
from .monotone import SupportSet
from ._netsimplex import solve_dense_transport
from ._bruteforce import brute_force_transport

__all__ = [
    "ORIGIN",
    "ZeroCoupling",
    "MarginReport",
    "trivial_zero_coupling",
    "solve_zero_coupling",
    "brute_force_min_cost",
    "coupling_cost",
    "check_margins",
    "coupling_support",
]

ORIGIN = -1  # sentinel atom index; serialized as the literal "O"

MARGIN_TOL = 1e-9


@dataclass(frozen=True)
class ZeroCoupling:
    """Sparse transport plan between two discrete measures plus the origin."""

    sources: DiscreteMeasure
    targets: DiscreteMeasure
    entries: tuple  # of (src: int | ORIGIN, dst: int | ORIGIN, mass > 0)
    cost: float = field(default=math.nan)

    def __post_init__(self):
        ent = []
        for src, dst, mass in self.entries:
            src = int(src)
            dst = int(dst)
            if src == ORIGIN and dst == ORIGIN:
                raise ValueError("ORIGIN->ORIGIN entries are not retained")
            if not mass > 0.0:
                raise ValueError("entry masses must be positive")
            if src != ORIGIN and not 0 <= src < self.sources.size:
                raise IndexError("source index out of range")
            if dst != ORIGIN and not 0 <= dst < self.targets.size:
                raise IndexError("target index out of range")
            ent.append((src, dst, float(mass)))
        object.__setattr__(self, "entries", tuple(ent))
        if math.isnan(self.cost):
            object.__setattr__(self, "cost", coupling_cost(self))

    @property
    def dim(self) -> int:
        return self.sources.dim

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("src,dst,mass\n")
            for src, dst, mass in self.entries:
                s = "O" if src == ORIGIN else str(src)
                d = "O" if dst == ORIGIN else str(dst)
                fh.write("%s,%s,%.17g\n" % (s, d, mass))

    @classmethod
    def load_csv(cls, path, sources: DiscreteMeasure,
                 targets: DiscreteMeasure) -> "ZeroCoupling":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "src,dst,mass":
                raise ValueError(f"bad coupling CSV header: {header!r}")
            ent = []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                s, d, m = line.split(",")
                src = ORIGIN if s == "O" else int(s)
                dst = ORIGIN if d == "O" else int(d)
                ent.append((src, dst, float(m)))
        return cls(sources, targets, tuple(ent))


def _entry_endpoints(c: ZeroCoupling, src: int, dst: int):
    x = np.zeros(c.dim) if src == ORIGIN else c.sources.points[src]
    y = np.zeros(c.dim) if dst == ORIGIN else c.targets.points[dst]
    return x, y


def coupling_cost(c: ZeroCoupling) -> float:
    """Sum of mass * ||x - y||^2 in fixed entry order (ORIGIN = 0-vector)."""
    total = 0.0
    for src, dst, mass in c.entries:
        x, y = _entry_endpoints(c, src, dst)
        total += mass * float(np.sum((x - y) ** 2))
    return total


def trivial_zero_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure) -> ZeroCoupling:
    """Everything through the origin: mu to ORIGIN, ORIGIN to nu."""
    if mu.dim != nu.dim and mu.size and nu.size:
        raise ValueError("dimension mismatch")
    ent = [(i, ORIGIN, float(w)) for i, w in enumerate(mu.weights)]
    ent += [(ORIGIN, j, float(w)) for j, w in enumerate(nu.weights)]
    return ZeroCoupling(mu, nu, tuple(ent))


def _hilbert_index(u: np.ndarray, v: np.ndarray, order: int = 16) -> np.ndarray:
    """Hilbert curve index of points (u, v) in [0, 1)^2 (vectorized xy->d)."""
    n = 1 << order
    x = np.clip((u * n).astype(np.int64), 0, n - 1)
    y = np.clip((v * n).astype(np.int64), 0, n - 1)
    rx = np.zeros_like(x)
    ry = np.zeros_like(y)
    d = np.zeros_like(x)
    s = n >> 1
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        # rotate quadrant
        swap = ry == 0
        flip = swap & (rx == 1)
        x_f, y_f = x.copy(), y.copy()
        x = np.where(flip, s - 1 - x_f, x)
        y = np.where(flip, s - 1 - y_f, y)
        x2, y2 = x.copy(), y.copy()
        x = np.where(swap, y2, x)
        y = np.where(swap, x2, y)
        s >>= 1
    return d


def _sort_order(points: np.ndarray) -> np.ndarray:
    """Deterministic atom ordering used to warm-start the solver.

    In the plane, atoms follow a Hilbert curve in log-polar coordinates, so
    consecutive atoms are close in both angle and radius and the staircase
    warm start is already near-optimal; other dimensions fall back to
    lexicographic order.
    """
    if points.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if points.shape[1] == 2:
        ang = np.arctan2(points[:, 1], points[:, 0])
        rad = np.linalg.norm(points, axis=1)
        u = (ang + np.pi) / (2 * np.pi + 1e-9)
        lr = np.log(np.maximum(rad, 1e-300))
        lo, hi = float(np.min(lr)), float(np.max(lr))
        v = (lr - lo) / max(hi - lo, 1e-9)
        key = _hilbert_index(u, np.clip(v, 0.0, 1.0 - 1e-12))
        return np.lexsort((rad, ang, key))
    return np.lexsort(tuple(points[:, k] for k in range(points.shape[1] - 1, -1, -1)))


def _assemble(mu, nu, reservoir):
    """Node arrays for the flow solver: sorted atoms, reservoir nodes last."""
    d = mu.dim if mu.size else nu.dim
    s_mu = mu.total_mass()
    s_nu = nu.total_mass()
    perm_s = _sort_order(mu.points)
    perm_t = _sort_order(nu.points)
    X = mu.points[perm_s]
    a = mu.weights[perm_s].astype(float)
    Y = nu.points[perm_t]
    b = nu.weights[perm_t].astype(float)
    if reservoir:
        X = np.vstack([X, np.zeros((1, d))])
        a = np.concatenate([a, [s_nu]])
        Y = np.vstack([Y, np.zeros((1, d))])
        b = np.concatenate([b, [s_mu]])
    return X, a, Y, b, perm_s, perm_t


def solve_zero_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure,
                        reservoir: bool = True) -> ZeroCoupling:
    """Minimum-cost coupling; with reservoir=True the origin supplies and
    absorbs arbitrary mass through two zero-located nodes, so any pair of
    measures is feasible.  Without the reservoir, totals must agree to 1e-9
    relative ("unbalanced" otherwise)."""
    if mu.size and nu.size and mu.dim != nu.dim:
        raise ValueError("dimension mismatch")
    if mu.size == 0 and nu.size == 0:
        return ZeroCoupling(mu, nu, ())
    if not reservoir:
        s_mu, s_nu = mu.total_mass(), nu.total_mass()
        if abs(s_mu - s_nu) > MARGIN_TOL * max(s_mu, s_nu):
            raise ValueError("unbalanced")
        if mu.size == 0 or nu.size == 0:
            raise ValueError("unbalanced")
    X, a, Y, b, perm_s, perm_t = _assemble(mu, nu, reservoir)
    src, dst, flow = solve_dense_transport(X, a, Y, b)
    ns = mu.size
    nt = nu.size
    ent = []
    for s, t, f in zip(src, dst, flow):
        si = ORIGIN if (reservoir and s == ns) else int(perm_s[s])
        ti = ORIGIN if (reservoir and t == nt) else int(perm_t[t])
        if si == ORIGIN and ti == ORIGIN:
            continue  # slack mass at the origin carries no transport
        ent.append((si, ti, float(f)))
    ent.sort(key=lambda e: (e[0], e[1]))
    return ZeroCoupling(mu, nu, tuple(ent))


_ORACLE_LIMIT = 30


def brute_force_min_cost(mu: DiscreteMeasure, nu: DiscreteMeasure,
                         reservoir: bool = True):
    """Exact optimum by exhausting all basic solutions (test oracle).

    Returns (cost, ZeroCoupling).  Limited to (ns+1)*(nt+1) <= 30.
    """
    if (mu.size + 1) * (nu.size + 1) > _ORACLE_LIMIT:
        raise ValueError("oracle limit exceeded")
    if mu.size == 0 and nu.size == 0:
        c = ZeroCoupling(mu, nu, ())
        return 0.0, c
    d = mu.dim if mu.size else nu.dim
    s_mu, s_nu = mu.total_mass(), nu.total_mass()
    X = mu.points
    a = mu.weights.astype(float)
    Y = nu.points
    b = nu.weights.astype(float)
    if reservoir:
        X = np.vstack([X, np.zeros((1, d))]) if mu.size else np.zeros((1, d))
        a = np.concatenate([a, [s_nu]])
        Y = np.vstack([Y, np.zeros((1, d))]) if nu.size else np.zeros((1, d))
        b = np.concatenate([b, [s_mu]])
    else:
        if abs(s_mu - s_nu) > MARGIN_TOL * max(s_mu, s_nu):
            raise ValueError("unbalanced")
    C = np.sum((X[:, None, :] - Y[None, :, :]) ** 2, axis=2)
    cost, F = brute_force_transport(C, a, b)
    ns, nt = mu.size, nu.size
    ent = []
    for i in range(F.shape[0]):
        for j in range(F.shape[1]):
            if F[i, j] > 0.0:
                si = ORIGIN if (reservoir and i == ns) else i
                ti = ORIGIN if (reservoir and j == nt) else j
                if si == ORIGIN and ti == ORIGIN:
                    continue
                ent.append((si, ti, float(F[i, j])))
    coupling = ZeroCoupling(mu, nu, tuple(ent))
    return coupling.cost, coupling


@dataclass(frozen=True)
class MarginReport:
    max_left_violation: float
    max_right_violation: float
    left: np.ndarray
    right: np.ndarray


def check_margins(c: ZeroCoupling) -> MarginReport:
    """Per-atom relative margin errors (diagnostics only)."""
    left = np.zeros(c.sources.size)
    right = np.zeros(c.targets.size)
    for src, dst, mass in c.entries:
        if src != ORIGIN:
            left[src] += mass
        if dst != ORIGIN:
            right[dst] += mass
    lv = np.abs(left - c.sources.weights) / c.sources.weights \
        if c.sources.size else np.zeros(0)
    rv = np.abs(right - c.targets.weights) / c.targets.weights \
        if c.targets.size else np.zeros(0)
    return MarginReport(
        float(np.max(lv)) if lv.size else 0.0,
        float(np.max(rv)) if rv.size else 0.0,
        lv, rv,
    )


def coupling_support(c: ZeroCoupling, append_origin_pair: bool = True) -> SupportSet:
    """Support pairs of the plan, ORIGIN rendered as the zero vector.

    With append_origin_pair the pair (0, 0) is included, matching the role
    of the origin as a free endpoint in the monotonicity checks.
    """
    d = c.dim
    xs, ys = [], []
    for src, dst, _ in c.entries:
        x, y = _entry_endpoints(c, src, dst)
        xs.append(x)
        ys.append(y)
    if append_origin_pair:
        xs.append(np.zeros(d))
        ys.append(np.zeros(d))
    return SupportSet(np.array(xs), np.array(ys))
