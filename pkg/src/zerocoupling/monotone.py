"""Monotonicity checks, Rockafellar potentials, and gradient push-forwards.

A finite support set S = {(x_i, y_i)} is cyclically monotone iff the
complete digraph with edge weight w(i->j) = <x_i, y_i> - <x_i, y_j> has no
negative cycle; in that case S is contained in the subdifferential of the
convex function built by the longest-chain construction below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SupportSet",
    "DiscretePotential",
    "MonotoneResult",
    "CyclicResult",
    "is_monotone",
    "is_cyclically_monotone",
    "rockafellar_potential",
    "subdifferential_contains",
    "push_forward",
    "support_scale",
]


@dataclass(frozen=True)
class SupportSet:
    """Finite list of pairs (x, y) sharing a common dimension."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        ys = np.atleast_2d(np.asarray(self.ys, dtype=float))
        if xs.shape != ys.shape:
            raise ValueError("x and y blocks must have the same shape")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("non-finite coordinates in support set")
        xs = xs.copy()
        ys = ys.copy()
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def size(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def with_pair(self, x, y) -> "SupportSet":
        return SupportSet(np.vstack([self.xs, np.atleast_2d(x)]),
                          np.vstack([self.ys, np.atleast_2d(y)]))

    # CSV: header x0..x{d-1},y0..y{d-1}
    def save_csv(self, path) -> None:
        d = self.dim
        header = ",".join([f"x{k}" for k in range(d)] + [f"y{k}" for k in range(d)])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for x, y in zip(self.xs, self.ys):
                fh.write(",".join("%.17g" % v for v in np.concatenate([x, y])) + "\n")

    @classmethod
    def load_csv(cls, path) -> "SupportSet":
        with open(path, "r", encoding="utf-8") as fh:
            cols = fh.readline().strip().split(",")
            if len(cols) % 2 != 0:
                raise ValueError("support CSV must have an even number of columns")
            d = len(cols) // 2
            expect = [f"x{k}" for k in range(d)] + [f"y{k}" for k in range(d)]
            if cols != expect:
                raise ValueError(f"bad support CSV header: {','.join(cols)!r}")
            rows = [line.strip() for line in fh if line.strip()]
        data = np.array([[float(v) for v in r.split(",")] for r in rows]) \
            if rows else np.zeros((0, 2 * d))
        return cls(data[:, :d], data[:, d:])


def support_scale(S: SupportSet) -> float:
    """Scale factor for tolerances: inner products grow like ||x||*||y||."""
    if S.size == 0:
        return 1.0
    nx = float(np.max(np.linalg.norm(S.xs, axis=1)))
    ny = float(np.max(np.linalg.norm(S.ys, axis=1)))
    return max(1.0, nx * ny)


@dataclass(frozen=True)
class MonotoneResult:
    ok: bool
    witness: tuple[int, int] | None = None


@dataclass(frozen=True)
class CyclicResult:
    ok: bool
    witness_cycle: list[int] | None = None


def is_monotone(S: SupportSet, tol: float = 1e-9) -> MonotoneResult:
    """Pairwise check of <x_i - x_j, y_i - y_j> >= -tol_abs over all pairs."""
    tol_abs = tol * support_scale(S)
    n = S.size
    if n < 2:
        return MonotoneResult(True)
    # G[i, j] = <x_i - x_j, y_i - y_j>
    xy = S.xs @ S.ys.T
    G = np.diag(xy)[:, None] + np.diag(xy)[None, :] - xy - xy.T
    bad = np.argwhere(G < -tol_abs)
    if bad.size:
        i, j = sorted(map(int, bad[0]))
        return MonotoneResult(False, (i, j))
    return MonotoneResult(True)


def _negative_cycle(W: np.ndarray, tol_abs: float):
    """Find a cycle of mean weight < -tol_abs in the dense digraph W, or None.

    Bellman-Ford style label correction on W + tol_abs: a cycle with total
    shifted weight < 0 is exactly a cycle with raw weight < -tol_abs * len.
    Ties in relaxation are broken by smallest index via the scan order.
    """
    n = W.shape[0]
    Ws = W + tol_abs
    dist = np.zeros(n)
    pred = np.full(n, -1, dtype=np.int64)
    for _ in range(n):
        cand = dist[:, None] + Ws  # cand[i, j] = dist[i] + w(i->j)
        best = np.min(cand, axis=0)
        arg = np.argmin(cand, axis=0)
        improved = best < dist - 1e-300
        if not np.any(improved):
            return None
        dist = np.where(improved, best, dist)
        pred = np.where(improved, arg, pred)
    # a vertex relaxed on round n lies on or reaches a negative cycle
    v = int(np.argmin(np.where(improved, best - dist, np.inf)))
    for _ in range(n):
        v = int(pred[v])
    cycle = [v]
    u = int(pred[v])
    while u != v:
        cycle.append(u)
        u = int(pred[u])
    cycle.reverse()
    return cycle


def is_cyclically_monotone(S: SupportSet, tol: float = 1e-9) -> CyclicResult:
    """Negative-cycle test of the cyclical monotonicity inequality.

    The witness cycle [i0, i1, ...] on failure satisfies
    sum_k <x_{i_k}, y_{i_k} - y_{i_{k+1}}> < -tol_abs (indices cyclic).
    """
    n = S.size
    if n < 2:
        return CyclicResult(True)
    tol_abs = tol * support_scale(S)
    xy = S.xs @ S.ys.T
    W = np.diag(xy)[:, None] - xy  # w(i->j) = <x_i, y_i> - <x_i, y_j>
    cycle = _negative_cycle(W, tol_abs)
    if cycle is None:
        return CyclicResult(True)
    return CyclicResult(False, cycle)


def cycle_defect(S: SupportSet, cycle: list[int]) -> float:
    """sum over the cycle of <x_i, y_i - y_next>; negative = violation."""
    total = 0.0
    for k, i in enumerate(cycle):
        j = cycle[(k + 1) % len(cycle)]
        total += float(np.dot(S.xs[i], S.ys[i] - S.ys[j]))
    return total


@dataclass(frozen=True)
class DiscretePotential:
    """Node potentials psi_i with assigned subgradients grad_i = y_i.

    Satisfies psi(x_j) >= psi(x_i) + <x_j - x_i, grad_i> - tol for all i, j,
    and psi(base) = 0.
    """

    xs: np.ndarray
    psi: np.ndarray
    grads: np.ndarray
    base_index: int = 0

    def __post_init__(self):
        xs = np.atleast_2d(np.asarray(self.xs, dtype=float)).copy()
        psi = np.asarray(self.psi, dtype=float).ravel().copy()
        grads = np.atleast_2d(np.asarray(self.grads, dtype=float)).copy()
        if xs.shape != grads.shape or xs.shape[0] != psi.shape[0]:
            raise ValueError("inconsistent potential shapes")
        for a in (xs, psi, grads):
            a.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "grads", grads)

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def save_csv(self, path) -> None:
        d = self.dim
        header = ",".join([f"x{k}" for k in range(d)] + ["psi"]
                          + [f"g{k}" for k in range(d)])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for x, p, g in zip(self.xs, self.psi, self.grads):
                row = np.concatenate([x, [p], g])
                fh.write(",".join("%.17g" % v for v in row) + "\n")

    @classmethod
    def load_csv(cls, path) -> "DiscretePotential":
        with open(path, "r", encoding="utf-8") as fh:
            cols = fh.readline().strip().split(",")
            d = (len(cols) - 1) // 2
            expect = [f"x{k}" for k in range(d)] + ["psi"] + [f"g{k}" for k in range(d)]
            if cols != expect:
                raise ValueError(f"bad potential CSV header: {','.join(cols)!r}")
            rows = [line.strip() for line in fh if line.strip()]
        data = np.array([[float(v) for v in r.split(",")] for r in rows])
        return cls(data[:, :d], data[:, d], data[:, d + 1:])


def rockafellar_potential(S: SupportSet, base_index: int = 0,
                          tol: float = 1e-9) -> DiscretePotential:
    """Longest-chain potentials realizing S inside a convex subdifferential.

    psi_j = max over chains base -> ... -> j of sum <y_{i_k}, x_{i_{k+1}} - x_{i_k}>,
    finite because cyclical monotonicity forbids positive cycles; grads are
    the paired y values.
    """
    if not is_cyclically_monotone(S, tol).ok:
        raise ValueError("not cyclically monotone")
    n = S.size
    if n == 0:
        raise ValueError("empty support set")
    if not 0 <= base_index < n:
        raise IndexError("base_index out of range")
    # step[i, j] = <y_i, x_j - x_i>; Bellman max-relaxation from the base
    yx = S.ys @ S.xs.T
    step = yx - np.diag(yx)[:, None]
    psi = np.full(n, -np.inf)
    psi[base_index] = 0.0
    for _ in range(n):
        cand = np.max(psi[:, None] + step, axis=0)
        new = np.maximum(psi, cand)
        if np.all(new <= psi + 1e-300):
            break
        psi = new
    psi[base_index] = 0.0
    return DiscretePotential(S.xs, psi, S.ys, base_index)


def subdifferential_contains(P: DiscretePotential, pair, tol: float = 1e-9) -> bool:
    """True iff adding (x, v) keeps every subgradient inequality within tol_abs."""
    x = np.asarray(pair[0], dtype=float).ravel()
    v = np.asarray(pair[1], dtype=float).ravel()
    if x.shape[0] != P.dim:
        raise ValueError("dimension mismatch")
    S = SupportSet(np.vstack([P.xs, x[None, :]]), np.vstack([P.grads, v[None, :]]))
    tol_abs = tol * support_scale(S)
    # psi value of the new point implied by the existing nodes:
    # psi(x) = max_i psi_i + <grad_i, x - x_i>
    psi_x = float(np.max(P.psi + P.grads @ x
                         - np.einsum("ij,ij->i", P.grads, P.xs)))
    # inequality psi_j >= psi_x + <x_j - x, v> for all nodes j
    lhs = P.psi
    rhs = psi_x + P.xs @ v - float(np.dot(x, v))
    return bool(np.all(lhs >= rhs - tol_abs))


def push_forward(gradient, m, domain=None):
    """Push a discrete measure through a gradient map.

    gradient: either a DiscretePotential whose nodes coincide with the atoms
    of ``m`` (matched by nearest node, required exact), or a callable
    x -> grad(x), optionally accepting a whole (n, d) block at once.  Atoms
    mapped exactly to the origin accumulate into an origin residual recorded
    in meta, not emitted as atoms.  ``domain`` is an optional predicate;
    atoms outside raise "domain violation".
    """
    from .measures import DiscreteMeasure, _ltr_sum

    if not isinstance(gradient, DiscretePotential) and domain is None and m.size:
        # fast path: vectorized gradient over the whole atom block
        try:
            Y = np.asarray(gradient(m.points), dtype=float)
        except Exception:
            Y = None
        if Y is not None and Y.shape == m.points.shape:
            if not np.all(np.isfinite(Y)):
                raise ValueError("domain violation: non-finite image")
            norms = np.linalg.norm(Y, axis=1)
            keep = norms > 0.0
            residual = float(np.sum(m.weights[~keep]))
            meta = dict(m.meta, origin_residual=residual,
                        pushed_total=_ltr_sum(m.weights[keep]) + residual)
            return DiscreteMeasure(Y[keep], m.weights[keep], meta)

    if isinstance(gradient, DiscretePotential):
        nodes = gradient.xs
        grads = gradient.grads

        def gmap(x):
            d2 = np.sum((nodes - x[None, :]) ** 2, axis=1)
            k = int(np.argmin(d2))
            if d2[k] > 0.0:
                raise ValueError(f"domain violation: atom {x} not a potential node")
            return grads[k]
    else:
        def gmap(x):
            if domain is not None and not domain(x):
                raise ValueError(f"domain violation: atom {x}")
            return np.asarray(gradient(x), dtype=float).ravel()

    out_pts, out_w = [], []
    residual = 0.0
    for x, w in zip(m.points, m.weights):
        y = gmap(x)
        if not np.all(np.isfinite(y)):
            raise ValueError(f"domain violation: atom {x}")
        if np.linalg.norm(y) == 0.0:
            residual += float(w)
        else:
            out_pts.append(y)
            out_w.append(float(w))
    meta = dict(m.meta, origin_residual=residual,
                pushed_total=_ltr_sum(out_w) + residual)
    if not out_pts:
        return DiscreteMeasure(np.zeros((0, m.dim)), np.zeros(0), meta)
    return DiscreteMeasure(np.array(out_pts), np.array(out_w), meta)
