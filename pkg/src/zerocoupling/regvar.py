"""Regularly varying samplers and the finite-scale tail-limit experiment.

An RVModel is a probability law on R^d with a Pareto-type radial tail
(P(R > r) = r^{-alpha}, optionally damped by a logarithmic slowly varying
factor) and a prescribed angular law.  Rescaling an empirical measure of n
draws by the auxiliary function b(t) and reweighting by t approximates the
exponent measure; the experiment tracks how the optimal empirical coupling,
similarly rescaled, approaches the limit coupling of the discretized
exponent measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measures import (DiscreteMeasure, HomogeneousMeasure, _ltr_sum,
                       _sample_angular, discretize, homogeneous_from_config)
from .monotone import SupportSet
from .proper import residual_decomposition
from .transport import ORIGIN, ZeroCoupling, solve_zero_coupling

__all__ = [
    "RVModel",
    "rv_model_from_config",
    "split_seed",
    "sample",
    "rescaled_empirical",
    "scaled_subdifferential",
    "fell_window_distance",
    "m0_distance",
    "portmanteau_check",
    "check_coupling_homogeneity",
    "check_gradient_homogeneity",
    "tail_coupling_experiment",
    "Window",
    "ExperimentRow",
]

_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def split_seed(master: int, k: int) -> int:
    """Deterministic seed stream: seed_k = master XOR k * golden-ratio step."""
    return (int(master) ^ ((k * _GOLDEN) & _MASK64)) & _MASK64


@dataclass(frozen=True)
class RVModel:
    """Sampler for a regularly varying law: angular part of ``shape`` with a
    Pareto(alpha) radius on [1, inf), optionally log-damped."""

    shape: HomogeneousMeasure  # supplies dim, alpha and the angular law
    radial_slowly_varying: str = "none"  # "none" | "log"

    def __post_init__(self):
        if self.radial_slowly_varying not in ("none", "log"):
            raise ValueError("radial_slowly_varying must be 'none' or 'log'")

    @property
    def dim(self) -> int:
        return self.shape.dim

    @property
    def alpha(self) -> float:
        return self.shape.alpha

    def radial_from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Invert the radial survival function at 1-u (exactly for pure
        Pareto, by Newton iteration on log r for the log variant)."""
        a = self.alpha
        u = np.clip(u, 1e-300, 1.0 - 1e-16)
        if self.radial_slowly_varying == "none":
            return u ** (-1.0 / a)
        # solve r^{-a}/(1 + ln r) = u  on  r >= 1
        lnu = np.log(u)
        ell = np.maximum(-lnu / a, 0.0)
        for _ in range(60):
            f = -a * ell - np.log1p(ell) - lnu
            fp = -a - 1.0 / (1.0 + ell)
            step = f / fp
            ell = np.maximum(ell - step, 0.0)
            if np.max(np.abs(step)) < 1e-14:
                break
        return np.exp(ell)

    def b(self, t: float, calibration: np.ndarray | None = None) -> float:
        """Auxiliary scaling: (1 - 1/t)-quantile of the radius.

        Closed form t^{1/alpha} for pure Pareto; otherwise the empirical
        quantile of the supplied calibration radii.
        """
        if t <= 1.0:
            return 1.0
        if self.radial_slowly_varying == "none":
            return t ** (1.0 / self.alpha)
        if calibration is None:
            raise ValueError("log-damped model needs calibration radii for b")
        return float(np.quantile(calibration, 1.0 - 1.0 / t, method="lower"))


def rv_model_from_config(cfg: dict) -> RVModel:
    shape = homogeneous_from_config(cfg)
    return RVModel(shape, cfg.get("radial_slowly_varying", "none"))


def sample(model: RVModel, n: int, seed: int) -> DiscreteMeasure:
    """n i.i.d. draws, each with weight 1/n; deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    radii = model.radial_from_uniform(rng.random(n))
    dirs = _sample_angular(model.shape, n, rng)
    return DiscreteMeasure(radii[:, None] * dirs, np.full(n, 1.0 / n),
                           {"seed": seed, "n": n})


def rescaled_empirical(samp: DiscreteMeasure, t: float, b: float) -> DiscreteMeasure:
    """Atoms x/b with weight t/n each; atoms collapsing below radius 1e-12
    are dropped with a count in meta."""
    if t <= 0 or b <= 0:
        raise ValueError("t and b must be positive")
    pts = samp.points / b
    keep = np.linalg.norm(pts, axis=1) > 1e-12
    dropped = int(np.sum(~keep))
    w = samp.weights[keep] * t
    return DiscreteMeasure(pts[keep], w,
                           dict(samp.meta, t=t, b=b, dropped=dropped))


def scaled_subdifferential(S: SupportSet, b1: float, b2: float) -> SupportSet:
    if b1 <= 0 or b2 <= 0:
        raise ValueError("scales must be positive")
    return SupportSet(S.xs / b1, S.ys / b2)


@dataclass(frozen=True)
class Window:
    r_lo: float
    r_hi: float
    y_max: float


def _window_restrict(S: SupportSet, w: Window):
    rx = np.linalg.norm(S.xs, axis=1)
    ry = np.linalg.norm(S.ys, axis=1)
    keep = (rx >= w.r_lo) & (rx <= w.r_hi) & (ry <= w.y_max)
    return np.hstack([S.xs[keep], S.ys[keep]])


def _directed_hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """max over a in A of min over b in B of ||a-b||, chunked."""
    worst = 0.0
    chunk = max(1, 10_000_000 // max(B.shape[0], 1))
    for s in range(0, A.shape[0], chunk):
        blk = A[s:s + chunk]
        d2 = (np.sum(blk ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :]
              - 2.0 * blk @ B.T)
        worst = max(worst, float(np.sqrt(max(np.max(np.min(d2, axis=1)), 0.0))))
    return worst


def fell_window_distance(S: SupportSet, T: SupportSet, window: Window) -> float:
    """Symmetric Hausdorff distance between the window restrictions.

    +inf sentinel when exactly one restriction is empty, 0 when both are.
    """
    A = _window_restrict(S, window)
    B = _window_restrict(T, window)
    if A.shape[0] == 0 and B.shape[0] == 0:
        return 0.0
    if A.shape[0] == 0 or B.shape[0] == 0:
        return math.inf
    return max(_directed_hausdorff(A, B), _directed_hausdorff(B, A))


def _bl_dictionary(dim: int, r_k: float):
    """Smoothed annulus/cone test functions at outer scale r_k.

    Each entry maps an (n, dim) block and returns values in [0, 1];
    smoothing ramps have width r_k/10 (radial) and 0.1 (angular).
    """
    h = r_k / 10.0
    funcs = []
    for j in range(4):
        a, b = r_k * 2.0 ** j, r_k * 2.0 ** (j + 1)

        def f_ann(pts, a=a, b=b, h=h):
            r = np.linalg.norm(pts, axis=1)
            return np.clip((r - a) / h, 0, 1) * np.clip((b - r) / h, 0, 1)

        funcs.append(f_ann)
    dirs = np.vstack([np.eye(dim), -np.eye(dim)])
    for d in dirs:
        def f_cone(pts, d=d, r_k=r_k, h=h):
            r = np.linalg.norm(pts, axis=1)
            safe = np.maximum(r, 1e-300)
            cosang = (pts @ d) / safe
            return np.clip((r - r_k) / h, 0, 1) \
                * np.clip((r_k * 16.0 - r) / (r_k * 8.0), 0, 1) \
                * np.clip((cosang - 0.5) / 0.1, 0, 1)

        funcs.append(f_cone)
    return funcs


def m0_distance(mu: DiscreteMeasure, nu: DiscreteMeasure,
                r_grid=(1.0, 2.0, 4.0)) -> float:
    """sum_k e^{-r_k} BL_k/(1+BL_k) with BL_k the max discrepancy over a
    fixed dictionary of smoothed annulus/cone test functions beyond radius
    r_k.  A pseudo-metric by construction."""
    r_grid = list(r_grid)
    if any(r <= 0 for r in r_grid) or any(
            r_grid[k] >= r_grid[k + 1] for k in range(len(r_grid) - 1)):
        raise ValueError("r_grid must be positive and increasing")
    dim = mu.dim if mu.size else nu.dim
    total = 0.0
    for r_k in r_grid:
        bl = 0.0
        for f in _bl_dictionary(dim, r_k):
            va = float(np.dot(mu.weights, f(mu.points))) if mu.size else 0.0
            vb = float(np.dot(nu.weights, f(nu.points))) if nu.size else 0.0
            bl = max(bl, abs(va - vb))
        total += math.exp(-r_k) * bl / (1.0 + bl)
    return total


def _set_mass(m, r_lo, r_hi, direction=None, eps=0.0):
    if r_lo <= 0:
        raise ValueError("test sets must be bounded away from the origin")
    if isinstance(m, DiscreteMeasure):
        r = m.norms()
        keep = (r >= r_lo) & (r < r_hi)
        if direction is not None:
            u = np.asarray(direction, dtype=float)
            u = u / np.linalg.norm(u)
            keep &= (m.points @ u) / np.maximum(r, 1e-300) > eps
        return float(np.sum(m.weights[keep]))
    ang = m.total_angular_mass if direction is None \
        else m.angular_cap_mass(direction, eps)
    hi = 0.0 if math.isinf(r_hi) else r_hi ** (-m.alpha)
    return ang * (r_lo ** (-m.alpha) - hi)


def portmanteau_check(seq, target, test_sets):
    """Per-set |mu_n(A) - mu(A)| sequences plus the final maximum.

    test_sets: iterable of (r_lo, r_hi, direction-or-None, eps).
    """
    rows = []
    for ts in test_sets:
        r_lo, r_hi, direction, eps = ts
        ref = _set_mass(target, r_lo, r_hi, direction, eps)
        errs = [abs(_set_mass(m, r_lo, r_hi, direction, eps) - ref)
                for m in seq]
        rows.append((ts, errs))
    final_max = max(errs[-1] for _, errs in rows) if rows else 0.0
    return {"per_set": rows, "final_max": final_max}


def _plan_product_mass(c: ZeroCoupling, x_ann, y_ann) -> float:
    """Coupling mass of {||x|| in x_ann} x {||y|| in y_ann}; the origin
    counts as radius 0."""
    (r1, r2), (s1, s2) = x_ann, y_ann
    total = 0.0
    for src, dst, mass in c.entries:
        rx = 0.0 if src == ORIGIN else float(np.linalg.norm(c.sources.points[src]))
        ry = 0.0 if dst == ORIGIN else float(np.linalg.norm(c.targets.points[dst]))
        if r1 <= rx < r2 and s1 <= ry < s2:
            total += mass
    return total


def check_coupling_homogeneity(c: ZeroCoupling, alphas, lam_grid, annuli,
                               tol: float):
    """Compare gamma(lam^{-E} A) with lam * gamma(A) over product annuli.

    E = diag(1/alpha1 ... , 1/alpha2 ...), so lam^{-E} scales the x block by
    lam^{-1/alpha1} and the y block by lam^{-1/alpha2}.
    """
    if not c.entries:
        raise ValueError("empty coupling")
    a1, a2 = alphas
    rows = []
    worst = 0.0
    for lam in lam_grid:
        cx = lam ** (-1.0 / a1)
        cy = lam ** (-1.0 / a2)
        for (x_ann, y_ann) in annuli:
            base = _plan_product_mass(c, x_ann, y_ann)
            scaled_set = ((cx * x_ann[0], cx * x_ann[1]),
                          (cy * y_ann[0], cy * y_ann[1]))
            scaled = _plan_product_mass(c, *scaled_set)
            err = abs(scaled - lam * base) / max(abs(lam * base), 1e-300)
            rows.append((lam, x_ann, y_ann, base, scaled, err))
            worst = max(worst, err)
    return {"rows": rows, "max_rel_error": worst, "holds": worst <= tol}


def check_gradient_homogeneity(grad, alpha1, alpha2, points, lam_grid,
                               tol: float, psi=None):
    """Max relative deviation of grad(lam x) from lam^{alpha1/alpha2} grad(x)
    over the sample points; the potential scaling law (exponent
    alpha1/alpha2 + 1) is checked too when psi is given."""
    kappa = alpha1 / alpha2
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    worst = 0.0
    worst_psi = 0.0
    for lam in lam_grid:
        g0 = np.atleast_2d(np.asarray(grad(pts), dtype=float))
        g1 = np.atleast_2d(np.asarray(grad(lam * pts), dtype=float))
        dev = np.linalg.norm(g1 - lam ** kappa * g0, axis=1) \
            / np.maximum(1.0, np.linalg.norm(g0, axis=1))
        worst = max(worst, float(np.max(dev)))
        if psi is not None:
            v0 = np.array([float(psi(p)) for p in pts])
            v1 = np.array([float(psi(lam * p)) for p in pts])
            devp = np.abs(v1 - lam ** (kappa + 1.0) * v0) \
                / np.maximum(1.0, np.abs(v0))
            worst_psi = max(worst_psi, float(np.max(devp)))
    return {"max_grad_deviation": worst, "max_psi_deviation": worst_psi,
            "holds": worst <= tol and worst_psi <= tol}


@dataclass(frozen=True)
class ExperimentRow:
    t: float
    seed: int
    n: int
    fell_dist: float
    m0_dist: float
    left_residual: float
    cost: float


def _reference_coupling(P: RVModel, Q: RVModel, window: Window,
                        resolution: int = 64):
    """Limit coupling between discretized exponent measures (reservoir on)."""
    r_lo = min(1.0, window.r_lo) / 2.0
    r_hi = 2.0 * max(window.r_hi, window.y_max)
    mu = discretize(P.shape, r_lo, r_hi, mode="quadrature",
                    resolution=resolution, radial_resolution=resolution)
    nu = discretize(Q.shape, r_lo, r_hi, mode="quadrature",
                    resolution=resolution, radial_resolution=resolution)
    return solve_zero_coupling(mu, nu, reservoir=True)


def tail_coupling_experiment(P: RVModel, Q: RVModel, t_grid, n: int,
                             master_seed: int, window: Window,
                             n_seeds: int = 10, reference=None,
                             ref_resolution: int = 64):
    """Empirical couplings rescaled into the exponent-measure regime.

    Per seed: draw n-point samples of P and Q (independent sub-seeds),
    solve the optimal empirical coupling (no reservoir; both sides are
    probability measures), then for each t rescale its support by B(t)^{-1}
    and its weights by t and measure the distance to the reference limit
    coupling on the window.  Returns (rows, reference coupling).
    """
    from .transport import coupling_support

    t_grid = [float(t) for t in t_grid]
    if any(t < 1 or t > n for t in t_grid):
        raise ValueError("t values must lie in [1, n]")
    if reference is None:
        reference = _reference_coupling(P, Q, window, ref_resolution)
    ref_support = coupling_support(reference, append_origin_pair=False)
    # restrict the reference to the window once; distances reuse it
    calib_P = calib_Q = None
    if P.radial_slowly_varying != "none":
        rngc = np.random.default_rng(split_seed(master_seed, 999_999))
        calib_P = P.radial_from_uniform(rngc.random(10 * n))
    if Q.radial_slowly_varying != "none":
        rngc = np.random.default_rng(split_seed(master_seed, 999_998))
        calib_Q = Q.radial_from_uniform(rngc.random(10 * n))

    rows = []
    for k in range(n_seeds):
        seed_p = split_seed(master_seed, 2 * k)
        seed_q = split_seed(master_seed, 2 * k + 1)
        samp_p = sample(P, n, seed_p)
        samp_q = sample(Q, n, seed_q)
        plan = solve_zero_coupling(samp_p, samp_q, reservoir=False)
        res = residual_decomposition(plan)
        src = np.array([s for s, _, _ in plan.entries], dtype=np.int64)
        dst = np.array([d for _, d, _ in plan.entries], dtype=np.int64)
        mass = np.array([m for _, _, m in plan.entries])
        xs = samp_p.points[src]
        ys = samp_q.points[dst]
        for t in t_grid:
            b1 = P.b(t, calib_P)
            b2 = Q.b(t, calib_Q)
            sx = xs / b1
            sy = ys / b2
            keep = np.linalg.norm(sx, axis=1) >= window.r_lo
            S = SupportSet(sx[keep], sy[keep])
            fd = fell_window_distance(S, ref_support, window)
            # measure comparison on the product space, windowed weights t*mass
            if np.any(keep):
                plan_meas = DiscreteMeasure(np.hstack([sx[keep], sy[keep]]),
                                            t * mass[keep])
            else:
                plan_meas = DiscreteMeasure(np.zeros((0, 2 * P.dim)), np.zeros(0))
            ref_meas = _coupling_as_measure(reference)
            md = m0_distance(plan_meas, ref_meas,
                             r_grid=(window.r_lo, 2 * window.r_lo,
                                     4 * window.r_lo))
            rows.append(ExperimentRow(t, seed_p, n, fd, md,
                                      res.left_residual, plan.cost))
    return rows, reference


def _coupling_as_measure(c: ZeroCoupling) -> DiscreteMeasure:
    """Coupling as a weighted point cloud on the product space."""
    d = c.dim
    pts = []
    w = []
    for src, dst, mass in c.entries:
        x = np.zeros(d) if src == ORIGIN else c.sources.points[src]
        y = np.zeros(d) if dst == ORIGIN else c.targets.points[dst]
        z = np.concatenate([x, y])
        if np.linalg.norm(z) == 0.0:
            continue
        pts.append(z)
        w.append(mass)
    if not pts:
        return DiscreteMeasure(np.zeros((0, 2 * d)), np.zeros(0))
    return DiscreteMeasure(np.array(pts), np.array(w))
