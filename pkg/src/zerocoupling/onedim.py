"""Closed-form 1D couplings by sign-preserving outward quantile matching.

Mass never crosses the origin: each half-line is handled separately,
matching source and target quantiles outward from 0.  When one side is
heavier, the innermost excess is routed through the origin (sent to ORIGIN
on the source side, fed from ORIGIN on the target side), which keeps the
support, together with (0,0), cyclically monotone.
"""

from __future__ import annotations

import numpy as np

from .measures import DiscreteMeasure
from .transport import ORIGIN, ZeroCoupling

__all__ = ["solve_1d"]


def _side_entries(mu, nu, positive: bool):
    """Entries for one half-line, atom indices referring to the full measures."""
    sgn = 1.0 if positive else -1.0
    src_idx = [i for i, x in enumerate(mu.points[:, 0]) if sgn * x > 0]
    dst_idx = [j for j, y in enumerate(nu.points[:, 0]) if sgn * y > 0]
    # outward order: ascending |coordinate|
    src_idx.sort(key=lambda i: sgn * mu.points[i, 0])
    dst_idx.sort(key=lambda j: sgn * nu.points[j, 0])
    sw = [float(mu.weights[i]) for i in src_idx]
    dw = [float(nu.weights[j]) for j in dst_idx]
    t_src, t_dst = sum(sw), sum(dw)
    entries = []

    # innermost excess goes through the origin
    excess = t_src - t_dst
    si, di = 0, 0
    if excess > 0:
        rem = excess
        while rem > 1e-15 * t_src and si < len(src_idx):
            take = min(sw[si], rem)
            entries.append((src_idx[si], ORIGIN, take))
            sw[si] -= take
            rem -= take
            if sw[si] <= 1e-15 * t_src:
                si += 1
    elif excess < 0:
        rem = -excess
        while rem > 1e-15 * t_dst and di < len(dst_idx):
            take = min(dw[di], rem)
            entries.append((ORIGIN, dst_idx[di], take))
            dw[di] -= take
            rem -= take
            if dw[di] <= 1e-15 * t_dst:
                di += 1

    # outward quantile matching of the remainder, splitting atoms as the
    # cumulative masses interleave
    while si < len(src_idx) and di < len(dst_idx):
        take = min(sw[si], dw[di])
        if take > 0.0:
            entries.append((src_idx[si], dst_idx[di], take))
        sw[si] -= take
        dw[di] -= take
        scale = max(t_src, t_dst, 1e-300)
        if sw[si] <= 1e-15 * scale:
            si += 1
        if di < len(dst_idx) and dw[di] <= 1e-15 * scale:
            di += 1
    # floating leftovers (should be ~ulp): route through the origin so the
    # margins stay exact
    for k in range(si, len(src_idx)):
        if sw[k] > 0.0:
            entries.append((src_idx[k], ORIGIN, sw[k]))
    for k in range(di, len(dst_idx)):
        if dw[k] > 0.0:
            entries.append((ORIGIN, dst_idx[k], dw[k]))
    return entries


def solve_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> ZeroCoupling:
    """Sign-preserving outward rearrangement with origin residuals.

    Not cost minimization per se: this is the canonical monotone
    construction, which coincides with the minimum-cost plan exactly when
    the sign-separated structure is optimal (cross-sign transport always
    costs more than routing both legs through the origin under the
    quadratic cost, so it always is for atoms of opposite signs).
    """
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("solve_1d requires 1D measures")
    entries = _side_entries(mu, nu, positive=True)
    entries += _side_entries(mu, nu, positive=False)
    entries.sort(key=lambda e: (e[0], e[1]))
    return ZeroCoupling(mu, nu, tuple(entries))
