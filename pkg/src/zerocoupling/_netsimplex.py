"""Network simplex for dense transportation problems with implicit costs.

The cost of shipping from source i to target j is the squared Euclidean
distance ||x_i - y_j||^2, expanded as sx_i + sy_j - 2 <x_i, y_j> and
evaluated on the fly, so no cost matrix is ever materialized (O(n) memory
at n ~ 10^4..10^5 atoms per side).

Implementation notes:
  * warm start: northwest-corner basis on pre-sorted atom orders (sorting is
    done by the caller);
  * pricing: major/minor candidate scheme -- a pool of arcs (all arcs for
    small instances, k-nearest-neighbor arcs for large ones) is scanned for
    the most negative reduced costs, which are then pivoted in Dantzig order
    with exact re-pricing; when the pool is exhausted a full sweep over all
    arcs refreshes it, so optimality over the complete arc set is certified;
  * anti-cycling: deterministic tiny supply perturbations make basic flows
    generically positive; the final flows are recomputed exactly from the
    unperturbed supplies by leaf elimination on the optimal tree;
  * duals: subtree-local potential updates (the re-hung subtree shifts by
    the entering arc's reduced cost).
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["solve_dense_transport"]

_MINOR = 512  # candidates refreshed per pool scan


@njit(cache=True)
def _northwest_basis(a, b):
    """Staircase basis of the (perturbed) transportation problem.

    Returns (arc_src, arc_dst, arc_flow) with exactly ns + nt - 1 arcs;
    degenerate exhaustion of both a row and a column advances the row only,
    leaving a zero-flow arc in the basis.
    """
    ns, nt = a.shape[0], b.shape[0]
    n_arcs = ns + nt - 1
    arc_src = np.empty(n_arcs, dtype=np.int64)
    arc_dst = np.empty(n_arcs, dtype=np.int64)
    arc_flow = np.empty(n_arcs, dtype=np.float64)
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    k = 0
    while k < n_arcs:
        f = ra[i] if ra[i] < rb[j] else rb[j]
        if f < 0.0:
            f = 0.0
        arc_src[k] = i
        arc_dst[k] = j
        arc_flow[k] = f
        ra[i] -= f
        rb[j] -= f
        k += 1
        if i == ns - 1:
            j += 1
        elif j == nt - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
        if j >= nt:
            j = nt - 1
        if i >= ns:
            i = ns - 1
    return arc_src, arc_dst, arc_flow


@njit(cache=True)
def _build_tree(ns, nt, arc_src, arc_dst, arc_flow, X, Y, sx, sy,
                parent, pflow, depth, pi, fchild, nsib, psib):
    """Root the basis tree at node N-1 and fill all node arrays via BFS."""
    N = ns + nt
    n_arcs = arc_src.shape[0]
    deg = np.zeros(N, dtype=np.int64)
    for k in range(n_arcs):
        deg[arc_src[k]] += 1
        deg[ns + arc_dst[k]] += 1
    start = np.zeros(N + 1, dtype=np.int64)
    for u in range(N):
        start[u + 1] = start[u] + deg[u]
    adj_arc = np.empty(2 * n_arcs, dtype=np.int64)
    fill = start[:N].copy()
    for k in range(n_arcs):
        u = arc_src[k]
        v = ns + arc_dst[k]
        adj_arc[fill[u]] = k
        fill[u] += 1
        adj_arc[fill[v]] = k
        fill[v] += 1

    for u in range(N):
        parent[u] = -1
        pflow[u] = 0.0
        depth[u] = 0
        pi[u] = 0.0
        fchild[u] = -1
        nsib[u] = -1
        psib[u] = -1

    root = N - 1
    order = np.empty(N, dtype=np.int64)
    order[0] = root
    seen = np.zeros(N, dtype=np.uint8)
    seen[root] = 1
    head = 0
    tail = 1
    while head < tail:
        u = order[head]
        head += 1
        for t in range(start[u], start[u + 1]):
            k = adj_arc[t]
            i = arc_src[k]
            j = ns + arc_dst[k]
            v = j if u == i else i
            if seen[v]:
                continue
            seen[v] = 1
            parent[v] = u
            pflow[v] = arc_flow[k]
            depth[v] = depth[u] + 1
            dot = 0.0
            for kk in range(X.shape[1]):
                dot += X[arc_src[k], kk] * Y[arc_dst[k], kk]
            c = sx[arc_src[k]] + sy[arc_dst[k]] - 2.0 * dot
            pi[v] = c - pi[u]
            w = fchild[u]
            fchild[u] = v
            nsib[v] = w
            psib[v] = -1
            if w != -1:
                psib[w] = v
            order[tail] = v
            tail += 1
    return tail == N


@njit(cache=True)
def _detach(u, parent, fchild, nsib, psib):
    p = parent[u]
    if fchild[p] == u:
        fchild[p] = nsib[u]
    if psib[u] != -1:
        nsib[psib[u]] = nsib[u]
    if nsib[u] != -1:
        psib[nsib[u]] = psib[u]
    nsib[u] = -1
    psib[u] = -1


@njit(cache=True)
def _attach(u, p, parent, fchild, nsib, psib):
    parent[u] = p
    w = fchild[p]
    fchild[p] = u
    nsib[u] = w
    psib[u] = -1
    if w != -1:
        psib[w] = u


@njit(cache=True, inline="always")
def _rc(X, Y, sx, sy, pi, ns, i, j):
    dot = 0.0
    for k in range(X.shape[1]):
        dot += X[i, k] * Y[j, k]
    return sx[i] + sy[j] - 2.0 * dot - pi[i] - pi[ns + j]


@njit(cache=True)
def _pivot(ns, nt, X, Y, sx, sy, ei, ej, rc_e,
           parent, pflow, depth, pi, fchild, nsib, psib,
           stack, path_i, path_j):
    """Apply one pivot with entering arc (ei, ej) of reduced cost rc_e."""
    ejn = ns + ej

    # cycle: paths from ei and ejn up to their common ancestor
    u = ei
    v = ejn
    li = 0
    lj = 0
    while depth[u] > depth[v]:
        path_i[li] = u
        li += 1
        u = parent[u]
    while depth[v] > depth[u]:
        path_j[lj] = v
        lj += 1
        v = parent[v]
    while u != v:
        path_i[li] = u
        li += 1
        u = parent[u]
        path_j[lj] = v
        lj += 1
        v = parent[v]

    # ratio test: pushing theta along ei -> ejn decreases flow on target
    # nodes of the j-side walk and source nodes of the i-side walk
    theta = np.inf
    leave = -1
    leave_side = 0
    for t in range(lj):
        w = path_j[t]
        if w >= ns:
            f = pflow[w]
            if f <= theta:
                theta = f
                leave = w
                leave_side = 0
    for t in range(li):
        w = path_i[t]
        if w < ns:
            f = pflow[w]
            if f < theta or (f == theta and leave_side == 0):
                theta = f
                leave = w
                leave_side = 1

    for t in range(lj):
        w = path_j[t]
        if w >= ns:
            pflow[w] -= theta
        else:
            pflow[w] += theta
    for t in range(li):
        w = path_i[t]
        if w < ns:
            pflow[w] -= theta
        else:
            pflow[w] += theta

    # re-hang the subtree cut off by the leaving arc; q is the entering
    # endpoint inside the cut part, r the one that stays attached
    if leave_side == 1:
        q = ei
        r = ejn
    else:
        q = ejn
        r = ei
    m = 0
    w = q
    while True:
        stack[m] = w
        m += 1
        if w == leave:
            break
        w = parent[w]
    fsave = np.empty(m, dtype=np.float64)
    for t in range(m):
        fsave[t] = pflow[stack[t]]
    for t in range(m - 1, -1, -1):
        _detach(stack[t], parent, fchild, nsib, psib)
    for t in range(m - 1, 0, -1):
        _attach(stack[t], stack[t - 1], parent, fchild, nsib, psib)
        pflow[stack[t]] = fsave[t - 1]
    _attach(q, r, parent, fchild, nsib, psib)
    pflow[q] = theta

    # the re-hung subtree's potentials shift by the entering reduced cost,
    # with opposite signs on the two bipartite sides
    if q < ns:
        d_src = rc_e
        d_tgt = -rc_e
    else:
        d_src = -rc_e
        d_tgt = rc_e
    work = li + lj
    top = 0
    stack[top] = q
    top += 1
    while top > 0:
        top -= 1
        w = stack[top]
        work += 1
        depth[w] = depth[parent[w]] + 1
        if w < ns:
            pi[w] += d_src
        else:
            pi[w] += d_tgt
        ch = fchild[w]
        while ch != -1:
            stack[top] = ch
            top += 1
            ch = nsib[ch]
    return work


@njit(cache=True)
def _scan_pool(ns, X, Y, sx, sy, pi, pool_src, pool_dst, pool_len, tol,
               mi, mj, mrc, row_slot, sleep, ignore_sleep):
    """Fill the minor candidate list with the most negative pool arcs.

    At most one candidate per source row, so the list spreads over distinct
    regions of the instance and stays useful for many pivots.  Arcs that
    price clearly nonnegative are put to sleep for a few scans (skipped
    cheaply); a final scan with ignore_sleep certifies pool optimality.
    Returns the number of candidates found (top-K kept by replacing the
    current worst).
    """
    K = mi.shape[0]
    for i in range(row_slot.shape[0]):
        row_slot[i] = -1
    nfound = 0
    worst = -1  # index of the worst (largest rc) entry once the list is full
    for t in range(pool_len):
        if sleep[t] > 0 and not ignore_sleep:
            sleep[t] -= 1
            continue
        i = pool_src[t]
        j = pool_dst[t]
        rc = _rc(X, Y, sx, sy, pi, ns, i, j)
        if rc >= -tol:
            if rc > tol:
                sleep[t] = 15
            continue
        s = row_slot[i]
        if s >= 0:
            if rc < mrc[s]:
                mj[s] = j
                mrc[s] = rc
                if s == worst:
                    worst = 0
                    for q in range(1, K):
                        if mrc[q] > mrc[worst]:
                            worst = q
            continue
        if nfound < K:
            mi[nfound] = i
            mj[nfound] = j
            mrc[nfound] = rc
            row_slot[i] = nfound
            nfound += 1
            if nfound == K:
                worst = 0
                for q in range(1, K):
                    if mrc[q] > mrc[worst]:
                        worst = q
        elif rc < mrc[worst]:
            row_slot[mi[worst]] = -1
            mi[worst] = i
            mj[worst] = j
            mrc[worst] = rc
            row_slot[i] = worst
            worst = 0
            for q in range(1, K):
                if mrc[q] > mrc[worst]:
                    worst = q
    return nfound


_SWEEP_TOP = 8  # violating arcs kept per source row in a full sweep


@njit(cache=True)
def _full_sweep(ns, nt, X, Y, sx, sy, pi, tol, new_src, new_dst,
                row_sleep, ignore_sleep, wj):
    """Most negative arcs per row over the complete arc set.

    Keeps up to _SWEEP_TOP violating arcs per source row (insertion into a
    small sorted buffer), writes them into the scratch arrays, and returns
    the count.  Rows that price clean sleep through the next few sweeps;
    a sweep with ignore_sleep certifies optimality over all arcs.
    """
    M = _SWEEP_TOP
    top_j = np.empty(M, dtype=np.int64)
    top_rc = np.empty(M, dtype=np.float64)
    for j in range(nt):
        wj[j] = sy[j] - pi[ns + j]
    found = 0
    for i in range(ns):
        if row_sleep[i] > 0 and not ignore_sleep:
            row_sleep[i] -= 1
            continue
        base = sx[i] - pi[i]
        nrow = 0
        cut = -tol  # current admission threshold (worst kept rc)
        for j in range(nt):
            dot = 0.0
            for k in range(X.shape[1]):
                dot += X[i, k] * Y[j, k]
            rc = base + wj[j] - 2.0 * dot
            if rc >= cut:
                continue
            p = nrow if nrow < M else M - 1
            while p > 0 and top_rc[p - 1] > rc:
                top_rc[p] = top_rc[p - 1]
                top_j[p] = top_j[p - 1]
                p -= 1
            top_rc[p] = rc
            top_j[p] = j
            if nrow < M:
                nrow += 1
            if nrow == M:
                cut = top_rc[M - 1]
        if nrow == 0:
            row_sleep[i] = 3
            continue
        for t in range(nrow):
            new_src[found] = i
            new_dst[found] = top_j[t]
            found += 1
    return found


@njit(cache=True)
def _simplex(ns, nt, X, Y, sx, sy, tol, max_iter, pool_full,
             pool_src, pool_dst, base_pool_len,
             parent, pflow, depth, pi, fchild, nsib, psib, stats):
    """Pivot to optimality.  Returns the pivot count, or -1 on the cap.

    pool_full=True means the pool already contains every arc, so no full
    sweeps are needed; otherwise arcs found by full sweeps are retained in a
    ring-buffer region of the pool (after base_pool_len) so they keep being
    priced on later scans.
    """
    N = ns + nt
    stack = np.empty(N, dtype=np.int64)
    path_i = np.empty(N, dtype=np.int64)
    path_j = np.empty(N, dtype=np.int64)
    mi = np.empty(_MINOR, dtype=np.int64)
    mj = np.empty(_MINOR, dtype=np.int64)
    mrc = np.empty(_MINOR, dtype=np.float64)
    row_slot = np.empty(ns, dtype=np.int64)
    sleep = np.zeros(pool_src.shape[0], dtype=np.uint8)
    new_src = np.empty(_SWEEP_TOP * ns, dtype=np.int64)
    new_dst = np.empty(_SWEEP_TOP * ns, dtype=np.int64)
    row_sleep = np.zeros(ns, dtype=np.uint8)
    wj = np.empty(nt, dtype=np.float64)
    extra_cap = pool_src.shape[0] - base_pool_len
    extra_fill = 0  # occupied ring slots
    extra_pos = 0  # next ring slot to overwrite
    pool_len = base_pool_len
    it = 0
    while it < max_iter:
        nfound = _scan_pool(ns, X, Y, sx, sy, pi, pool_src, pool_dst,
                            pool_len, tol, mi, mj, mrc, row_slot, sleep,
                            False)
        stats[2] += 1  # pool scans
        if nfound == 0:
            # wake every arc and re-certify before concluding anything
            nfound = _scan_pool(ns, X, Y, sx, sy, pi, pool_src, pool_dst,
                                pool_len, tol, mi, mj, mrc, row_slot, sleep,
                                True)
            stats[2] += 1
        if nfound == 0:
            if pool_full:
                return it
            stats[3] += 1  # full sweeps
            nnew = _full_sweep(ns, nt, X, Y, sx, sy, pi, tol,
                               new_src, new_dst, row_sleep, False, wj)
            if nnew == 0:
                # wake every row; only a complete sweep may conclude
                stats[3] += 1
                nnew = _full_sweep(ns, nt, X, Y, sx, sy, pi, tol,
                                   new_src, new_dst, row_sleep, True, wj)
            if nnew == 0:
                return it
            for t in range(nnew):
                slot = base_pool_len + extra_pos
                pool_src[slot] = new_src[t]
                pool_dst[slot] = new_dst[t]
                sleep[slot] = 0
                extra_pos += 1
                if extra_pos == extra_cap:
                    extra_pos = 0
                if extra_fill < extra_cap:
                    extra_fill += 1
            pool_len = base_pool_len + extra_fill
            continue
        # minor iterations: lazy Dantzig -- pick the best stored reduced
        # cost, re-price just that candidate, and pivot only if it is still
        # clearly the best; otherwise update its entry and retry
        alive = nfound
        while alive > 0 and it < max_iter:
            best = -1
            best_rc = -tol
            for s in range(nfound):
                if mi[s] < 0:
                    continue
                if mrc[s] < best_rc:
                    best_rc = mrc[s]
                    best = s
            if best < 0:
                break
            rc = _rc(X, Y, sx, sy, pi, ns, mi[best], mj[best])
            if rc >= -tol:
                mi[best] = -1
                alive -= 1
                continue
            if rc > 0.5 * mrc[best]:
                # went stale; remember the fresh price and re-select
                mrc[best] = rc
                continue
            plen = _pivot(ns, nt, X, Y, sx, sy, mi[best], mj[best], rc,
                          parent, pflow, depth, pi, fchild, nsib, psib,
                          stack, path_i, path_j)
            stats[0] += 1
            stats[1] += plen
            it += 1
            mi[best] = -1
            alive -= 1
    return -1


@njit(cache=True)
def _exact_reflow(ns, nt, a, b, parent, depth, out_src, out_dst, out_flow):
    """Leaf-elimination flows on the final tree with unperturbed supplies.

    Conservation is exact by construction at every node except the root,
    which absorbs floating-point imbalance of the totals.  Returns the
    number of arcs written (flows <= 0 are dropped).
    """
    N = ns + nt
    maxd = 0
    for u in range(N):
        if depth[u] > maxd:
            maxd = depth[u]
    cnt = np.zeros(maxd + 2, dtype=np.int64)
    for u in range(N):
        cnt[depth[u] + 1] += 1
    for dpt in range(1, maxd + 2):
        cnt[dpt] += cnt[dpt - 1]
    order = np.empty(N, dtype=np.int64)
    pos = cnt[:maxd + 1].copy()
    for u in range(N):
        order[pos[depth[u]]] = u
        pos[depth[u]] += 1
    acc = np.empty(N, dtype=np.float64)
    for u in range(N):
        acc[u] = a[u] if u < ns else -b[u - ns]
    m = 0
    for t in range(N - 1, -1, -1):
        u = order[t]
        p = parent[u]
        if p < 0:
            continue
        f = acc[u] if u < ns else -acc[u]
        acc[p] += acc[u]
        if f > 0.0:
            if u < ns:
                out_src[m] = u
                out_dst[m] = p - ns
            else:
                out_src[m] = p
                out_dst[m] = u - ns
            out_flow[m] = f
            m += 1
    return m


_POOL_FULL_LIMIT = 1 << 18  # build the complete arc pool below this size
_KNN = 16
_KNN_LOG = 8


def _logpolar(Z):
    """Embed points as (unit direction, log radius) for neighbor queries.

    Heavy-tailed clouds put near-optimal arcs between atoms at comparable
    radii and directions even when their Euclidean distance is huge, so
    neighbors in this embedding complement plain Euclidean ones.
    """
    r = np.sqrt(np.einsum("ij,ij->i", Z, Z))
    r = np.where(r > 0.0, r, 1.0)
    return np.column_stack([Z / r[:, None], np.log(r)])


def _build_pool(X, Y):
    """Arc pool for pricing: all arcs for small instances, k-nearest
    neighbors (Euclidean and log-polar, both directions) for large ones."""
    ns, nt = X.shape[0], Y.shape[0]
    if ns * nt <= _POOL_FULL_LIMIT:
        jj, ii = np.meshgrid(np.arange(nt, dtype=np.int64),
                             np.arange(ns, dtype=np.int64))
        return ii.ravel(), jj.ravel(), True
    from scipy.spatial import cKDTree
    k1 = min(_KNN, nt)
    k2 = min(_KNN, ns)
    g1 = min(_KNN_LOG, nt)
    g2 = min(_KNN_LOG, ns)
    near_t = cKDTree(Y).query(X, k=k1)[1].reshape(ns, k1)
    near_s = cKDTree(X).query(Y, k=k2)[1].reshape(nt, k2)
    LX = _logpolar(X)
    LY = _logpolar(Y)
    lnear_t = cKDTree(LY).query(LX, k=g1)[1].reshape(ns, g1)
    lnear_s = cKDTree(LX).query(LY, k=g2)[1].reshape(nt, g2)
    src = np.concatenate([
        np.repeat(np.arange(ns, dtype=np.int64), k1),
        near_s.ravel().astype(np.int64),
        np.repeat(np.arange(ns, dtype=np.int64), g1),
        lnear_s.ravel().astype(np.int64),
    ])
    dst = np.concatenate([
        near_t.ravel().astype(np.int64),
        np.repeat(np.arange(nt, dtype=np.int64), k2),
        lnear_t.ravel().astype(np.int64),
        np.repeat(np.arange(nt, dtype=np.int64), g2),
    ])
    return src, dst, False


def solve_dense_transport(X, a, Y, b, max_iter=None):
    """Minimum quadratic-cost transport between weighted point clouds.

    X (ns, d), a (ns,): source locations and supplies; Y (nt, d), b (nt,):
    target locations and demands.  Totals must agree to ~1e-9 relative.
    Returns (src_idx, dst_idx, flow) arrays of the optimal plan, flows > 0,
    margins exact except at the last target which absorbs total rounding.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    ns, nt = a.shape[0], b.shape[0]
    if ns == 0 or nt == 0:
        raise ValueError("empty side")
    N = ns + nt
    sx = np.einsum("ij,ij->i", X, X)
    sy = np.einsum("ij,ij->i", Y, Y)
    total = float(np.sum(a))
    if abs(total - float(np.sum(b))) > 1e-9 * max(total, 1e-300):
        raise ValueError("unbalanced")

    # deterministic supply perturbation; the last target absorbs the sum so
    # the perturbed instance stays exactly balanced
    tau = 1e-12 * total / N
    eps = tau * (1.0 + np.arange(ns) / max(ns, 1))
    a_pert = a + eps
    b_pert = b.copy()
    b_pert[nt - 1] += float(np.sum(eps))

    arc_src, arc_dst, arc_flow = _northwest_basis(a_pert, b_pert)
    parent = np.empty(N, dtype=np.int64)
    pflow = np.empty(N, dtype=np.float64)
    depth = np.empty(N, dtype=np.int64)
    pi = np.empty(N, dtype=np.float64)
    fchild = np.empty(N, dtype=np.int64)
    nsib = np.empty(N, dtype=np.int64)
    psib = np.empty(N, dtype=np.int64)
    ok = _build_tree(ns, nt, arc_src, arc_dst, arc_flow, X, Y, sx, sy,
                     parent, pflow, depth, pi, fchild, nsib, psib)
    if not ok:
        raise RuntimeError("initial basis is not a spanning tree")

    base_src, base_dst, pool_full = _build_pool(X, Y)
    if pool_full:
        pool_src, pool_dst = base_src, base_dst
        base_len = pool_src.shape[0]
    else:
        base_len = base_src.shape[0]
        ring = 2 * _SWEEP_TOP * ns  # retains arcs from the last two sweeps
        pool_src = np.concatenate([base_src, np.zeros(ring, dtype=np.int64)])
        pool_dst = np.concatenate([base_dst, np.zeros(ring, dtype=np.int64)])

    cmax = (np.sqrt(np.max(sx)) + np.sqrt(np.max(sy))) ** 2
    tol_pivot = 1e-12 * max(cmax, 1e-300)
    if max_iter is None:
        max_iter = 400 * N + 100_000
    stats = np.zeros(4, dtype=np.int64)
    status = _simplex(ns, nt, X, Y, sx, sy, tol_pivot, max_iter, pool_full,
                      pool_src, pool_dst, base_len,
                      parent, pflow, depth, pi, fchild, nsib, psib, stats)
    solve_dense_transport.last_stats = {
        "pivots": int(stats[0]), "tree_work": int(stats[1]),
        "pool_scans": int(stats[2]), "full_sweeps": int(stats[3]),
    }
    if status == -1:
        raise RuntimeError("pivot limit exceeded")

    out_src = np.empty(N - 1, dtype=np.int64)
    out_dst = np.empty(N - 1, dtype=np.int64)
    out_flow = np.empty(N - 1, dtype=np.float64)
    m = _exact_reflow(ns, nt, a, b, parent, depth, out_src, out_dst, out_flow)
    return out_src[:m].copy(), out_dst[:m].copy(), out_flow[:m].copy()
