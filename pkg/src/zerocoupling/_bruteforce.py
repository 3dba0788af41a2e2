"""Exhaustive transportation optimum for tiny instances.

Enumerates every spanning tree of the complete bipartite transportation
graph (every basic solution), evaluates its unique flows by leaf
elimination, and keeps the cheapest feasible one.  Used purely as a test
oracle; instances are capped at (ns)*(nt) <= 30 nodes-products upstream.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["brute_force_transport"]


@njit(cache=True)
def _uf_find(uf, x):
    while uf[x] != x:
        uf[x] = uf[uf[x]]
        x = uf[x]
    return x


@njit(cache=True)
def _tree_flows(ns, nt, esrc, edst, sel, k, a, b, flow, deg, nbr_edge, acc):
    """Leaf-elimination flows for the selected tree edges; returns True if
    all flows are nonnegative (within a tiny slack)."""
    N = ns + nt
    for t in range(N * N):
        nbr_edge[t] = -1
    for u in range(N):
        deg[u] = 0
        acc[u] = a[u] if u < ns else -b[u - ns]
    for t in range(k):
        e = sel[t]
        u = esrc[e]
        v = ns + edst[e]
        nbr_edge[u * N + deg[u]] = e
        deg[u] += 1
        nbr_edge[v * N + deg[v]] = e
        deg[v] += 1
        flow[e] = 0.0
    removed = np.zeros(N, dtype=np.uint8)
    total = 0.0
    for u in range(ns):
        total += a[u]
    slack = 1e-12 * (total + 1.0)
    for _ in range(N - 1):
        # find a current leaf
        leaf = -1
        for u in range(N):
            if removed[u] == 0 and deg[u] == 1:
                leaf = u
                break
        if leaf < 0:
            return False
        # its single remaining incident edge
        e = -1
        for t in range(N):
            cand = nbr_edge[leaf * N + t]
            if cand >= 0:
                e = cand
                break
        u = esrc[e]
        v = ns + edst[e]
        other = v if leaf == u else u
        f = acc[leaf] if leaf < ns else -acc[leaf]
        if f < -slack:
            return False
        flow[e] = f if f > 0.0 else 0.0
        acc[other] += acc[leaf]
        removed[leaf] = 1
        deg[other] -= 1
        deg[leaf] = 0
        # drop e from both adjacency rows
        for t in range(N):
            if nbr_edge[leaf * N + t] == e:
                nbr_edge[leaf * N + t] = -1
            if nbr_edge[other * N + t] == e:
                nbr_edge[other * N + t] = -1
    return True


@njit(cache=True)
def brute_force_transport(C, a, b):
    """Minimum cost over all basic solutions of the transportation problem.

    C: (ns, nt) cost matrix; a, b: supplies/demands (balanced).
    Returns (cost, flow matrix (ns, nt)) of the best feasible tree.
    """
    ns, nt = C.shape
    N = ns + nt
    m = ns * nt
    k = N - 1
    esrc = np.empty(m, dtype=np.int64)
    edst = np.empty(m, dtype=np.int64)
    for i in range(ns):
        for j in range(nt):
            esrc[i * nt + j] = i
            edst[i * nt + j] = j
    sel = np.empty(k, dtype=np.int64)
    for t in range(k):
        sel[t] = t
    flow = np.zeros(m, dtype=np.float64)
    deg = np.zeros(N, dtype=np.int64)
    nbr = np.full(N * N, -1, dtype=np.int64)
    acc = np.zeros(N, dtype=np.float64)
    uf = np.empty(N, dtype=np.int64)
    best_cost = np.inf
    best_flow = np.zeros((ns, nt), dtype=np.float64)

    while True:
        # acyclicity check: k = N-1 edges with no cycle <=> spanning tree
        for u in range(N):
            uf[u] = u
        is_tree = True
        for t in range(k):
            e = sel[t]
            ru = _uf_find(uf, esrc[e])
            rv = _uf_find(uf, ns + edst[e])
            if ru == rv:
                is_tree = False
                break
            uf[ru] = rv
        if is_tree:
            if _tree_flows(ns, nt, esrc, edst, sel, k, a, b,
                           flow, deg, nbr, acc):
                cost = 0.0
                for t in range(k):
                    e = sel[t]
                    cost += flow[e] * C[esrc[e], edst[e]]
                if cost < best_cost - 1e-15 * (abs(cost) + 1.0):
                    best_cost = cost
                    for i in range(ns):
                        for j in range(nt):
                            best_flow[i, j] = 0.0
                    for t in range(k):
                        e = sel[t]
                        best_flow[esrc[e], edst[e]] = flow[e]
        # next k-combination of {0..m-1}
        t = k - 1
        while t >= 0 and sel[t] == m - k + t:
            t -= 1
        if t < 0:
            break
        sel[t] += 1
        for s in range(t + 1, k):
            sel[s] = sel[s - 1] + 1
    return best_cost, best_flow
