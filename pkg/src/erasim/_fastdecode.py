"""Numba hot path for per-shot matching decode.

The base graph (every heralded edge at its removed weight) has
precomputed all-pairs distances ``D0`` and path observable parities
``M0``.  A shot only ever *lowers* weights on edges whose flags were
raised, so exact per-shot distances follow from a small Floyd-Warshall
over the set S = defects + changed-edge endpoints + boundary.  Matching
over the defects (pair or boundary) is an exact bitmask DP for up to 16
defects; larger syndromes return -1 and the caller falls back to the
blossom reference path.
"""

from __future__ import annotations

import numpy as np
from numba import njit

INF = 1e18


@njit(cache=True)
def decode_one(D0, M0, boundary, defect_nodes, ch_u, ch_v, ch_w, ch_m):
    n = D0.shape[0]
    baseline = 0

    defect = np.zeros(n, dtype=np.uint8)
    for i in range(defect_nodes.shape[0]):
        defect[defect_nodes[i]] ^= 1

    # Negative-weight edges are always used: complement their usage.
    w = ch_w.copy()
    for e in range(ch_u.shape[0]):
        if w[e] < 0.0:
            if ch_u[e] != boundary:
                defect[ch_u[e]] ^= 1
            if ch_v[e] != boundary:
                defect[ch_v[e]] ^= 1
            baseline ^= ch_m[e]
            w[e] = -w[e]
    defect[boundary] = 0

    # Collect S: defects, changed endpoints, boundary.
    idx_of = np.full(n, -1, dtype=np.int64)
    S = np.empty(n, dtype=np.int64)
    ns = 0
    for v in range(n):
        if defect[v]:
            idx_of[v] = ns
            S[ns] = v
            ns += 1
    for e in range(ch_u.shape[0]):
        for v in (ch_u[e], ch_v[e]):
            if idx_of[v] < 0:
                idx_of[v] = ns
                S[ns] = v
                ns += 1
    if idx_of[boundary] < 0:
        idx_of[boundary] = ns
        S[ns] = boundary
        ns += 1

    m = 0
    for i in range(ns):
        if defect[S[i]]:
            m += 1
    if m == 0:
        return baseline
    if m > 16:
        return -1

    A = np.empty((ns, ns), dtype=np.float64)
    P = np.zeros((ns, ns), dtype=np.uint8)
    for i in range(ns):
        for j in range(ns):
            A[i, j] = D0[S[i], S[j]]
            P[i, j] = M0[S[i], S[j]]
        A[i, i] = 0.0
        P[i, i] = 0
    for e in range(ch_u.shape[0]):
        a = idx_of[ch_u[e]]
        b = idx_of[ch_v[e]]
        if a == b:
            # Self-loop after endpoint identification (boundary-boundary):
            # using it is free only if profitable; weight >= 0 here so skip.
            continue
        if w[e] < A[a, b]:
            A[a, b] = w[e]
            A[b, a] = w[e]
            P[a, b] = ch_m[e]
            P[b, a] = ch_m[e]

    for k in range(ns):
        for i in range(ns):
            dik = A[i, k]
            for j in range(ns):
                nd = dik + A[k, j]
                if nd < A[i, j]:
                    A[i, j] = nd
                    P[i, j] = P[i, k] ^ P[k, j]

    dloc = np.empty(m, dtype=np.int64)
    t = 0
    for i in range(ns):
        if defect[S[i]]:
            dloc[t] = i
            t += 1
    bloc = idx_of[boundary]

    full = (1 << m) - 1
    f = np.full(full + 1, INF, dtype=np.float64)
    choice = np.full(full + 1, -2, dtype=np.int64)
    f[0] = 0.0
    for mask in range(1, full + 1):
        i = 0
        while not (mask >> i) & 1:
            i += 1
        rest_i = mask & ~(1 << i)
        best = A[dloc[i], bloc] + f[rest_i]
        bj = -1
        j = i + 1
        while j < m:
            if (mask >> j) & 1:
                c = A[dloc[i], dloc[j]] + f[rest_i & ~(1 << j)]
                if c < best:
                    best = c
                    bj = j
            j += 1
        f[mask] = best
        choice[mask] = bj

    mask = full
    while mask:
        i = 0
        while not (mask >> i) & 1:
            i += 1
        j = choice[mask]
        if j < 0:
            baseline ^= P[dloc[i], bloc]
            mask &= ~(1 << i)
        else:
            baseline ^= P[dloc[i], dloc[j]]
            mask &= ~((1 << i) | (1 << j))
    return baseline
