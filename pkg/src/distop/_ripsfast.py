"""Degree 0 and 1 Rips persistence by cohomology reduction with clearing.

The total order on simplices is (time, dimension, lexicographic vertices),
the same order ``persistence.reduce_boundary`` uses, so the resulting
simplex pairs coincide with the standard reduction of the 2-skeleton.
Triangles are never materialized: a triangle is encoded as
``dense_rank(diameter) * n**3 + lex(x, y, z)`` and coboundaries are
enumerated on demand.
"""

import numpy as np
from numba import njit, types
from numba.typed import Dict, List


@njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def _symdiff(a, b):
    out = np.empty(len(a) + len(b), dtype=np.int64)
    i = j = k = 0
    while i < len(a) and j < len(b):
        if a[i] < b[j]:
            out[k] = a[i]
            i += 1
            k += 1
        elif b[j] < a[i]:
            out[k] = b[j]
            j += 1
            k += 1
        else:
            i += 1
            j += 1
    while i < len(a):
        out[k] = a[i]
        i += 1
        k += 1
    while j < len(b):
        out[k] = b[j]
        j += 1
        k += 1
    return out[:k]


@njit(cache=True)
def _coface_key(D, vrank, a, b, c, n):
    # vertices of the triangle in increasing order
    x, y, z = a, b, c
    if x > y:
        x, y = y, x
    if y > z:
        y, z = z, y
    if x > y:
        x, y = y, x
    m = D[x, y]
    r = vrank[x, y]
    if D[x, z] > m:
        m = D[x, z]
        r = vrank[x, z]
    if D[y, z] > m:
        r = vrank[y, z]
    return r * n * n * n + (x * n + y) * n + z


@njit(cache=True)
def _coboundary(D, vrank, a, b, n):
    out = np.empty(n - 2, dtype=np.int64)
    k = 0
    for c in range(n):
        if c != a and c != b:
            out[k] = _coface_key(D, vrank, a, b, c, n)
            k += 1
    out.sort()
    return out


@njit(cache=True)
def _min_coface(D, vrank, a, b, n):
    best = np.int64(-1)
    for c in range(n):
        if c != a and c != b:
            key = _coface_key(D, vrank, a, b, c, n)
            if best < 0 or key < best:
                best = key
    return best


@njit(cache=True)
def rips_pairs(D):
    """Return (h0, h1, h1_essential) as index arrays.

    h0 rows: (dying vertex, edge a, edge b); h1 rows: (edge a, edge b, x, y, z);
    h1_essential rows: (edge a, edge b). Essential degree-0 classes are the
    component roots and are not listed.
    """
    n = D.shape[0]
    ne = n * (n - 1) // 2
    ea = np.empty(ne, dtype=np.int64)
    eb = np.empty(ne, dtype=np.int64)
    ed = np.empty(ne, dtype=np.float64)
    k = 0
    for a in range(n):
        for b in range(a + 1, n):
            ea[k] = a
            eb[k] = b
            ed[k] = D[a, b]
            k += 1
    order = np.argsort(ed, kind="mergesort")
    vrank = np.zeros((n, n), dtype=np.int64)
    rank = -1
    last = -1.0
    for pos in range(ne):
        e = order[pos]
        if pos == 0 or ed[e] != last:
            rank += 1
            last = ed[e]
        vrank[ea[e], eb[e]] = rank
        vrank[eb[e], ea[e]] = rank

    parent = np.arange(n)
    dying = np.zeros(ne, dtype=np.bool_)
    h0 = np.empty((max(n - 1, 0), 3), dtype=np.int64)
    nh0 = 0
    for pos in range(ne):
        e = order[pos]
        ra = _find(parent, ea[e])
        rb = _find(parent, eb[e])
        if ra != rb:
            young = max(ra, rb)
            parent[young] = min(ra, rb)
            dying[e] = True
            h0[nh0, 0] = young
            h0[nh0, 1] = ea[e]
            h0[nh0, 2] = eb[e]
            nh0 += 1

    pivots = Dict.empty(key_type=types.int64, value_type=types.int64)
    vlists = List()
    cols = List()
    h1 = np.empty((ne, 5), dtype=np.int64)
    nh1 = 0
    ess = np.empty((ne, 2), dtype=np.int64)
    ness = 0
    n3 = n * n * n
    empty = np.empty(0, dtype=np.int64)
    for pos in range(ne - 1, -1, -1):
        e = order[pos]
        if dying[e]:
            continue
        a = ea[e]
        b = eb[e]
        if n < 3:
            ess[ness, 0] = a
            ess[ness, 1] = b
            ness += 1
            continue
        low = _min_coface(D, vrank, a, b, n)
        if low in pivots:
            col = _coboundary(D, vrank, a, b, n)
            v = np.array([e], dtype=np.int64)
            while len(col) > 0 and col[0] in pivots:
                j = pivots[col[0]]
                other = cols[j]
                if len(other) == 0:
                    other = empty
                    for f in vlists[j]:
                        other = _symdiff(other, _coboundary(D, vrank, ea[f], eb[f], n))
                    cols[j] = other
                col = _symdiff(col, other)
                v = _symdiff(v, vlists[j])
            if len(col) == 0:
                ess[ness, 0] = a
                ess[ness, 1] = b
                ness += 1
                continue
            low = col[0]
            stored = col
        else:
            v = np.array([e], dtype=np.int64)
            stored = empty
        pivots[low] = len(vlists)
        vlists.append(v)
        cols.append(stored)
        lex = low % n3
        h1[nh1, 0] = a
        h1[nh1, 1] = b
        h1[nh1, 2] = lex // (n * n)
        h1[nh1, 3] = (lex // n) % n
        h1[nh1, 4] = lex % n
        nh1 += 1
    return h0[:nh0], h1[:nh1], ess[:ness]
