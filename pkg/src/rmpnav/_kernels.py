"""Compiled grid kernels: exact squared EDT and fast marching."""

import math

import numpy as np
from numba import njit

# stands in for +inf inside the lower-envelope arithmetic; far above any
# squared distance on a realistic grid yet exact when q^2 is added
EDT_BIG = 1e12

@njit(cache=True)
def _dt1d(f, d, v, z):
    n = f.shape[0]
    k = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k]]


@njit(cache=True)
def edt_sq(features):
    """Squared distance (in cells^2) from every cell to the nearest feature.

    Cells with no feature anywhere in the grid get values >= EDT_BIG.
    """
    n_rows, n_cols = features.shape
    n = max(n_rows, n_cols)
    out = np.empty((n_rows, n_cols))
    for r in range(n_rows):
        for c in range(n_cols):
            out[r, c] = 0.0 if features[r, c] else EDT_BIG
    f = np.empty(n)
    d = np.empty(n)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1)
    for c in range(n_cols):
        for r in range(n_rows):
            f[r] = out[r, c]
        _dt1d(f[:n_rows], d[:n_rows], v, z)
        for r in range(n_rows):
            out[r, c] = d[r]
    for r in range(n_rows):
        for c in range(n_cols):
            f[c] = out[r, c]
        _dt1d(f[:n_cols], d[:n_cols], v, z)
        for c in range(n_cols):
            out[r, c] = d[c]
    return out


@njit(cache=True)
def _quadratic(a, b, h):
    # upwind solution from two orthogonal neighbour values a, b at spacing h
    if a > b:
        a, b = b, a
    if b - a >= h:
        return a + h
    return 0.5 * (a + b + math.sqrt(2.0 * h * h - (a - b) * (a - b)))


@njit(cache=True)
def fast_march(passable, seed_row, seed_col, h):
    """First-order fast marching from one seed with unit speed on passable cells.

    Each trial value is the smaller of the axis-aligned and the diagonal
    upwind stencils. The narrow band is an indexed binary heap ordered by
    (value, row-major index), so equal values settle in index order.
    Impassable and unreached cells stay at +inf.
    """
    # written as one loop over flat padded arrays: helper calls taking
    # arrays cost more than the whole stencil in numba
    n_rows, n_cols = passable.shape
    w = n_cols + 2
    n_pad = (n_rows + 2) * w
    u = np.full(n_pad, np.inf)
    known = np.full(n_pad, np.inf)  # value once settled, inf before
    open_ = np.zeros(n_pad, dtype=np.bool_)
    for r in range(n_rows):
        for c in range(n_cols):
            open_[(r + 1) * w + c + 1] = passable[r, c]
    key = np.empty(n_pad)
    idx = np.empty(n_pad, dtype=np.int64)
    pos = np.full(n_pad, -1, dtype=np.int64)
    hd = h * math.sqrt(2.0)
    offsets = (-w - 1, -w, -w + 1, -1, 1, w - 1, w, w + 1)

    seed = (seed_row + 1) * w + seed_col + 1
    u[seed] = 0.0
    key[0] = 0.0
    idx[0] = seed
    pos[seed] = 0
    size = 1
    while size > 0:
        top = idx[0]
        pos[top] = -1
        size -= 1
        if size > 0:
            key[0] = key[size]
            idx[0] = idx[size]
            pos[idx[0]] = 0
            i = 0
            while True:
                child = 2 * i + 1
                if child >= size:
                    break
                right = child + 1
                if right < size and (key[right] < key[child] or (key[right] == key[child] and idx[right] < idx[child])):
                    child = right
                if not (key[child] < key[i] or (key[child] == key[i] and idx[child] < idx[i])):
                    break
                key[i], key[child] = key[child], key[i]
                idx[i], idx[child] = idx[child], idx[i]
                pos[idx[i]] = i
                pos[idx[child]] = child
                i = child
        known[top] = u[top]
        open_[top] = False
        for off in offsets:
            nb = top + off
            if not open_[nb]:
                continue
            ax = min(known[nb - 1], known[nb + 1])
            ay = min(known[nb - w], known[nb + w])
            d1 = min(known[nb - w - 1], known[nb + w + 1])
            d2 = min(known[nb - w + 1], known[nb + w - 1])
            cand = np.inf
            if ax < np.inf or ay < np.inf:
                cand = _quadratic(ax, ay, h)
            if d1 < np.inf or d2 < np.inf:
                cand = min(cand, _quadratic(d1, d2, hd))
            if cand < u[nb]:
                u[nb] = cand
                i = pos[nb]
                if i < 0:
                    i = size
                    size += 1
                    idx[i] = nb
                key[i] = cand
                pos[nb] = i
                while i > 0:
                    parent = (i - 1) >> 1
                    if not (key[i] < key[parent] or (key[i] == key[parent] and idx[i] < idx[parent])):
                        break
                    key[i], key[parent] = key[parent], key[i]
                    idx[i], idx[parent] = idx[parent], idx[i]
                    pos[idx[i]] = i
                    pos[idx[parent]] = parent
                    i = parent
    out = np.empty((n_rows, n_cols))
    for r in range(n_rows):
        for c in range(n_cols):
            out[r, c] = known[(r + 1) * w + c + 1]
    return out
