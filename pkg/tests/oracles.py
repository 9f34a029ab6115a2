"""Independent reference implementations used only by the tests."""

import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial.distance import cdist


def random_block_map(rng, n=64):
    b = np.ones((n, n), np.uint8)
    for _ in range(rng.integers(2, 6)):
        r, c = rng.integers(0, n - 4, 2)
        h, w = rng.integers(2, 15, 2)
        b[r:r + h, c:c + w] = 0
    return b


def brute_sdf(binary, res):
    free = binary.astype(bool)
    cells = np.argwhere(np.ones_like(free))
    fr, ob = np.argwhere(free), np.argwhere(~free)
    d_out = np.sqrt((cdist(cells, ob, "sqeuclidean").min(axis=1))).reshape(free.shape) * res
    d_in = np.sqrt((cdist(cells, fr, "sqeuclidean").min(axis=1))).reshape(free.shape) * res
    return np.where(free, d_out, -d_in)


def dijkstra8(passable, seed, res):
    """Shortest 8-connected grid path length between passable cell centres."""
    n_rows, n_cols = passable.shape
    ids = np.arange(n_rows * n_cols).reshape(passable.shape)
    rows, cols, w = [], [], []
    for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
        # edge from cell (r, c) to (r + dr, c + dc)
        rs = slice(0, n_rows - dr)
        cs, cd = (slice(0, n_cols - dc), slice(dc, n_cols)) if dc >= 0 else (slice(-dc, n_cols), slice(0, n_cols + dc))
        rd = slice(dr, n_rows)
        ok = passable[rs, cs] & passable[rd, cd]
        rows.append(ids[rs, cs][ok])
        cols.append(ids[rd, cd][ok])
        w.append(np.full(ok.sum(), res * math.hypot(dr, dc)))
    g = coo_matrix((np.concatenate(w), (np.concatenate(rows), np.concatenate(cols))),
                   shape=(ids.size, ids.size)).tocsr()
    d = dijkstra(g, directed=False, indices=seed[0] * n_cols + seed[1])
    return d.reshape(passable.shape)


def interp_finite(geometry, f, p):
    """Bilinear value with the weights renormalised over the finite corners."""
    res = geometry.resolution
    x0, y0 = geometry.corner
    n_rows, n_cols = f.shape
    u = min(max((p[0] - x0) / res - 0.5, 0.0), n_cols - 1.0)
    v = min(max((p[1] - y0) / res - 0.5, 0.0), n_rows - 1.0)
    c0, r0 = min(int(u), n_cols - 2), min(int(v), n_rows - 2)
    fu, fv = u - c0, v - r0
    w = np.array([(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv])
    q = np.array([f[r0, c0], f[r0, c0 + 1], f[r0 + 1, c0], f[r0 + 1, c0 + 1]])
    ok = np.isfinite(q) & (w > 0)
    if not ok.any():
        return math.inf
    return float((w[ok] * q[ok]).sum() / w[ok].sum())


def descent_failures(geometry, f, gx, gy, seed, starts, step, sample):
    """Follow -grad from each start; count walks where f fails to drop strictly."""
    seed_w = geometry.index_to_world(*seed)
    res = geometry.resolution
    failures = []
    for cell in starts:
        p = geometry.index_to_world(*cell)
        val = interp_finite(geometry, f, p)
        for _ in range(20 * max(f.shape)):
            if math.hypot(*(p - seed_w)) <= 2 * res:
                break
            g = np.array([sample(geometry, gx, p), sample(geometry, gy, p)])
            n = math.hypot(*g)
            if n < 1e-12:
                failures.append(("zero", tuple(cell)))
                break
            q = p - step * g / n
            if not geometry.contains(q):
                failures.append(("left map", tuple(cell)))
                break
            nv = interp_finite(geometry, f, q)
            if not nv < val:
                failures.append(("no decrease", tuple(cell)))
                break
            p, val = q, nv
        else:
            failures.append(("no arrival", tuple(cell)))
    return failures
