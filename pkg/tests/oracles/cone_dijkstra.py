"""Shortest paths on a cone by Dijkstra over a dense polar grid.

Independent of the closed-form geodesics in the package: only local
Euclidean edge lengths in a developed chart are used, and the global path
(around or through the tip, across the angular seam) is found by search.
Run as a script to print the frozen values used in tests/test_targets.py.
"""
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

OMEGA = 3 * np.pi
PAIRS = [((0.8, 0.0), (0.6, 1.0)), ((0.8, 0.0), (0.6, 4.0)), ((0.5, 0.0), (0.5, 3.0)),
         ((0.7, 0.2), (0.7, 9.0)), ((0.3, 1.0), (0.9, 5.5)), ((0.0, 0.0), (0.6, 2.0))]


def grid_distances(omega=OMEGA, nr=81, nt=720, reach=4):
    rs = np.linspace(0, 1, nr)[1:]
    ts = np.arange(nt) * omega / nt
    idx = lambda i, j: 1 + i * nt + (j % nt)
    rows, cols, w = [], [], []
    for i, r in enumerate(rs):
        for di in range(-reach, reach + 1):
            k = i + di
            if not 0 <= k < len(rs):
                continue
            for dj in range(0, reach + 1):
                if di <= 0 and dj == 0:
                    continue
                a = dj * omega / nt
                d = np.sqrt(r * r + rs[k] ** 2 - 2 * r * rs[k] * np.cos(a))
                for j in range(nt):
                    rows.append(idx(i, j))
                    cols.append(idx(k, j + dj))
                    w.append(d)
    # spokes to the tip
    for j in range(nt):
        rows.append(0)
        cols.append(idx(0, j))
        w.append(rs[0])
    n = 1 + len(rs) * nt
    G = coo_matrix((w, (rows, cols)), shape=(n, n)).tocsr()
    return G, rs, ts, idx


def node(rs, ts, idx, p):
    r, t = p
    if r == 0:
        return 0
    i = int(np.argmin(np.abs(rs - r)))
    j = int(np.argmin(np.abs(ts - t % OMEGA)))
    return idx(i, j)


if __name__ == "__main__":
    G, rs, ts, idx = grid_distances()
    for p, q in PAIRS:
        a, b = node(rs, ts, idx, p), node(rs, ts, idx, q)
        d = dijkstra(G, directed=False, indices=a)[b]
        print(p, q, round(float(d), 4))
