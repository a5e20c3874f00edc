"""Pure-Python implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation, including the order
of floating-point accumulation, so both backends return identical results.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def pair_weights(indptr, indices, n_nodes: int, cap: int = 0):
    """Co-occurrence counts of node pairs over CSR rows.

    Row ``r`` holds distinct node ids ``indices[indptr[r]:indptr[r+1]]``.
    With ``cap > 0`` only the first ``cap`` ids of each row take part.
    Returns ``(src, dst, weight)`` int arrays sorted by ``(src, dst)`` with
    ``src < dst``.
    """
    counts: dict[int, int] = {}
    get = counts.get
    indptr = indptr.tolist()
    ids = indices.tolist()
    for r in range(len(indptr) - 1):
        lo, hi = indptr[r], indptr[r + 1]
        if cap > 0 and hi - lo > cap:
            hi = lo + cap
        row = ids[lo:hi]
        for x in range(len(row)):
            a = row[x]
            for y in range(x + 1, len(row)):
                b = row[y]
                key = a * n_nodes + b if a < b else b * n_nodes + a
                counts[key] = get(key, 0) + 1
    keys = sorted(counts)
    src = np.fromiter((k // n_nodes for k in keys), dtype=np.int64, count=len(keys))
    dst = np.fromiter((k % n_nodes for k in keys), dtype=np.int64, count=len(keys))
    weight = np.fromiter((counts[k] for k in keys), dtype=np.int64, count=len(keys))
    return src, dst, weight


def louvain_local_moving(indptr, nbrs, wts, self_loops, degree, order, resolution: float, min_gain: float):
    """One Louvain level: greedy node moves until a pass gains < ``min_gain``.

    Graph is symmetric CSR without self-loops; ``self_loops[i]`` is the
    diagonal adjacency entry and ``degree[i]`` the weighted degree
    including it.  Returns the community id of each node (ids are node ids
    of the community's founding node, not yet renumbered) and whether any
    move happened.
    """
    n = len(degree)
    indptr = indptr.tolist()
    nbrs = nbrs.tolist()
    wts = wts.tolist()
    self_loops = self_loops.tolist()
    degree = degree.tolist()
    order = order.tolist()

    m2 = 0.0
    for i in range(n):
        m2 += degree[i]
    comm = list(range(n))
    tot = list(degree)
    inc = list(self_loops)

    def quality() -> float:
        q = 0.0
        for c in range(n):
            if tot[c] > 0.0:
                q += inc[c] / m2 - resolution * (tot[c] / m2) * (tot[c] / m2)
        return q

    moved_any = False
    cur_q = quality()
    while True:
        moves = 0
        for i in order:
            own = comm[i]
            ki = degree[i]
            # weights from i into each neighbouring community, in adjacency order
            link: dict[int, float] = {}
            for p in range(indptr[i], indptr[i + 1]):
                c = comm[nbrs[p]]
                link[c] = link.get(c, 0.0) + wts[p]
            own_link = link.get(own, 0.0)
            tot[own] -= ki
            inc[own] -= 2.0 * own_link + self_loops[i]

            best_c = own
            best_gain = own_link - resolution * tot[own] * ki / m2
            own_gain = best_gain
            for c, k_in in link.items():
                if c == own:
                    continue
                gain = k_in - resolution * tot[c] * ki / m2
                if gain > best_gain or (gain == best_gain and best_c != own and c < best_c):
                    best_c = c
                    best_gain = gain
            if best_c != own and not best_gain > own_gain:
                best_c = own

            best_link = link.get(best_c, 0.0)
            tot[best_c] += ki
            inc[best_c] += 2.0 * best_link + self_loops[i]
            if best_c != own:
                comm[i] = best_c
                moves += 1
        if moves == 0:
            break
        moved_any = True
        new_q = quality()
        gained = new_q - cur_q
        cur_q = new_q
        if gained < min_gain:
            break
    return np.asarray(comm, dtype=np.int64), moved_any
