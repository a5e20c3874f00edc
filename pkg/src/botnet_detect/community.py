"""Seeded, deterministic Louvain community detection on coordination graphs.

Modularity with resolution ``gamma``::

    Q = 1/(2m) * sum_ij [A_ij - gamma * k_i * k_j / (2m)] * delta(c_i, c_j)

Local moving visits nodes in a permutation of the lexicographic node order
drawn from ``numpy.random.default_rng(seed)`` (PCG64); gain ties go to the
smallest community id and a node only moves on a strict gain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import kernels
from .detect import CoordGraph
from .errors import InputError

MIN_GAIN = 1e-9


@dataclass
class CommunityAssignment:
    labels: dict[str, int]
    modularity: float
    resolution: float = 1.0
    seed: int = 0

    @property
    def n_communities(self) -> int:
        return len(set(self.labels.values()))

    def members(self) -> list[list[str]]:
        out: list[list[str]] = [[] for _ in range(self.n_communities)]
        for node in sorted(self.labels):
            out[self.labels[node]].append(node)
        return out


def _membership_quality(g: CoordGraph, membership: np.ndarray, resolution: float) -> float:
    w = g.weight.astype(np.float64)
    m2 = 2.0 * float(w.sum())
    n_comm = int(membership.max()) + 1
    degree = np.bincount(g.src, weights=w, minlength=g.n_nodes) + np.bincount(g.dst, weights=w, minlength=g.n_nodes)
    tot = np.bincount(membership, weights=degree, minlength=n_comm)
    internal = membership[g.src] == membership[g.dst]
    inc = 2.0 * np.bincount(membership[g.src][internal], weights=w[internal], minlength=n_comm)
    return float(np.sum(inc / m2 - resolution * (tot / m2) * (tot / m2)))


def modularity(g: CoordGraph, labels: Mapping[str, int], resolution: float = 1.0) -> float:
    """Modularity of ``labels`` on ``g``; every node must be labelled."""
    missing = [a for a in g.nodes if a not in labels]
    if missing:
        raise InputError(f"unlabelled node(s): {missing[:5]}")
    if g.n_edges == 0:
        raise InputError("modularity is undefined on a graph without edges")
    membership = np.array([labels[a] for a in g.nodes], dtype=np.int64)
    _, membership = np.unique(membership, return_inverse=True)
    return _membership_quality(g, membership.astype(np.int64), resolution)


def _dense_by_first_appearance(comm: np.ndarray) -> np.ndarray:
    uniq, inv = np.unique(comm, return_inverse=True)
    first = np.full(len(uniq), len(comm), dtype=np.int64)
    np.minimum.at(first, inv, np.arange(len(comm), dtype=np.int64))
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(uniq), dtype=np.int64)
    return rank[inv]


def _csr(n: int, rows: np.ndarray, cols: np.ndarray, w: np.ndarray):
    order = np.lexsort((cols, rows))
    rows, cols, w = rows[order], cols[order], w[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, cols.astype(np.int64), w.astype(np.float64)


def _aggregate(indptr, nbrs, wts, self_loops, comm: np.ndarray, n_comm: int):
    n = len(self_loops)
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    crow, ccol = comm[rows], comm[nbrs]
    inside = crow == ccol
    new_self = np.bincount(comm, weights=self_loops, minlength=n_comm)
    new_self = new_self + np.bincount(crow[inside], weights=wts[inside], minlength=n_comm)
    keys = crow[~inside] * n_comm + ccol[~inside]
    uniq, inv = np.unique(keys, return_inverse=True)
    summed = np.bincount(inv, weights=wts[~inside], minlength=len(uniq))
    indptr2, nbrs2, wts2 = _csr(n_comm, uniq // n_comm, uniq % n_comm, summed)
    return indptr2, nbrs2, wts2, new_self


def louvain(g: CoordGraph, resolution: float = 1.0, seed: int = 0) -> CommunityAssignment:
    """Two-phase Louvain; returns dense labels numbered by first appearance in node order."""
    if g.n_nodes == 0 or g.n_edges == 0:
        raise InputError("cannot detect communities on an empty graph")
    if np.any(g.weight <= 0):
        raise InputError("edge weights must be positive")
    rng = np.random.default_rng(seed)
    n = g.n_nodes
    indptr, nbrs, wts = _csr(
        n, np.concatenate([g.src, g.dst]), np.concatenate([g.dst, g.src]), np.concatenate([g.weight, g.weight])
    )
    self_loops = np.zeros(n, dtype=np.float64)
    membership = np.arange(n, dtype=np.int64)
    q_prev = _membership_quality(g, membership, resolution)
    n_level = n
    while True:
        rows = np.repeat(np.arange(n_level, dtype=np.int64), np.diff(indptr))
        degree = np.bincount(rows, weights=wts, minlength=n_level) + self_loops
        order = rng.permutation(n_level).astype(np.int64)
        comm, moved = kernels.louvain_local_moving(
            indptr, nbrs, wts, self_loops, degree, order, float(resolution), MIN_GAIN
        )
        if not moved:
            break
        comm = _dense_by_first_appearance(np.asarray(comm, dtype=np.int64))
        membership = comm[membership]
        n_comm = int(comm.max()) + 1
        q_new = _membership_quality(g, membership, resolution)
        if q_new - q_prev < MIN_GAIN or n_comm == n_level:
            break
        q_prev = q_new
        indptr, nbrs, wts, self_loops = _aggregate(indptr, nbrs, wts, self_loops, comm, n_comm)
        n_level = n_comm

    membership = _dense_by_first_appearance(membership)
    labels = dict(zip(g.nodes, membership.tolist()))
    return CommunityAssignment(labels, _membership_quality(g, membership, resolution), float(resolution), int(seed))
