# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t
from libcpp.algorithm cimport sort
from libcpp.vector cimport vector

cnp.import_array()

BACKEND = "cython"


def pair_weights(indptr, indices, Py_ssize_t n_nodes, Py_ssize_t cap=0):
    cdef const int64_t[::1] ptr = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const int64_t[::1] ids = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t n_rows = ptr.shape[0] - 1
    cdef Py_ssize_t r, x, y, lo, hi, length
    cdef int64_t total = 0, a, b, pos = 0, nn = n_nodes

    for r in range(n_rows):
        length = ptr[r + 1] - ptr[r]
        if cap > 0 and length > cap:
            length = cap
        total += length * (length - 1) // 2

    cdef vector[int64_t] keys
    keys.resize(total)
    with nogil:
        for r in range(n_rows):
            lo = ptr[r]
            hi = ptr[r + 1]
            if cap > 0 and hi - lo > cap:
                hi = lo + cap
            for x in range(lo, hi):
                a = ids[x]
                for y in range(x + 1, hi):
                    b = ids[y]
                    if a < b:
                        keys[pos] = a * nn + b
                    else:
                        keys[pos] = b * nn + a
                    pos += 1
        sort(keys.begin(), keys.end())

    # run-length encode the sorted keys
    cdef Py_ssize_t n_unique = 0, i
    for i in range(total):
        if i == 0 or keys[i] != keys[i - 1]:
            n_unique += 1
    src_arr = np.empty(n_unique, dtype=np.int64)
    dst_arr = np.empty(n_unique, dtype=np.int64)
    w_arr = np.empty(n_unique, dtype=np.int64)
    cdef int64_t[::1] src = src_arr
    cdef int64_t[::1] dst = dst_arr
    cdef int64_t[::1] w = w_arr
    cdef Py_ssize_t k = -1
    for i in range(total):
        if i == 0 or keys[i] != keys[i - 1]:
            k += 1
            src[k] = keys[i] // nn
            dst[k] = keys[i] % nn
            w[k] = 1
        else:
            w[k] += 1
    return src_arr, dst_arr, w_arr


cdef double _quality(double[::1] inc, double[::1] tot, double m2, double resolution, Py_ssize_t n) nogil:
    cdef double q = 0.0
    cdef Py_ssize_t c
    for c in range(n):
        if tot[c] > 0.0:
            q += inc[c] / m2 - resolution * (tot[c] / m2) * (tot[c] / m2)
    return q


def louvain_local_moving(indptr, nbrs, wts, self_loops, degree, order, double resolution, double min_gain):
    cdef const int64_t[::1] ptr = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const int64_t[::1] nb = np.ascontiguousarray(nbrs, dtype=np.int64)
    cdef const double[::1] w = np.ascontiguousarray(wts, dtype=np.float64)
    cdef const double[::1] sl = np.ascontiguousarray(self_loops, dtype=np.float64)
    cdef const double[::1] deg = np.ascontiguousarray(degree, dtype=np.float64)
    cdef const int64_t[::1] visit = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t n = deg.shape[0]

    comm_arr = np.arange(n, dtype=np.int64)
    tot_arr = np.array(deg, dtype=np.float64, copy=True)
    inc_arr = np.array(sl, dtype=np.float64, copy=True)
    link_arr = np.zeros(n, dtype=np.float64)
    seen_arr = np.zeros(n, dtype=np.uint8)
    touched_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] comm = comm_arr
    cdef double[::1] tot = tot_arr
    cdef double[::1] inc = inc_arr
    cdef double[::1] link = link_arr
    cdef unsigned char[::1] seen = seen_arr
    cdef int64_t[::1] touched = touched_arr

    cdef double m2 = 0.0, ki, own_link, best_gain, own_gain, gain, cur_q, new_q
    cdef Py_ssize_t i, p, t, n_touched, idx
    cdef int64_t c, own, best_c
    cdef Py_ssize_t moves
    cdef bint moved_any = False

    with nogil:
        for i in range(n):
            m2 += deg[i]
        cur_q = _quality(inc, tot, m2, resolution, n)
        while True:
            moves = 0
            for idx in range(visit.shape[0]):
                i = visit[idx]
                own = comm[i]
                ki = deg[i]
                n_touched = 0
                for p in range(ptr[i], ptr[i + 1]):
                    c = comm[nb[p]]
                    if not seen[c]:
                        seen[c] = 1
                        link[c] = 0.0
                        touched[n_touched] = c
                        n_touched += 1
                    link[c] += w[p]
                own_link = link[own] if seen[own] else 0.0
                tot[own] -= ki
                inc[own] -= 2.0 * own_link + sl[i]

                best_c = own
                best_gain = own_link - resolution * tot[own] * ki / m2
                own_gain = best_gain
                for t in range(n_touched):
                    c = touched[t]
                    if c == own:
                        continue
                    gain = link[c] - resolution * tot[c] * ki / m2
                    if gain > best_gain or (gain == best_gain and best_c != own and c < best_c):
                        best_c = c
                        best_gain = gain
                if best_c != own and not best_gain > own_gain:
                    best_c = own

                tot[best_c] += ki
                inc[best_c] += 2.0 * (link[best_c] if seen[best_c] else 0.0) + sl[i]
                if best_c != own:
                    comm[i] = best_c
                    moves += 1
                for t in range(n_touched):
                    seen[touched[t]] = 0
            if moves == 0:
                break
            moved_any = True
            new_q = _quality(inc, tot, m2, resolution, n)
            gain = new_q - cur_q
            cur_q = new_q
            if gain < min_gain:
                break
    return comm_arr, bool(moved_any)
