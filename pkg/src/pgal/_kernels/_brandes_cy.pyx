# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled Brandes accumulation over a CSR adjacency.

Returns the ordered-pair shortest-path dependency sums; callers halve the
result for undirected unordered-pair betweenness.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def brandes(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    bc_arr = np.zeros(n, dtype=np.float64)
    cdef cnp.float64_t[::1] bc = bc_arr
    if n == 0:
        return bc_arr

    dist_arr = np.empty(n, dtype=np.int64)
    order_arr = np.empty(n, dtype=np.int64)
    sigma_arr = np.empty(n, dtype=np.float64)
    delta_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] dist = dist_arr
    cdef cnp.int64_t[::1] order = order_arr
    cdef cnp.float64_t[::1] sigma = sigma_arr
    cdef cnp.float64_t[::1] delta = delta_arr

    cdef Py_ssize_t s, head, tail, i, k
    cdef cnp.int64_t v, w

    for s in range(n):
        for i in range(n):
            dist[i] = -1
            sigma[i] = 0.0
            delta[i] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        # reverse BFS order: dependencies of deeper nodes are final before
        # they feed their predecessors
        for i in range(tail - 1, 0, -1):
            w = order[i]
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            bc[w] += delta[w]
    return bc_arr
