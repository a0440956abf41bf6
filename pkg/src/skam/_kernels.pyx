# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels; same contracts as skam._kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


def zone_any(grad, frames, thresholds):
    cdef double[:, ::1] g = np.ascontiguousarray(grad, dtype=np.float64)
    cdef double[:, :, ::1] f = np.ascontiguousarray(frames, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef Py_ssize_t N = g.shape[0], L = f.shape[0], n = f.shape[1], d = f.shape[2]
    out = np.zeros(N, dtype=bool)
    cdef cnp.uint8_t[::1] o = out.view(np.uint8)
    cdef Py_ssize_t p, l, j, a
    cdef double c, s
    with nogil:
        for p in range(N):
            for l in range(L):
                s = 0.0
                for j in range(n):
                    c = 0.0
                    for a in range(d):
                        c = c + g[p, a] * f[l, j, a]
                    s = s + c * c
                if s < t[l] * t[l]:
                    o[p] = 1
                    break
    return out


def interval_union_length(starts, ends):
    cdef double[:, ::1] s = np.ascontiguousarray(starts, dtype=np.float64)
    cdef double[:, ::1] e = np.ascontiguousarray(ends, dtype=np.float64)
    cdef Py_ssize_t G = s.shape[0], L = s.shape[1]
    cdef cnp.intp_t[:, ::1] order = np.ascontiguousarray(np.argsort(starts, axis=1, kind="stable"), dtype=np.intp)
    out = np.zeros(G, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t r, i, idx
    cdef double reach, lo, hi, total
    with nogil:
        for r in range(G):
            reach = -1e300
            total = 0.0
            for i in range(L):
                idx = order[r, i]
                lo = s[r, idx]
                hi = e[r, idx]
                if hi <= lo:
                    continue
                if lo < reach:
                    lo = reach
                if hi > lo:
                    total = total + (hi - lo)
                if hi > reach:
                    reach = hi
            o[r] = total
    return out
