# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the sampler's inner loops."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, exp

cnp.import_array()


def tridiag_precision_draw(diag, off, rhs, z):
    cdef double[:, ::1] d = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[:, ::1] o = np.ascontiguousarray(off, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef double[:, ::1] e = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t S = d.shape[0], T = d.shape[1], s, t
    out_draw = np.empty((S, T))
    out_mean = np.empty((S, T))
    cdef double[:, ::1] draw = out_draw
    cdef double[:, ::1] mean = out_mean
    cdef double[::1] ld = np.empty(T)
    cdef double[::1] lo = np.empty(max(T - 1, 1))
    cdef double[::1] v = np.empty(T)
    cdef double piv
    for s in range(S):
        piv = d[s, 0]
        if piv <= 0:
            raise np.linalg.LinAlgError("precision matrix is not positive definite")
        ld[0] = sqrt(piv)
        v[0] = b[s, 0] / ld[0]
        for t in range(1, T):
            lo[t - 1] = o[s, t - 1] / ld[t - 1]
            piv = d[s, t] - lo[t - 1] * lo[t - 1]
            if piv <= 0:
                raise np.linalg.LinAlgError("precision matrix is not positive definite")
            ld[t] = sqrt(piv)
            v[t] = (b[s, t] - lo[t - 1] * v[t - 1]) / ld[t]
        mean[s, T - 1] = v[T - 1] / ld[T - 1]
        draw[s, T - 1] = (v[T - 1] + e[s, T - 1]) / ld[T - 1]
        for t in range(T - 2, -1, -1):
            mean[s, t] = (v[t] - lo[t] * mean[s, t + 1]) / ld[t]
            draw[s, t] = (v[t] + e[s, t] - lo[t] * draw[s, t + 1]) / ld[t]
    return out_draw, out_mean


def mixture_indicator_draw(estar, h, u, prob, mean, var):
    cdef double[:, ::1] es = np.ascontiguousarray(estar, dtype=np.float64)
    cdef double[:, ::1] hh = np.ascontiguousarray(h, dtype=np.float64)
    cdef double[:, ::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] lq = np.log(np.asarray(prob, dtype=np.float64)) - 0.5 * np.log(np.asarray(var, dtype=np.float64))
    cdef double[::1] mk = np.ascontiguousarray(mean, dtype=np.float64)
    cdef double[::1] vk = np.ascontiguousarray(var, dtype=np.float64)
    cdef Py_ssize_t S = es.shape[0], T = es.shape[1], K = mk.shape[0], s, t, k
    out = np.empty((S, T), dtype=np.int64)
    cdef long long[:, ::1] idx = out
    cdef double[::1] w = np.empty(K)
    cdef double r, top, total, target, acc
    cdef long long pick
    for s in range(S):
        for t in range(T):
            top = -1e300
            for k in range(K):
                r = es[s, t] - hh[s, t] - mk[k]
                w[k] = lq[k] - 0.5 * r * r / vk[k]
                if w[k] > top:
                    top = w[k]
            total = 0.0
            for k in range(K):
                w[k] = exp(w[k] - top)
                total += w[k]
            target = uu[s, t] * total
            acc = 0.0
            pick = 0
            for k in range(K):
                acc += w[k]
                if acc < target:
                    pick += 1
            if pick > K - 1:
                pick = K - 1
            idx[s, t] = pick
    return out
