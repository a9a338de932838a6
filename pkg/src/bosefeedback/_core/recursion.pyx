# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Batched affine recursion z[s+1] = F z[s] + G u[s] + c[s]."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def linear_recursion(const double[:, ::1] F, const double[:, ::1] G, const double[:, ::1] z0,
                     const double[:, :, ::1] u, c=None):
    cdef Py_ssize_t n_traj = u.shape[0]
    cdef Py_ssize_t n_steps = u.shape[1]
    cdef Py_ssize_t k = u.shape[2]
    cdef Py_ssize_t n = F.shape[0]
    cdef Py_ssize_t t, s, i, j
    cdef double acc
    cdef bint has_c = c is not None
    cdef const double[:, ::1] cv
    if has_c:
        cv = np.ascontiguousarray(c, dtype=np.float64)
    else:
        cv = np.zeros((1, n))
    out_arr = np.empty((n_traj, n_steps + 1, n))
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for t in range(n_traj):
            for i in range(n):
                out[t, 0, i] = z0[t, i]
            for s in range(n_steps):
                for i in range(n):
                    acc = 0.0
                    for j in range(n):
                        acc = acc + F[i, j] * out[t, s, j]
                    for j in range(k):
                        acc = acc + G[i, j] * u[t, s, j]
                    if has_c:
                        acc = acc + cv[s, i]
                    out[t, s + 1, i] = acc
    return out_arr
