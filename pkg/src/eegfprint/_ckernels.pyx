# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: per-epoch PLI/PLV pair features and pair scoring.

Same contracts as ``_kernels_py``.  Epochs (and score pairs) are independent
work units, parallelized with OpenMP over disjoint output rows, so results
do not depend on the thread count.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport fabs, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"


cdef void _pli_epoch(const double[:, ::1] ct, const double[:, ::1] st,
                     Py_ssize_t base, Py_ssize_t window,
                     double[:, ::1] out, Py_ssize_t e) noexcept nogil:
    cdef Py_ssize_t n_ch = ct.shape[0]
    cdef Py_ssize_t i, j, t, p = 0
    cdef double v, acc
    for i in range(n_ch):
        for j in range(i + 1, n_ch):
            acc = 0.0
            for t in range(base, base + window):
                # sin(phi_i - phi_j) expanded from per-channel sin/cos tables
                v = st[i, t] * ct[j, t] - ct[i, t] * st[j, t]
                if v > 0.0:
                    acc += 1.0
                elif v < 0.0:
                    acc -= 1.0
            out[e, p] = fabs(acc) / window
            p += 1


cdef void _plv_epoch(const double[:, ::1] ct, const double[:, ::1] st,
                     Py_ssize_t base, Py_ssize_t window,
                     double[:, ::1] out, Py_ssize_t e) noexcept nogil:
    cdef Py_ssize_t n_ch = ct.shape[0]
    cdef Py_ssize_t i, j, t, p = 0
    cdef double re, im, v
    for i in range(n_ch):
        for j in range(i + 1, n_ch):
            re = 0.0
            im = 0.0
            for t in range(base, base + window):
                re += ct[i, t] * ct[j, t] + st[i, t] * st[j, t]
                im += st[i, t] * ct[j, t] - ct[i, t] * st[j, t]
            v = sqrt(re * re + im * im) / window
            if v > 1.0:
                v = 1.0
            out[e, p] = v
            p += 1


def _prepare(phases, int window):
    if window <= 0:
        raise ValueError("window must be positive")
    ph = np.ascontiguousarray(phases, dtype=np.float64)
    if ph.ndim != 2:
        raise ValueError("phases must be channels x samples")
    n_ch, n_s = ph.shape
    n_ep = n_s // window
    n_pairs = n_ch * (n_ch - 1) // 2
    out = np.empty((n_ep, n_pairs), dtype=np.float64)
    return ph, out, n_ep


def pli_epoch_features(phases, int window):
    """Per-epoch PLI features, epochs x pairs (row-major upper triangle)."""
    ph, out_arr, n_ep = _prepare(phases, window)
    if out_arr.size == 0:
        return out_arr
    ct_arr = np.cos(ph)
    st_arr = np.sin(ph)
    cdef const double[:, ::1] ct = ct_arr
    cdef const double[:, ::1] st = st_arr
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t e, n = n_ep, w = window
    for e in prange(n, nogil=True, schedule='static'):
        _pli_epoch(ct, st, e * w, w, out, e)
    return out_arr


def plv_epoch_features(phases, int window):
    """Per-epoch PLV features, epochs x pairs (row-major upper triangle)."""
    ph, out_arr, n_ep = _prepare(phases, window)
    if out_arr.size == 0:
        return out_arr
    ct_arr = np.cos(ph)
    st_arr = np.sin(ph)
    cdef const double[:, ::1] ct = ct_arr
    cdef const double[:, ::1] st = st_arr
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t e, n = n_ep, w = window
    for e in prange(n, nogil=True, schedule='static'):
        _plv_epoch(ct, st, e * w, w, out, e)
    return out_arr


cdef double _row_dot(const double[:, ::1] f, Py_ssize_t ra, Py_ssize_t rb,
                     Py_ssize_t dim) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t k
    for k in range(dim):
        s += f[ra, k] * f[rb, k]
    return s


def pair_similarities(features, idx_a, idx_b):
    """Similarity 1 / (1 + Euclidean distance) for selected row pairs."""
    f_arr = np.ascontiguousarray(features, dtype=np.float64)
    a_arr = np.ascontiguousarray(idx_a, dtype=np.int64)
    b_arr = np.ascontiguousarray(idx_b, dtype=np.int64)
    if a_arr.shape[0] != b_arr.shape[0]:
        raise ValueError("index arrays must have equal length")
    if a_arr.size and (min(a_arr.min(), b_arr.min()) < 0
                       or max(a_arr.max(), b_arr.max()) >= f_arr.shape[0]):
        raise IndexError("pair index out of range")

    cdef const double[:, ::1] f = f_arr
    cdef const cnp.int64_t[::1] ia = a_arr
    cdef const cnp.int64_t[::1] ib = b_arr
    cdef Py_ssize_t n_rows = f_arr.shape[0]
    cdef Py_ssize_t dim = f_arr.shape[1]
    cdef Py_ssize_t n_out = a_arr.shape[0]
    norm_arr = np.empty(n_rows, dtype=np.float64)
    out_arr = np.empty(n_out, dtype=np.float64)
    cdef double[::1] nrm = norm_arr
    cdef double[::1] out = out_arr
    cdef Py_ssize_t r, k
    cdef double d2
    for r in prange(n_rows, nogil=True, schedule='static'):
        nrm[r] = _row_dot(f, r, r, dim)
    for k in prange(n_out, nogil=True, schedule='static'):
        d2 = nrm[ia[k]] + nrm[ib[k]] - 2.0 * _row_dot(f, ia[k], ib[k], dim)
        if d2 < 0.0:
            d2 = 0.0
        out[k] = 1.0 / (1.0 + sqrt(d2))
    return out_arr
