# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sparse-state kernels; see _pykernels for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()

cdef double NEG_INF = -INFINITY


def log_total_mass(const double[::1] logm):
    cdef Py_ssize_t i, n = logm.shape[0]
    cdef double m = NEG_INF, s = 0.0
    for i in range(n):
        if logm[i] > m:
            m = logm[i]
    if m == NEG_INF:
        return NEG_INF
    for i in range(n):
        s += exp(2.0 * (logm[i] - m))
    return 2.0 * m + log(s)


cdef void _grouped(const cnp.int32_t[::1] keys, const double[::1] logm,
                   double[::1] out, double[::1] gmax) noexcept nogil:
    cdef Py_ssize_t i, g, n = logm.shape[0], ng = out.shape[0]
    for g in range(ng):
        gmax[g] = NEG_INF
        out[g] = 0.0
    for i in range(n):
        g = keys[i]
        if logm[i] > gmax[g]:
            gmax[g] = logm[i]
    for i in range(n):
        g = keys[i]
        if logm[i] > NEG_INF:
            out[g] += exp(2.0 * (logm[i] - gmax[g]))
    for g in range(ng):
        if gmax[g] > NEG_INF and out[g] > 0.0:
            out[g] = 2.0 * gmax[g] + log(out[g])
        else:
            out[g] = NEG_INF


def grouped_log_mass(keys, logm, Py_ssize_t n_groups):
    cdef const cnp.int32_t[::1] k = np.ascontiguousarray(keys, dtype=np.int32)
    cdef const double[::1] lm = np.ascontiguousarray(logm, dtype=np.float64)
    out = np.empty(n_groups, dtype=np.float64)
    gmax = np.empty(n_groups, dtype=np.float64)
    _grouped(k, lm, out, gmax)
    return out


cdef double _lse(double[::1] v, Py_ssize_t skip) noexcept nogil:
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double m = NEG_INF, s = 0.0
    for i in range(n):
        if i != skip and v[i] > m:
            m = v[i]
    if m == NEG_INF:
        return NEG_INF
    for i in range(n):
        if i != skip:
            s += exp(v[i] - m)
    return m + log(s)


def hit_update(labels, logm, Py_ssize_t n_labels, double u, double log_eps,
               bint corrected, double log_ceiling, double log1m_ceiling):
    cdef const cnp.int32_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int32)
    cdef const double[::1] lmv = np.ascontiguousarray(logm, dtype=np.float64)
    cdef Py_ssize_t i, n = lmv.shape[0], center = -1, last = -1
    lm_arr = np.empty(n_labels, dtype=np.float64)
    gmax_arr = np.empty(n_labels, dtype=np.float64)
    shift_arr = np.empty(n_labels, dtype=np.float64)
    cdef double[::1] lm = lm_arr
    cdef double[::1] shift = shift_arr
    _grouped(lab, lmv, lm, gmax_arr)

    cdef double total = _lse(lm, -1)
    if total == NEG_INF:
        raise ValueError("hit on a state with zero norm")
    cdef double eps = exp(log_eps), w, wsum = 0.0, acc = 0.0, frac
    cdef double pre_dom = NEG_INF
    for i in range(n_labels):
        if lm[i] > NEG_INF:
            frac = exp(lm[i] - total)
            wsum += frac + eps * (1.0 - frac) if corrected else frac
            last = i
        if lm[i] > pre_dom:
            pre_dom = lm[i]
    pre_dom -= total
    for i in range(n_labels):
        if lm[i] > NEG_INF:
            frac = exp(lm[i] - total)
            w = frac + eps * (1.0 - frac) if corrected else frac
            acc += w / wsum
            if u < acc:
                center = i
                break
    if center < 0:
        center = last

    for i in range(n_labels):
        shift[i] = 0.0 if i == center else log_eps
        lm[i] += shift[i]
    cdef double total2 = _lse(lm, -1)
    for i in range(n_labels):
        shift[i] -= total2
        lm[i] -= total2

    cdef double log_rest, up, down
    if log_ceiling < 0.0 and lm[center] > log_ceiling:
        log_rest = _lse(lm, center)
        if log_rest > NEG_INF:
            up = log1m_ceiling - log_rest
            down = log_ceiling - lm[center]
            for i in range(n_labels):
                if i == center:
                    shift[i] += down
                    lm[i] += down
                else:
                    shift[i] += up
                    lm[i] += up

    cdef double post_dom = NEG_INF
    for i in range(n_labels):
        if lm[i] > post_dom:
            post_dom = lm[i]

    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = lmv[i] + 0.5 * shift[lab[i]]
    return out, int(center), pre_dom, post_dom
