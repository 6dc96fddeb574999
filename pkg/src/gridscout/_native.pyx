# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot per-question loops.

Must stay bit-identical to ``_fallback.py``: same accumulation order, no
reassociation, no FMA (built with -ffp-contract=off).
"""

from array import array

from libc.math cimport sqrt

BACKEND = "native"


def shape_moments(double[:] values, double variance_threshold):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i
    cdef double s = 0.0
    cdef double mean, d, d2
    cdef double m2 = 0.0
    cdef double m3 = 0.0
    cdef double m4 = 0.0
    cdef double sd, skew, kurt_ex
    for i in range(n):
        s += values[i]
    mean = s / n
    for i in range(n):
        d = values[i] - mean
        d2 = d * d
        m2 += d2
        m3 += d2 * d
        m4 += d2 * d2
    m2 /= n
    m3 /= n
    m4 /= n
    if m2 < variance_threshold:
        return 0.0, 0.0, True
    sd = sqrt(m2)
    skew = m3 / (m2 * sd)
    kurt_ex = m4 / (m2 * m2) - 3.0
    return skew, kurt_ex, False


def outer_product(double[:] row_conf, double[:] col_conf):
    cdef Py_ssize_t k = row_conf.shape[0]
    cdef Py_ssize_t m = col_conf.shape[0]
    out = array("d", bytes(8 * k * m))
    cdef double[:] ov = out
    cdef Py_ssize_t r, c, i = 0
    cdef double rv
    for r in range(k):
        rv = row_conf[r]
        for c in range(m):
            ov[i] = rv * col_conf[c]
            i += 1
    return out


def coverage_weight(int[:] offsets, int[:] atom_ids, double[:] atom_weights, int[:] subset):
    cdef Py_ssize_t n_atoms = atom_weights.shape[0]
    seen_buf = bytearray(n_atoms)
    cdef unsigned char[:] seen = seen_buf
    cdef double acc = 0.0
    cdef Py_ssize_t i, j
    cdef int f, a
    for i in range(subset.shape[0]):
        f = subset[i]
        for j in range(offsets[f], offsets[f + 1]):
            a = atom_ids[j]
            if not seen[a]:
                seen[a] = 1
                acc += atom_weights[a]
    return acc
