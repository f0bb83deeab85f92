# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see fallback.py for the reference semantics."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, floor

cnp.import_array()


def bilinear_phase_series(m, eps, times):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] mm = np.ascontiguousarray(m, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ee = np.ascontiguousarray(eps, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tt = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t n = ee.shape[0], nt = tt.shape[0]
    if mm.shape[0] != n or mm.shape[1] != n:
        raise ValueError("matrix and dispersion sizes disagree")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nt, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ur = np.empty(n), ui = np.empty(n)
    cdef Py_ssize_t k, p, q
    cdef double t, ph, vr, vi, accr, acci, imag_max = 0.0
    cdef double mr, mi
    for k in range(nt):
        t = tt[k]
        for p in range(n):
            ph = -ee[p] * t
            ur[p] = cos(ph)
            ui[p] = sin(ph)
        accr = 0.0
        acci = 0.0
        for p in range(n):
            vr = 0.0
            vi = 0.0
            for q in range(n):
                mr = mm[p, q].real
                mi = mm[p, q].imag
                vr += mr * ur[q] - mi * ui[q]
                vi += mr * ui[q] + mi * ur[q]
            # conj(u_p) * v_p
            accr += ur[p] * vr + ui[p] * vi
            acci += ur[p] * vi - ui[p] * vr
        out[k] = accr
        if acci < 0.0:
            acci = -acci
        if acci > imag_max:
            imag_max = acci
    return out, imag_max


cdef inline double _interp_zero(double x, double x0, double dx, double[::1] table) nogil:
    cdef double u = (x - x0) / dx
    cdef Py_ssize_t n = table.shape[0]
    cdef Py_ssize_t i
    cdef double frac
    if u < 0.0 or u > n - 1:
        return 0.0
    i = <Py_ssize_t> floor(u)
    if i >= n - 1:
        return table[n - 1]
    frac = u - i
    return table[i] * (1.0 - frac) + table[i + 1] * frac


def envelope_sum(l_values, nodes, cweights, double v, double x0, double dx, table):
    cdef double[::1] ll = np.ascontiguousarray(l_values, dtype=np.float64)
    cdef double[::1] ss = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] ww = np.ascontiguousarray(cweights, dtype=np.complex128)
    cdef double[::1] env = np.ascontiguousarray(table, dtype=np.float64)
    cdef Py_ssize_t nl = ll.shape[0], ns = ss.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(nl, dtype=np.complex128)
    cdef Py_ssize_t il, k
    cdef double L, e, accr, acci
    for il in range(nl):
        L = ll[il]
        accr = 0.0
        acci = 0.0
        for k in range(ns):
            e = _interp_zero(L - v * ss[k], x0, dx, env)
            if e != 0.0:
                accr += e * ww[k].real
                acci += e * ww[k].imag
        out[il] = accr + 1j * acci
    return out


def envelope_pair_sum(l_values, nodes_a, nodes_b, cweights,
                      double v_a, double v_b, double x0, double dx, table):
    cdef double[::1] ll = np.ascontiguousarray(l_values, dtype=np.float64)
    cdef double[::1] sa = np.ascontiguousarray(nodes_a, dtype=np.float64)
    cdef double[::1] sb = np.ascontiguousarray(nodes_b, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] ww = np.ascontiguousarray(cweights, dtype=np.complex128)
    cdef double[::1] env = np.ascontiguousarray(table, dtype=np.float64)
    cdef Py_ssize_t nl = ll.shape[0], ns = sa.shape[0]
    if sb.shape[0] != ns or ww.shape[0] != ns:
        raise ValueError("node and weight arrays must have equal length")
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(nl, dtype=np.complex128)
    cdef Py_ssize_t il, k
    cdef double L, ea, eb, prod, accr, acci
    for il in range(nl):
        L = ll[il]
        accr = 0.0
        acci = 0.0
        for k in range(ns):
            ea = _interp_zero(L - v_a * sa[k], x0, dx, env)
            if ea == 0.0:
                continue
            eb = _interp_zero(L - v_b * sb[k], x0, dx, env)
            if eb == 0.0:
                continue
            prod = ea * eb
            accr += prod * ww[k].real
            acci += prod * ww[k].imag
        out[il] = accr + 1j * acci
    return out
