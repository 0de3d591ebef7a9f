# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``. Same signatures."""
import numpy as np
cimport numpy as cnp

from ._pykernels import GK_NODES, GK_KRONROD_WEIGHTS, GK_GAUSS_WEIGHTS

cnp.import_array()

cdef double[::1] _NODES = np.ascontiguousarray(GK_NODES, dtype=np.float64)
cdef double[::1] _WK = np.ascontiguousarray(GK_KRONROD_WEIGHTS, dtype=np.float64)
cdef double[::1] _WG = np.ascontiguousarray(GK_GAUSS_WEIGHTS, dtype=np.float64)


cdef inline double complex _ipow(double complex z, int n) noexcept nogil:
    cdef double complex out = 1.0
    cdef int k
    for k in range(n):
        out = out * z
    return out


cdef inline double complex _integrand(int l, double alpha, double beta,
                                      double x, double y) noexcept nogil:
    cdef double complex I = 1j
    cdef double complex px = 1.0 + I * x
    cdef double complex my = 1.0 - I * y
    cdef double complex d = (px * my * (2.0 + I * (x - y) / beta)
                             + alpha * (1.0 + I * x / beta) * (1.0 - I * y / beta)
                             * (2.0 + I * (x - y)))
    return _ipow(px * my, l) / _ipow(d, l + 1)


def h_integrand(int l, double alpha, double beta, x, y):
    xb, yb = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                                 np.asarray(y, dtype=np.float64))
    cdef double[::1] xf = np.ascontiguousarray(xb).ravel()
    cdef double[::1] yf = np.ascontiguousarray(yb).ravel()
    out = np.empty(xf.shape[0], dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t k
    for k in range(xf.shape[0]):
        o[k] = _integrand(l, alpha, beta, xf[k], yf[k])
    return out.reshape(xb.shape)


def h_panel(int l, double alpha, double beta,
            double x0, double x1, double y0, double y1):
    cdef double hx = 0.5 * (x1 - x0)
    cdef double hy = 0.5 * (y1 - y0)
    cdef double cx = 0.5 * (x0 + x1)
    cdef double cy = 0.5 * (y0 + y1)
    cdef double complex k_sum = 0.0
    cdef double complex g_sum = 0.0
    cdef double complex row_k, row_g, f
    cdef int i, j
    cdef double xi
    with nogil:
        for i in range(15):
            xi = cx + hx * _NODES[i]
            row_k = 0.0
            row_g = 0.0
            for j in range(15):
                f = _integrand(l, alpha, beta, xi, cy + hy * _NODES[j])
                row_k = row_k + _WK[j] * f
                row_g = row_g + _WG[j] * f
            k_sum = k_sum + _WK[i] * row_k
            g_sum = g_sum + _WG[i] * row_g
    return complex(k_sum * hx * hy), complex(g_sum * hx * hy)


cdef long long _count(double[::1] s, double[::1] t, double lo, double hi) noexcept nogil:
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t m = t.shape[0]
    cdef Py_ssize_t a = 0, b = 0, k
    cdef long long total = 0
    for k in range(n):
        while a < m and t[a] < s[k] + lo:
            a += 1
        if b < a:
            b = a
        while b < m and t[b] < s[k] + hi:
            b += 1
        total += b - a
    return total


def count_coincidences(signal, idler, double lo, double hi):
    cdef double[::1] s = np.ascontiguousarray(signal, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(idler, dtype=np.float64)
    cdef long long total
    with nogil:
        total = _count(s, t, lo, hi)
    return int(total)


def count_coincidences_many(signal, idler, los, his):
    cdef double[::1] s = np.ascontiguousarray(signal, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(idler, dtype=np.float64)
    cdef double[::1] lo = np.ascontiguousarray(los, dtype=np.float64)
    cdef double[::1] hi = np.ascontiguousarray(his, dtype=np.float64)
    out = np.empty(lo.shape[0], dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t k
    with nogil:
        for k in range(lo.shape[0]):
            o[k] = _count(s, t, lo[k], hi[k])
    return out
