# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Wigner function on a phase-space grid, one grid row per OpenMP task.

Same diagonal-wise Laguerre recurrence as the numpy fallback. Points are
processed in blocks of ``_B`` so the recurrence steps of neighbouring
points can be vectorized.
"""
import numpy as np

from cython.parallel cimport prange
from libc.math cimport exp, log, sqrt, lgamma, atan2, cos, sin, M_PI

cdef enum:
    _B = 8


cdef void _block(const double[:, ::1] rr, const double[:, ::1] ri, const double[:, ::1] cnew,
                 const double[:, ::1] cold, const double *lg, int dim,
                 const double *xr, double xi, int cnt, double *out) noexcept nogil:
    cdef double x[_B]
    cdef double logx[_B]
    cdef double phi[_B]
    cdef double g[_B]
    cdef double gp[_B]
    cdef double sre[_B]
    cdef double sim[_B]
    cdef double w[_B]
    cdef double gn, a, b, cr, ci
    cdef int d, m, k
    for k in range(_B):
        if k < cnt:
            x[k] = 4.0 * (xr[k] * xr[k] + xi * xi)
            phi[k] = atan2(xi, xr[k])
        else:
            x[k] = 0.0
            phi[k] = 0.0
        logx[k] = log(x[k]) if x[k] > 0 else -1e300
        w[k] = 0.0
    for d in range(dim):
        for k in range(_B):
            if d == 0:
                g[k] = exp(-0.5 * x[k])
            else:
                g[k] = exp(-0.5 * x[k] + 0.5 * d * logx[k] - lg[d])
            gp[k] = 0.0
            sre[k] = rr[d, 0] * g[k]
            sim[k] = ri[d, 0] * g[k]
        for m in range(1, dim - d):
            a = cold[d, m]
            b = cnew[d, m]
            cr = rr[d, m]
            ci = ri[d, m]
            for k in range(_B):
                gn = ((2 * m - 1 + d - x[k]) * g[k] - a * gp[k]) * b
                gp[k] = g[k]
                g[k] = gn
                sre[k] = sre[k] + cr * gn
                sim[k] = sim[k] + ci * gn
        for k in range(_B):
            if d == 0:
                w[k] = w[k] + sre[k]
            else:
                w[k] = w[k] + 2.0 * (sre[k] * cos(d * phi[k]) - sim[k] * sin(d * phi[k]))
    for k in range(cnt):
        out[k] = (2.0 / M_PI) * w[k]


def wigner_grid(const double complex[:, ::1] rho, const double[::1] xvec, const double[::1] pvec):
    """Same contract as ``qamem._kernels.wigner_grid_py``."""
    cdef int dim = rho.shape[0]
    cdef Py_ssize_t nx = xvec.shape[0], npt = pvec.shape[0]
    cdef Py_ssize_t i, j
    cdef int d, m, cnt
    # diagonal-major tables: rr[d, m] + i ri[d, m] = (-1)^m rho[m, m + d]
    rr_a = np.zeros((dim, dim))
    ri_a = np.zeros((dim, dim))
    cnew_a = np.zeros((dim, dim))
    cold_a = np.zeros((dim, dim))
    lg_a = np.zeros(dim)
    cdef double[:, ::1] rr = rr_a, ri = ri_a, cnew = cnew_a, cold = cold_a
    cdef double[::1] lg = lg_a
    for d in range(dim):
        lg[d] = 0.5 * lgamma(d + 1.0)
        for m in range(dim - d):
            rr[d, m] = (-1.0 if m % 2 else 1.0) * rho[m, m + d].real
            ri[d, m] = (-1.0 if m % 2 else 1.0) * rho[m, m + d].imag
            if m > 0:
                cnew[d, m] = 1.0 / sqrt(<double> m * (m + d))
                cold[d, m] = sqrt(<double> (m - 1) * (m - 1 + d))
    out = np.empty((npt, nx), dtype=np.float64)
    cdef double[:, ::1] W = out
    for i in prange(npt, nogil=True, schedule="static"):
        j = 0
        while j < nx:
            cnt = _B if nx - j >= _B else <int> (nx - j)
            _block(rr, ri, cnew, cold, &lg[0], dim, &xvec[j], pvec[i], cnt, &W[i, j])
            j = j + _B
    return out
