# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: CSR matrix-vector product and the periodic
upwind stencil increment used by the relaxation finite-volume update.

Mirrors ``_kernels_py`` exactly; selected at import time by ``backend``.
"""

import numpy as np

cimport numpy as cnp

NAME = "compiled"


def csr_matvec(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
               double[::1] data, double[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    cdef Py_ssize_t i, k
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * x[indices[k]]
            y[i] = acc
    return out


def shift_combo(f, g, double alpha, double beta, int axis):
    """alpha*(g_{j+1} - g_{j-1}) + beta*(f_{j+1} - 2 f_j + f_{j-1}), periodic."""
    if f.ndim == 1:
        return _shift_combo_1d(f, g, alpha, beta)
    if axis == 0:
        return _shift_combo_2d_x(f, g, alpha, beta)
    return _shift_combo_2d_y(f, g, alpha, beta)


def _shift_combo_1d(double[::1] f, double[::1] g, double alpha, double beta):
    cdef Py_ssize_t n = f.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t j, jp, jm
    with nogil:
        for j in range(n):
            jp = j + 1 if j + 1 < n else 0
            jm = j - 1 if j > 0 else n - 1
            o[j] = alpha * (g[jp] - g[jm]) + beta * (f[jp] - 2.0 * f[j] + f[jm])
    return out


def _shift_combo_2d_x(double[:, ::1] f, double[:, ::1] g, double alpha, double beta):
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((nx, ny), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, ip, im
    with nogil:
        for i in range(nx):
            ip = i + 1 if i + 1 < nx else 0
            im = i - 1 if i > 0 else nx - 1
            for j in range(ny):
                o[i, j] = alpha * (g[ip, j] - g[im, j]) \
                    + beta * (f[ip, j] - 2.0 * f[i, j] + f[im, j])
    return out


def _shift_combo_2d_y(double[:, ::1] f, double[:, ::1] g, double alpha, double beta):
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((nx, ny), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, jp, jm
    with nogil:
        for i in range(nx):
            for j in range(ny):
                jp = j + 1 if j + 1 < ny else 0
                jm = j - 1 if j > 0 else ny - 1
                o[i, j] = alpha * (g[i, jp] - g[i, jm]) \
                    + beta * (f[i, jp] - 2.0 * f[i, j] + f[i, jm])
    return out


def coupled_matvec(coefs, x, shape):
    """Structured matvec of the coupled (vbar, mu) system; same pairwise
    axis grouping as the NumPy fallback (bit-identical results)."""
    if len(shape) == 1:
        return _coupled_matvec_1d(
            coefs["v_diag"], coefs["v_minus0"], coefs["v_plus0"],
            coefs["mu_diag"], coefs["mu_minus0"], coefs["mu_plus0"],
            coefs["lap_diag"], coefs["lap_minus0"], coefs["lap_plus0"], x)
    return _coupled_matvec_2d(
        coefs["v_diag"], coefs["v_minus0"], coefs["v_plus0"],
        coefs["v_minus1"], coefs["v_plus1"],
        coefs["mu_diag"], coefs["mu_minus0"], coefs["mu_plus0"],
        coefs["mu_minus1"], coefs["mu_plus1"],
        coefs["lap_diag"], coefs["lap_minus0"], coefs["lap_plus0"],
        coefs["lap_minus1"], coefs["lap_plus1"], x)


def _coupled_matvec_1d(double[::1] vd, double[::1] vm, double[::1] vp,
                       double[::1] md, double[::1] mm, double[::1] mp,
                       double[::1] ld, double[::1] lm, double[::1] lp,
                       double[::1] x):
    cdef Py_ssize_t n = vd.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(2 * n, dtype=np.float64)
    cdef double[::1] y = out
    cdef Py_ssize_t j, jp, jm
    cdef double adv, mflux, lap
    with nogil:
        for j in range(n):
            jp = j + 1 if j + 1 < n else 0
            jm = j - 1 if j > 0 else n - 1
            adv = vm[j] * x[jm] + vp[j] * x[jp]
            mflux = mm[j] * x[n + jm] + mp[j] * x[n + jp]
            lap = lm[j] * x[jm] + lp[j] * x[jp]
            y[j] = (vd[j] * x[j] + adv) + (md[j] * x[n + j] + mflux)
            y[n + j] = x[n + j] + (ld[j] * x[j] + lap)
    return out


def _coupled_matvec_2d(double[:, ::1] vd, double[:, ::1] vmx, double[:, ::1] vpx,
                       double[:, ::1] vmy, double[:, ::1] vpy,
                       double[:, ::1] md, double[:, ::1] mmx, double[:, ::1] mpx,
                       double[:, ::1] mmy, double[:, ::1] mpy,
                       double[:, ::1] ld, double[:, ::1] lmx, double[:, ::1] lpx,
                       double[:, ::1] lmy, double[:, ::1] lpy,
                       double[::1] x):
    cdef Py_ssize_t nx = vd.shape[0], ny = vd.shape[1]
    cdef Py_ssize_t n = nx * ny
    cdef cnp.ndarray[double, ndim=1] out = np.empty(2 * n, dtype=np.float64)
    cdef double[::1] y = out
    cdef Py_ssize_t i, j, ip, im, jp, jm, c, cxm, cxp, cym, cyp
    cdef double adv, mflux, lap
    with nogil:
        for i in range(nx):
            ip = i + 1 if i + 1 < nx else 0
            im = i - 1 if i > 0 else nx - 1
            for j in range(ny):
                jp = j + 1 if j + 1 < ny else 0
                jm = j - 1 if j > 0 else ny - 1
                c = i * ny + j
                cxm = im * ny + j
                cxp = ip * ny + j
                cym = i * ny + jm
                cyp = i * ny + jp
                adv = (vmx[i, j] * x[cxm] + vpx[i, j] * x[cxp]) \
                    + (vmy[i, j] * x[cym] + vpy[i, j] * x[cyp])
                mflux = (mmx[i, j] * x[n + cxm] + mpx[i, j] * x[n + cxp]) \
                    + (mmy[i, j] * x[n + cym] + mpy[i, j] * x[n + cyp])
                lap = (lmx[i, j] * x[cxm] + lpx[i, j] * x[cxp]) \
                    + (lmy[i, j] * x[cym] + lpy[i, j] * x[cyp])
                y[c] = (vd[i, j] * x[c] + adv) + (md[i, j] * x[n + c] + mflux)
                y[n + c] = x[n + c] + (ld[i, j] * x[c] + lap)
    return out
