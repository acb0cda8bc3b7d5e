# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Jacobi kernels (same contract as ``_kernels_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

BACKEND = "cython"


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double complex cconj(double complex z) nogil:
    return z.real - 1j * z.imag


def herm_eig_jacobi(a, double tol=1e-13, int max_sweeps=100):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] arr = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = arr.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] varr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] A = arr
    cdef double complex[:, ::1] V = varr
    cdef Py_ssize_t p, q, k
    cdef double scale = 0.0, off, mag, app, aqq, tau, t, c, s
    cdef double complex apq, phase, g_pp, g_pq, g_qp, g_qq, xp, xq
    cdef int sweeps = 0, sweep

    for p in range(n):
        for q in range(n):
            scale += cabs2(A[p, q])
    scale = sqrt(scale)
    if scale == 0.0:
        scale = 1.0

    with nogil:
        for sweep in range(1, max_sweeps + 1):
            sweeps = sweep
            off = 0.0
            for p in range(n - 1):
                for q in range(p + 1, n):
                    off += cabs2(A[p, q])
            if sqrt(2.0 * off) <= tol * scale:
                sweeps = sweep - 1
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    mag = sqrt(cabs2(apq))
                    if mag <= 1e-300:
                        continue
                    phase = apq / mag
                    app = A[p, p].real
                    aqq = A[q, q].real
                    tau = (aqq - app) / (2.0 * mag)
                    if tau >= 0.0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    g_pp = c
                    g_pq = s
                    g_qp = -s * cconj(phase)
                    g_qq = c * cconj(phase)
                    for k in range(n):
                        xp = A[k, p]
                        xq = A[k, q]
                        A[k, p] = xp * g_pp + xq * g_qp
                        A[k, q] = xp * g_pq + xq * g_qq
                    for k in range(n):
                        xp = A[p, k]
                        xq = A[q, k]
                        A[p, k] = cconj(g_pp) * xp + cconj(g_qp) * xq
                        A[q, k] = cconj(g_pq) * xp + cconj(g_qq) * xq
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    A[p, p] = A[p, p].real
                    A[q, q] = A[q, q].real
                    for k in range(n):
                        xp = V[k, p]
                        xq = V[k, q]
                        V[k, p] = xp * g_pp + xq * g_qp
                        V[k, q] = xp * g_pq + xq * g_qq

    w = np.real(np.diag(arr)).copy()
    return w, varr, sweeps


def svd_jacobi(a, double tol=1e-13, int max_sweeps=100):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] barr = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t m = barr.shape[0]
    cdef Py_ssize_t n = barr.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] varr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] B = barr
    cdef double complex[:, ::1] V = varr
    cdef Py_ssize_t p, q, k
    cdef double alpha, beta, mag, zeta, t, c, s
    cdef double complex gamma, phase, xp, xq
    cdef int sweeps = 0, sweep
    cdef bint rotated

    with nogil:
        for sweep in range(1, max_sweeps + 1):
            sweeps = sweep
            rotated = False
            for p in range(n - 1):
                for q in range(p + 1, n):
                    alpha = 0.0
                    beta = 0.0
                    gamma = 0.0
                    for k in range(m):
                        alpha = alpha + cabs2(B[k, p])
                        beta = beta + cabs2(B[k, q])
                        gamma = gamma + cconj(B[k, p]) * B[k, q]
                    mag = sqrt(cabs2(gamma))
                    if mag <= tol * sqrt(alpha * beta) or mag <= 1e-300:
                        continue
                    rotated = True
                    phase = cconj(gamma / mag)
                    zeta = (beta - alpha) / (2.0 * mag)
                    if zeta >= 0.0:
                        t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                    else:
                        t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    for k in range(m):
                        xp = B[k, p]
                        xq = B[k, q] * phase
                        B[k, p] = c * xp - s * xq
                        B[k, q] = s * xp + c * xq
                    for k in range(n):
                        xp = V[k, p]
                        xq = V[k, q] * phase
                        V[k, p] = c * xp - s * xq
                        V[k, q] = s * xp + c * xq
            if not rotated:
                sweeps = sweep - 1
                break

    return barr, varr, sweeps
