# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled perturbation kernels; contract identical to ``_numpy``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

BACKEND = "cython"


cdef inline double _sigma(double u) nogil:
    if u <= 1e-12:
        return 0.0
    return exp(-1.0 / u)


cdef inline double _sigma_prime(double u) nogil:
    if u <= 1e-12:
        return 0.0
    return exp(-1.0 / u) / (u * u)


cdef inline double _bump(double t) nogil:
    cdef double u, su, s1u
    if t <= 0.5:
        return 1.0
    if t >= 1.0:
        return 0.0
    u = 2.0 * (1.0 - t)
    su = _sigma(u)
    s1u = _sigma(1.0 - u)
    return su / (su + s1u + 1e-300)


cdef inline double _bump_deriv(double t) nogil:
    cdef double u, su, s1u, spu, sp1u, denom
    if t <= 0.5 or t >= 1.0:
        return 0.0
    u = 2.0 * (1.0 - t)
    su = _sigma(u)
    s1u = _sigma(1.0 - u)
    spu = _sigma_prime(u)
    sp1u = _sigma_prime(1.0 - u)
    denom = (su + s1u) * (su + s1u) + 1e-300
    return -2.0 * (spu * s1u + su * sp1u) / denom


cdef inline double _ipow(double base, long e) nogil:
    cdef double out = 1.0
    cdef long i
    for i in range(e):
        out *= base
    return out


def bump_value(t):
    """Cutoff value at radius ``t`` (vectorized)."""
    arr = np.ascontiguousarray(np.atleast_1d(np.asarray(t, dtype=float)))
    cdef double[::1] tv = arr.ravel()
    out = np.empty(tv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(tv.shape[0]):
        ov[i] = _bump(tv[i])
    out = out.reshape(np.shape(np.asarray(t, dtype=float)))
    return out


def bump_deriv(t):
    """Derivative of the cutoff with respect to ``t``."""
    arr = np.ascontiguousarray(np.atleast_1d(np.asarray(t, dtype=float)))
    cdef double[::1] tv = arr.ravel()
    out = np.empty(tv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(tv.shape[0]):
        ov[i] = _bump_deriv(tv[i])
    out = out.reshape(np.shape(np.asarray(t, dtype=float)))
    return out


def pert_eval(y, coeffs, exps, comps):
    """Perturbation values at a batch of points; (N, k)."""
    ya = np.ascontiguousarray(y, dtype=float)
    ca = np.ascontiguousarray(coeffs, dtype=float)
    ea = np.ascontiguousarray(exps, dtype=np.int64)
    pa = np.ascontiguousarray(comps, dtype=np.int64)
    cdef double[:, ::1] yv = ya
    cdef double[::1] cv = ca
    cdef cnp.int64_t[:, ::1] ev = ea
    cdef cnp.int64_t[::1] pv = pa
    cdef Py_ssize_t n = yv.shape[0], k = yv.shape[1], nt = cv.shape[0]
    out = np.zeros((n, k))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, t
    cdef double r2, r, phi, mono
    for i in range(n):
        r2 = 0.0
        for j in range(k):
            r2 += yv[i, j] * yv[i, j]
        r = sqrt(r2)
        phi = _bump(r)
        if phi == 0.0:
            continue
        for t in range(nt):
            mono = 1.0
            for j in range(k):
                if ev[t, j] > 0:
                    mono *= _ipow(yv[i, j], ev[t, j])
            ov[i, pv[t]] += cv[t] * phi * mono
    return out


def pert_jac(y, coeffs, exps, comps):
    """Perturbation Jacobians at a batch of points; (N, k, k)."""
    ya = np.ascontiguousarray(y, dtype=float)
    ca = np.ascontiguousarray(coeffs, dtype=float)
    ea = np.ascontiguousarray(exps, dtype=np.int64)
    pa = np.ascontiguousarray(comps, dtype=np.int64)
    cdef double[:, ::1] yv = ya
    cdef double[::1] cv = ca
    cdef cnp.int64_t[:, ::1] ev = ea
    cdef cnp.int64_t[::1] pv = pa
    cdef Py_ssize_t n = yv.shape[0], k = yv.shape[1], nt = cv.shape[0]
    out = np.zeros((n, k, k))
    cdef double[:, :, ::1] ov = out
    cdef Py_ssize_t i, j, jj, t
    cdef double r2, r, phi, dphi, mono, grad, safe_r
    for i in range(n):
        r2 = 0.0
        for j in range(k):
            r2 += yv[i, j] * yv[i, j]
        r = sqrt(r2)
        phi = _bump(r)
        if phi == 0.0:
            continue
        dphi = _bump_deriv(r)
        safe_r = r if r > 1e-300 else 1e-300
        for t in range(nt):
            mono = 1.0
            for j in range(k):
                if ev[t, j] > 0:
                    mono *= _ipow(yv[i, j], ev[t, j])
            for j in range(k):
                grad = 0.0
                if ev[t, j] > 0:
                    grad = ev[t, j] * _ipow(yv[i, j], ev[t, j] - 1)
                    for jj in range(k):
                        if jj != j and ev[t, jj] > 0:
                            grad *= _ipow(yv[i, jj], ev[t, jj])
                ov[i, pv[t], j] += cv[t] * (
                    dphi * mono * yv[i, j] / safe_r + phi * grad)
    return out
