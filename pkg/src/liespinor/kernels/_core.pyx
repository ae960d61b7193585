# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: profile RK4, spanning-tree transport, plaquette holonomy."""

import numpy as np
from libc.math cimport sin, cos, sqrt, isfinite
from libc.math cimport M_PI


cdef inline void _rhs(double u, double sg, double* out) noexcept nogil:
    out[0] = cos(sg)
    out[1] = 0.5 * sqrt(4.0 + u * u) * sin(sg)
    out[2] = sin(sg) / u


def rk4_profile(double u0, double v0, double s0, double sg0, double h, double smax, Py_ssize_t nmax):
    """Fixed-step RK4 for u' = cos s, v' = sqrt(4+u^2) sin(s)/2, s' = sin(s)/u.

    Stops before a step that would leave 0 < sigma < pi, u > 0.
    Returns (s, u, v, sigma, status) with status 0 = hit pole, 1 = smax/nmax.
    """
    out = np.empty((nmax, 4))
    cdef double[:, ::1] o = out
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double u = u0, v = v0, s = s0, sg = sg0
    cdef double un, vn, sgn
    cdef Py_ssize_t n = 0
    cdef int status = 1
    with nogil:
        o[0, 0] = s; o[0, 1] = u; o[0, 2] = v; o[0, 3] = sg
        n = 1
        while n < nmax and s + h <= smax:
            _rhs(u, sg, k1)
            _rhs(u + 0.5 * h * k1[0], sg + 0.5 * h * k1[2], k2)
            _rhs(u + 0.5 * h * k2[0], sg + 0.5 * h * k2[2], k3)
            _rhs(u + h * k3[0], sg + h * k3[2], k4)
            un = u + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            vn = v + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            sgn = sg + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            if not (isfinite(un) and isfinite(sgn)) or un <= 0.0 or sgn >= M_PI:
                status = 0
                break
            u = un; v = vn; sg = sgn; s = s + h
            o[n, 0] = s; o[n, 1] = u; o[n, 2] = v; o[n, 3] = sg
            n += 1
    res = out[:n]
    return res[:, 0].copy(), res[:, 1].copy(), res[:, 2].copy(), res[:, 3].copy(), status


cdef inline void _matmul(double complex[:, :] a, double complex[:, :] b,
                         double complex[:, :] c) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double complex acc
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = 0
            for k in range(a.shape[1]):
                acc = acc + a[i, k] * b[k, j]
            c[i, j] = acc


def tree_products(double complex[:, :, :, ::1] Su, double complex[:, :, :, ::1] Sv,
                  double complex[:, ::1] f0, bint left):
    """Transport ``f0`` along the row-then-column spanning tree.

    Right action: f[next] = f[cur] @ S.  Left action: f[next] = S @ f[cur].
    ``Su[iu, iv]`` joins (iu, iv) -> (iu+1, iv); ``Sv[iu, iv]`` joins (iu, iv) -> (iu, iv+1).
    """
    cdef Py_ssize_t nu = Sv.shape[0], nv = Su.shape[1]
    cdef Py_ssize_t a = f0.shape[0], b = f0.shape[1]
    out = np.empty((nu, nv, a, b), dtype=complex)
    cdef double complex[:, :, :, ::1] f = out
    cdef Py_ssize_t iu, iv
    f[0, 0, :, :] = f0
    with nogil:
        for iu in range(nu - 1):
            if left:
                _matmul(Su[iu, 0], f[iu, 0], f[iu + 1, 0])
            else:
                _matmul(f[iu, 0], Su[iu, 0], f[iu + 1, 0])
        for iu in range(nu):
            for iv in range(nv - 1):
                if left:
                    _matmul(Sv[iu, iv], f[iu, iv], f[iu, iv + 1])
                else:
                    _matmul(f[iu, iv], Sv[iu, iv], f[iu, iv + 1])
    return out


def plaquette_holonomy(double complex[:, :, :, ::1] Su, double complex[:, :, :, ::1] Sv, bint left):
    """Frobenius norm of the difference of the two transports around each cell."""
    cdef Py_ssize_t nu = Sv.shape[0], nv = Su.shape[1], n = Su.shape[2]
    out = np.empty((nu - 1, nv - 1))
    cdef double[:, ::1] o = out
    p1 = np.empty((n, n), dtype=complex)
    p2 = np.empty((n, n), dtype=complex)
    cdef double complex[:, ::1] P1 = p1
    cdef double complex[:, ::1] P2 = p2
    cdef Py_ssize_t iu, iv, i, j
    cdef double acc
    cdef double complex d
    with nogil:
        for iu in range(nu - 1):
            for iv in range(nv - 1):
                if left:
                    _matmul(Sv[iu + 1, iv], Su[iu, iv], P1)
                    _matmul(Su[iu, iv + 1], Sv[iu, iv], P2)
                else:
                    _matmul(Su[iu, iv], Sv[iu + 1, iv], P1)
                    _matmul(Sv[iu, iv], Su[iu, iv + 1], P2)
                acc = 0.0
                for i in range(n):
                    for j in range(n):
                        d = P1[i, j] - P2[i, j]
                        acc += d.real * d.real + d.imag * d.imag
                o[iu, iv] = sqrt(acc)
    return out
