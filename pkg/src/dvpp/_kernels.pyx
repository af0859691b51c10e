# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled difference-equation kernels (see ``_kernels_py`` for the reference)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double _SPLIT = 134217729.0


cdef inline void _two_sum(double a, double b, double* s, double* e) noexcept nogil:
    cdef double ss = a + b
    cdef double bb = ss - a
    s[0] = ss
    e[0] = (a - (ss - bb)) + (b - bb)


cdef inline void _fast_two_sum(double a, double b, double* s, double* e) noexcept nogil:
    cdef double ss = a + b
    s[0] = ss
    e[0] = b - (ss - a)


cdef inline void _split(double a, double* hi, double* lo) noexcept nogil:
    cdef double t = _SPLIT * a
    cdef double h = t - (t - a)
    hi[0] = h
    lo[0] = a - h


cdef inline void _two_prod(double a, double b, double* p, double* e) noexcept nogil:
    cdef double pp = a * b
    cdef double ah, al, bh, bl
    _split(a, &ah, &al)
    _split(b, &bh, &bl)
    p[0] = pp
    e[0] = ((ah * bh - pp) + ah * bl + al * bh) + al * bl


cdef inline void _dd_add(double xh, double xl, double yh, double yl, double* rh, double* rl) noexcept nogil:
    cdef double s, e, t, f
    _two_sum(xh, yh, &s, &e)
    _two_sum(xl, yl, &t, &f)
    e = e + t
    _fast_two_sum(s, e, &s, &e)
    e = e + f
    _fast_two_sum(s, e, rh, rl)


cdef inline void _dd_mul(double xh, double xl, double yh, double yl, double* rh, double* rl) noexcept nogil:
    cdef double p, e
    _two_prod(xh, yh, &p, &e)
    e = e + (xh * yl + xl * yh)
    _fast_two_sum(p, e, rh, rl)


cdef double _df2t(const double[::1] bh, const double[::1] bl, const double[::1] ah, const double[::1] al,
                  double[::1] zh, double[::1] zl, double u) noexcept nogil:
    cdef Py_ssize_t n = zh.shape[0]
    cdef Py_ssize_t i
    cdef double yh, yl, ph, pl, qh, ql, sh, sl
    _dd_mul(bh[0], bl[0], u, 0.0, &yh, &yl)
    if n == 0:
        return yh
    _dd_add(yh, yl, zh[0], zl[0], &yh, &yl)
    for i in range(n):
        _dd_mul(bh[i + 1], bl[i + 1], u, 0.0, &ph, &pl)
        _dd_mul(ah[i + 1], al[i + 1], yh, yl, &qh, &ql)
        _dd_add(ph, pl, -qh, -ql, &sh, &sl)
        if i < n - 1:
            _dd_add(sh, sl, zh[i + 1], zl[i + 1], &sh, &sl)
        zh[i] = sh
        zl[i] = sl
    return yh


def df2t_step(const double[::1] bh, const double[::1] bl, const double[::1] ah, const double[::1] al,
              double[::1] zh, double[::1] zl, double u):
    return _df2t(bh, bl, ah, al, zh, zl, u)


def df2t_filter(const double[::1] bh, const double[::1] bl, const double[::1] ah, const double[::1] al,
                double[::1] zh, double[::1] zl, const double[::1] u):
    cdef Py_ssize_t k
    cdef Py_ssize_t m = u.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(m):
            o[k] = _df2t(bh, bl, ah, al, zh, zl, u[k])
    return out


def rst_step(const double[::1] t, const double[::1] s, const double[::1] r,
             double[::1] z, double ref, double meas, double lower, double upper):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t i
    cdef double v = t[0] * ref - s[0] * meas
    cdef double u
    cdef bint clamped = False
    if n > 0:
        v = v + z[0]
    u = v
    if u > upper:
        u = upper
        clamped = True
    elif u < lower:
        u = lower
        clamped = True
    if n > 0:
        for i in range(n - 1):
            z[i] = ((t[i + 1] * ref - s[i + 1] * meas) - r[i + 1] * u) + z[i + 1]
        z[n - 1] = (t[n] * ref - s[n] * meas) - r[n] * u
    return u, clamped
