"""Pure-Python difference-equation kernels.

Mirrors ``_kernels.pyx`` operation for operation so both backends produce
bit-identical floats.

The LTI section runs in double-double arithmetic: every coefficient and
state entry is an unevaluated sum ``hi + lo`` and products/sums use the
error-free transformations of Dekker and Knuth (no fused multiply-add). The
published plant polynomials have clustered roots, so rounding their
coefficients to plain doubles alone shifts a 50-sample impulse response by
~1e-6; with the extra word the only loss is the final rounding of ``y``.
"""

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _fast_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(xh, xl, yh, yl):
    s, e = _two_sum(xh, yh)
    t, f = _two_sum(xl, yl)
    e = e + t
    s, e = _fast_two_sum(s, e)
    e = e + f
    return _fast_two_sum(s, e)


def _dd_mul(xh, xl, yh, yl):
    p, e = _two_prod(xh, yh)
    e = e + (xh * yl + xl * yh)
    return _fast_two_sum(p, e)


def df2t_step(bh, bl, ah, al, zh, zl, u):
    """Advance a transposed direct-form II section by one sample.

    ``a`` is monic, ``b`` is padded to ``len(a)``; the state ``(zh, zl)``
    (length ``len(a) - 1``) is updated in place. Returns ``y`` rounded to a
    double.
    """
    n = zh.shape[0]
    yh, yl = _dd_mul(bh[0], bl[0], u, 0.0)
    if n == 0:
        return float(yh)
    yh, yl = _dd_add(yh, yl, zh[0], zl[0])
    for i in range(n):
        ph, pl = _dd_mul(bh[i + 1], bl[i + 1], u, 0.0)
        qh, ql = _dd_mul(ah[i + 1], al[i + 1], yh, yl)
        sh, sl = _dd_add(ph, pl, -qh, -ql)
        if i < n - 1:
            sh, sl = _dd_add(sh, sl, zh[i + 1], zl[i + 1])
        zh[i] = sh
        zl[i] = sl
    return float(yh)


def df2t_filter(bh, bl, ah, al, zh, zl, u):
    out = np.empty(u.shape[0], dtype=np.float64)
    for k in range(u.shape[0]):
        out[k] = df2t_step(bh, bl, ah, al, zh, zl, float(u[k]))
    return out


def rst_step(t, s, r, z, ref, meas, lower, upper):
    """One sample of ``R(z) u = T(z) ref - S(z) meas`` with output clamping.

    The clamped value is written back into the recursion, so the controller
    state never sees a command the actuator did not receive.
    Returns ``(u, clamped)``.
    """
    n = z.shape[0]
    v = t[0] * ref - s[0] * meas
    if n > 0:
        v = v + z[0]
    u = v
    clamped = False
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
    return float(u), clamped
