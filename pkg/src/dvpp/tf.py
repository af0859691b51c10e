"""Rational transfer functions in the shift operator ``z``.

Coefficients are held as exact :class:`fractions.Fraction` values in
descending powers of ``z`` (``[1, -0.5]`` is ``z - 0.5``), so algebra,
normalization and dc gains carry no rounding. Float copies are derived once
for stepping and frequency-response evaluation.

Floats passed in are interpreted through their shortest ``repr``, i.e.
``0.01`` means the decimal 1/100, not the nearest binary double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _backend

NEAR_INTEGRATOR_TOL = 1e-9
STABILITY_TOL = 1e-9


class SampleTimeMismatch(ValueError):
    """Raised when combining blocks with different sample times."""


class NearIntegratorError(ArithmeticError):
    """Raised by :func:`dc_gain` when ``|den(1)|`` is below tolerance."""

    def __init__(self, num_at_1, den_at_1, tol):
        self.num_at_1 = num_at_1
        self.den_at_1 = den_at_1
        self.tol = tol
        super().__init__(
            f"near-integrator: |den(1)| = {abs(float(den_at_1)):.3e} <= {tol:g} "
            f"(num(1) = {float(num_at_1):.6g})"
        )


def exact(x) -> Fraction:
    """Convert a coefficient to an exact rational, rejecting non-finite input."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("boolean is not a coefficient")
    if isinstance(x, (int, np.integer, Rational)):
        return Fraction(int(x)) if isinstance(x, (int, np.integer)) else Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    xf = float(x)
    if not math.isfinite(xf):
        raise ValueError(f"non-finite coefficient {x!r}")
    return Fraction(repr(xf))


def _strip(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    i = 0
    while i < len(coeffs) - 1 and coeffs[i] == 0:
        i += 1
    return tuple(coeffs[i:])


def polymul(p: Sequence[Fraction], q: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        if pi == 0:
            continue
        for j, qj in enumerate(q):
            out[i + j] += pi * qj
    return out


def polyadd(p: Sequence[Fraction], q: Sequence[Fraction]) -> list[Fraction]:
    n = max(len(p), len(q))
    p = [Fraction(0)] * (n - len(p)) + list(p)
    q = [Fraction(0)] * (n - len(q)) + list(q)
    return [a + b for a, b in zip(p, q)]


def polyval(p: Sequence[Fraction], x):
    acc = 0 * x
    for c in p:
        acc = acc * x + c
    return acc


def taylor_shift(p: Sequence[Fraction]) -> list[Fraction]:
    """Coefficients of ``p(1 + w)`` in descending powers of ``w``."""
    c = list(p)
    n = len(c)
    # repeated synthetic division by (z - 1)
    for i in range(n - 1):
        for j in range(1, n - i):
            c[j] += c[j - 1]
    return c


def _dd_split(coeffs) -> tuple[np.ndarray, np.ndarray]:
    """Each exact coefficient as ``hi + lo`` with ``hi = float(c)``."""
    hi = np.array([float(c) for c in coeffs], dtype=np.float64)
    lo = np.array([float(Fraction(c) - Fraction(h)) for c, h in zip(coeffs, hi.tolist())], dtype=np.float64)
    return hi, lo


@dataclass(frozen=True, eq=False)
class RationalZ:
    """Proper rational function ``num(z)/den(z)`` with a fixed sample time.

    The denominator is normalized to a leading coefficient of exactly 1.
    """

    num: tuple
    den: tuple
    sample_time: Fraction

    def __init__(self, num: Iterable, den: Iterable, sample_time):
        num = _strip([exact(c) for c in num] or [Fraction(0)])
        den = _strip([exact(c) for c in den])
        if not den or den[0] == 0:
            raise ValueError("denominator must have a nonzero leading coefficient")
        if len(num) > len(den):
            raise ValueError(
                f"improper transfer function: deg num {len(num) - 1} > deg den {len(den) - 1}"
            )
        ts = exact(sample_time)
        if ts <= 0:
            raise ValueError("sample_time must be > 0")
        lead = den[0]
        object.__setattr__(self, "num", tuple(c / lead for c in num))
        object.__setattr__(self, "den", tuple(c / lead for c in den))
        object.__setattr__(self, "sample_time", ts)

    @classmethod
    def constant(cls, value, sample_time) -> "RationalZ":
        return cls([value], [1], sample_time)

    @property
    def T(self) -> float:
        return float(self.sample_time)

    @property
    def order(self) -> int:
        return len(self.den) - 1

    @property
    def strictly_proper(self) -> bool:
        return len(self.num) < len(self.den) or self.num == (0,)

    @cached_property
    def b(self) -> np.ndarray:
        """Numerator as floats, left-padded to the denominator length."""
        return self._split_num[0]

    @cached_property
    def a(self) -> np.ndarray:
        return self._split_den[0]

    @cached_property
    def _split_num(self) -> tuple[np.ndarray, np.ndarray]:
        pad = [Fraction(0)] * (len(self.den) - len(self.num))
        return _dd_split(pad + list(self.num))

    @cached_property
    def _split_den(self) -> tuple[np.ndarray, np.ndarray]:
        return _dd_split(self.den)

    @cached_property
    def _shifted(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.array([float(c) for c in taylor_shift(self.num)]),
            np.array([float(c) for c in taylor_shift(self.den)]),
        )

    def num_at_1(self) -> Fraction:
        return sum(self.num, Fraction(0))

    def den_at_1(self) -> Fraction:
        return sum(self.den, Fraction(0))

    def __call__(self, z):
        """Evaluate at a (complex) point using the float coefficients."""
        return np.polyval(self.b, z) / np.polyval(self.a, z)

    def _check(self, other: "RationalZ"):
        if not isinstance(other, RationalZ):
            raise TypeError(f"expected RationalZ, got {type(other).__name__}")
        if other.sample_time != self.sample_time:
            raise SampleTimeMismatch(
                f"sample times differ: {float(self.sample_time)} vs {float(other.sample_time)}"
            )

    def __mul__(self, other):
        if not isinstance(other, RationalZ):
            other = RationalZ.constant(other, self.sample_time)
        return multiply(self, other)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, RationalZ):
            other = RationalZ.constant(other, self.sample_time)
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, RationalZ):
            other = RationalZ.constant(other, self.sample_time)
        return subtract(self, other)

    def __neg__(self):
        return RationalZ([-c for c in self.num], self.den, self.sample_time)

    def equivalent(self, other: "RationalZ", tol: float = 0.0) -> bool:
        """Cross-multiplied comparison: ``num_a*den_b - num_b*den_a == 0``."""
        self._check(other)
        diff = polyadd(polymul(self.num, other.den), [-c for c in polymul(other.num, self.den)])
        return all(abs(c) <= tol for c in diff)

    def __eq__(self, other):
        if not isinstance(other, RationalZ):
            return NotImplemented
        return (self.num, self.den, self.sample_time) == (other.num, other.den, other.sample_time)

    def __hash__(self):
        return hash((self.num, self.den, self.sample_time))

    def __repr__(self):
        num = ", ".join(f"{float(c):.6g}" for c in self.num)
        den = ", ".join(f"{float(c):.6g}" for c in self.den)
        return f"RationalZ(num=[{num}], den=[{den}], T={float(self.sample_time):g})"


def discretize_first_order(dc_gain, tau, sample_time) -> RationalZ:
    """Forward-Euler image of ``dc_gain / (tau*s + 1)`` with ``s -> (z-1)/T``.

    Gives ``dc_gain*T / (tau*z + (T - tau))``; ``tau = 0`` is the constant.
    """
    mu, tau, T = exact(dc_gain), exact(tau), exact(sample_time)
    if T <= 0:
        raise ValueError("sample_time must be > 0")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0:
        return RationalZ.constant(mu, T)
    return RationalZ([mu * T], [tau, T - tau], T)


def multiply(a: RationalZ, b: RationalZ) -> RationalZ:
    a._check(b)
    return RationalZ(polymul(a.num, b.num), polymul(a.den, b.den), a.sample_time)


def add(a: RationalZ, b: RationalZ) -> RationalZ:
    """Common-denominator sum; no pole-zero cancellation is attempted."""
    a._check(b)
    if a.den == b.den:
        return RationalZ(polyadd(a.num, b.num), a.den, a.sample_time)
    num = polyadd(polymul(a.num, b.den), polymul(b.num, a.den))
    return RationalZ(num, polymul(a.den, b.den), a.sample_time)


def subtract(a: RationalZ, b: RationalZ) -> RationalZ:
    return add(a, -b)


def dc_gain(tf: RationalZ, tol: float = NEAR_INTEGRATOR_TOL) -> float:
    """``num(1)/den(1)``, exact up to the final conversion to float."""
    n1, d1 = tf.num_at_1(), tf.den_at_1()
    if abs(d1) <= tol:
        raise NearIntegratorError(n1, d1, tol)
    return float(n1 / d1)


class FrequencyPoint(NamedTuple):
    omega: float
    response: complex

    @property
    def magnitude(self) -> float:
        return abs(self.response)

    @property
    def magnitude_db(self) -> float:
        return 20.0 * math.log10(abs(self.response)) if self.response != 0 else -math.inf

    @property
    def phase(self) -> float:
        return math.atan2(self.response.imag, self.response.real)


def freq_response(tf: RationalZ, omega_grid) -> list[FrequencyPoint]:
    """Evaluate on ``z = exp(j*omega*T)`` for each omega in ``[0, pi/T)``.

    Polynomials are evaluated in ``w = z - 1`` (Taylor-shifted coefficients)
    so that slow poles close to ``z = 1`` do not suffer cancellation.
    """
    T = tf.T
    nyq = math.pi / T
    nums, dens = tf._shifted
    out = []
    for omega in np.atleast_1d(np.asarray(omega_grid, dtype=float)):
        omega = float(omega)
        if not math.isfinite(omega) or omega < 0 or omega >= nyq:
            raise ValueError(f"omega={omega} outside [0, {nyq:.6g}) rad/s")
        x = omega * T
        w = complex(-2.0 * math.sin(x / 2) ** 2, math.sin(x))
        out.append(FrequencyPoint(omega, complex(np.polyval(nums, w) / np.polyval(dens, w))))
    return out


class PoleSet(NamedTuple):
    poles: np.ndarray
    is_stable: bool
    marginal: bool

    @property
    def radius(self) -> float:
        return float(np.max(np.abs(self.poles))) if len(self.poles) else 0.0


def poles(tf: RationalZ, tol: float = STABILITY_TOL) -> PoleSet:
    """Denominator roots (companion-matrix eigenvalues) and stability flags.

    Stable means every ``|p| < 1 - tol``; marginal means none outside but at
    least one within ``tol`` of the unit circle.
    """
    if tf.order == 0:
        return PoleSet(np.zeros(0, dtype=complex), True, False)
    p = np.roots(tf.a).astype(complex)
    mags = np.abs(p)
    stable = bool(np.all(mags < 1 - tol))
    marginal = bool(not stable and np.all(mags <= 1 + tol))
    return PoleSet(p, stable, marginal)


class LtiState:
    """Delay-line state of one :class:`RationalZ` realization.

    Transposed direct-form II in double-double arithmetic: the state holds
    ``order`` high words ``z`` and matching low words. Owned by a single
    stepping context.
    """

    __slots__ = ("tf", "z", "z_lo", "_bh", "_bl", "_ah", "_al")

    def __init__(self, tf: RationalZ):
        self.tf = tf
        self._bh, self._bl = (np.ascontiguousarray(x) for x in tf._split_num)
        self._ah, self._al = (np.ascontiguousarray(x) for x in tf._split_den)
        self.z = np.zeros(tf.order, dtype=np.float64)
        self.z_lo = np.zeros(tf.order, dtype=np.float64)

    def step(self, u: float) -> float:
        return _backend.df2t_step(self._bh, self._bl, self._ah, self._al, self.z, self.z_lo, float(u))

    def peek(self) -> float:
        """Next output of a strictly proper block (independent of the next input)."""
        if self._bh[0] != 0.0 or self._bl[0] != 0.0:
            raise ValueError("peek() needs a strictly proper block")
        return float(self.z[0]) if self.z.shape[0] else 0.0

    def run(self, u) -> np.ndarray:
        u = np.ascontiguousarray(u, dtype=np.float64)
        return _backend.df2t_filter(self._bh, self._bl, self._ah, self._al, self.z, self.z_lo, u)

    def reset(self):
        self.z[:] = 0.0
        self.z_lo[:] = 0.0

    def copy(self) -> "LtiState":
        other = LtiState(self.tf)
        other.z[:] = self.z
        other.z_lo[:] = self.z_lo
        return other


def step(state: LtiState, input_sample: float) -> float:
    return state.step(input_sample)


def simulate(tf: RationalZ, u) -> np.ndarray:
    """Zero-state response to the sequence ``u``."""
    return LtiState(tf).run(u)


def impulse_response(tf: RationalZ, n: int) -> np.ndarray:
    u = np.zeros(n)
    if n:
        u[0] = 1.0
    return simulate(tf, u)
