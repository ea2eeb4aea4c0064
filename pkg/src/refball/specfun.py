"""Cylindrical and spherical Bessel/Hankel functions and Legendre polynomials.

The public functions ``cyl_bessel``, ``sph_bessel`` and ``legendre`` check
their arguments against the supported envelope (orders up to 60, arguments
up to 100).  The solvers call the unchecked vectorised helpers further down,
since far-zone probes legitimately need arguments well beyond 100.
"""
from __future__ import annotations

import enum

import numpy as np
from scipy import special

from .errors import DomainError, RangeError

MAX_ORDER = 60
MAX_ARG = 100.0


class BesselKind(enum.Enum):
    FIRST = "first"
    SECOND = "second"
    HANKEL1 = "hankel1"


def _check(kind: BesselKind, n, x):
    n = np.asarray(n)
    x = np.asarray(x, dtype=float)
    if np.any(n < 0) or np.any(n != np.floor(n)):
        raise DomainError("order must be a non-negative integer")
    if kind is BesselKind.FIRST:
        if np.any(x < 0):
            raise DomainError("x must be >= 0 for Bessel functions of the first kind")
    elif np.any(x <= 0):
        raise DomainError(f"x must be > 0 for {kind.value} kind")
    if np.any(n > MAX_ORDER) or np.any(x > MAX_ARG):
        raise RangeError(f"(n, x) outside supported envelope n <= {MAX_ORDER}, x <= {MAX_ARG}")
    return n.astype(int), x


def cyl_bessel(kind: BesselKind, n, x):
    """J_n(x), Y_n(x) or H_n^(1)(x) for integer n >= 0."""
    n, x = _check(kind, n, x)
    if kind is BesselKind.FIRST:
        return special.jv(n, x)
    if kind is BesselKind.SECOND:
        return special.yv(n, x)
    return special.hankel1(n, x)


def sph_bessel(kind: BesselKind, n, x):
    """j_n(x), y_n(x) or h_n^(1)(x) for integer n >= 0."""
    n, x = _check(kind, n, x)
    if kind is BesselKind.FIRST:
        return special.spherical_jn(n, x)
    if kind is BesselKind.SECOND:
        return special.spherical_yn(n, x)
    return special.spherical_jn(n, x) + 1j * special.spherical_yn(n, x)


def legendre(n: int, t):
    """P_n(t) by the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    if n < 0:
        raise DomainError("degree must be >= 0")
    if np.any(np.abs(t) > 1.0):
        raise DomainError("|t| must be <= 1")
    return legendre_table(n, t)[n]


def legendre_table(nmax: int, t):
    """Array of shape (nmax+1, *t.shape) holding P_0(t) .. P_nmax(t)."""
    t = np.asarray(t, dtype=float)
    out = np.empty((nmax + 1,) + t.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = t
    for m in range(1, nmax):
        out[m + 1] = ((2 * m + 1) * t * out[m] - m * out[m - 1]) / (m + 1)
    return out


# Unchecked helpers used by the solvers. Orders may be negative integers.

def besselj(n, x):
    return special.jv(n, x)


def hankel1(n, x):
    return special.hankel1(n, x)


def besselj_d(n, x):
    return special.jvp(n, x)


def hankel1_d(n, x):
    return special.h1vp(n, x)


def sph_jn(n, x, derivative=False):
    return special.spherical_jn(n, x, derivative=derivative)


def sph_h1(n, x, derivative=False):
    return (special.spherical_jn(n, x, derivative=derivative)
            + 1j * special.spherical_yn(n, x, derivative=derivative))
