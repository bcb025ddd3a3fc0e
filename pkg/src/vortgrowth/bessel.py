"""Bessel functions of the first kind and the first positive zero of J1.

Kept in-house so the Lamb constant is reproducible without depending on a
particular special-function library.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import NumericalFailure

SERIES_LIMIT = 8.0
MILLER_LIMIT = 40.0


def _series(n: int, x: np.ndarray) -> np.ndarray:
    half = x / 2.0
    term = half ** n / math.factorial(n)
    total = term.copy()
    q = -half * half
    for m in range(1, 60):
        term = term * q / (m * (m + n))
        total += term
    return total


def _miller(n: int, x: np.ndarray) -> np.ndarray:
    start = 2 * int((MILLER_LIMIT + 40) / 2) + 2
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    out = np.zeros_like(x)
    for k in range(start, 0, -1):
        jm1 = (2.0 * k / x) * j - jp1
        jp1, j = j, jm1
        # j now holds the (unnormalised) value of order k - 1
        if k - 1 == n:
            out = j.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        big = np.abs(j) > 1e200
        if np.any(big):
            s = np.where(big, 1e-200, 1.0)
            j *= s
            jp1 *= s
            norm *= s
            out *= s
    norm += j
    return out / norm


def _asymptotic(n: int, x: np.ndarray) -> np.ndarray:
    mu = 4.0 * n * n
    p = np.ones_like(x)
    q = np.zeros_like(x)
    a = 1.0
    for k in range(1, 14):
        a *= (mu - (2 * k - 1) ** 2) / (k * 8.0)
        term = a / x ** k
        if k % 2 == 0:
            p += (-1) ** (k // 2) * term
        else:
            q += (-1) ** ((k - 1) // 2) * term
    chi = x - (n / 2.0 + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j(order: int, x):
    """J_order(x) for integer order >= 0, vectorised over ``x``."""
    if order < 0 or int(order) != order:
        raise ValueError("order must be a non-negative integer")
    n = int(order)
    xa = np.asarray(x, dtype=float)
    ax = np.abs(xa)
    out = np.empty_like(ax)
    lo = ax <= SERIES_LIMIT
    mid = (ax > SERIES_LIMIT) & (ax <= MILLER_LIMIT)
    hi = ax > MILLER_LIMIT
    if np.any(lo):
        out[lo] = _series(n, ax[lo])
    if np.any(mid):
        out[mid] = _miller(n, ax[mid])
    if np.any(hi):
        out[hi] = _asymptotic(n, ax[hi])
    if n % 2:
        out = np.where(xa < 0, -out, out)
    return out if out.ndim else float(out)


def j0(x):
    return bessel_j(0, x)


def j1(x):
    return bessel_j(1, x)


def bessel_zero_cl(lo: float = 3.5, hi: float = 4.2, tol: float = 1e-15) -> tuple:
    """First positive zero of J1 by safeguarded Newton; returns (c_L, J0(c_L))."""
    f_lo, f_hi = j1(lo), j1(hi)
    if f_lo * f_hi > 0:
        raise NumericalFailure("J1 has no sign change on the bracket")
    x = 0.5 * (lo + hi)
    for _ in range(200):
        f = j1(x)
        if f == 0.0:
            break
        if (f > 0) == (f_lo > 0):
            lo, f_lo = x, f
        else:
            hi = x
        deriv = j0(x) - f / x
        step = f / deriv if deriv != 0 else np.inf
        nxt = x - step
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= tol * abs(x) or hi - lo <= tol * abs(x):
            x = nxt
            break
        x = nxt
    else:
        raise NumericalFailure("Newton iteration for c_L did not converge")
    return float(x), float(j0(x))
