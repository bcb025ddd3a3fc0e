"""Lamb dipole: constants, vorticity, co-moving stream function and the flux square.

The dipole has unit radius and translates with unit speed along +x1. In
the co-moving frame the stream function used here, ``psi_bar``, satisfies
``-Laplace(psi_bar) = w_L`` inside the disc and ``psi_bar -> -x2`` far away.
The co-moving velocity is  u - e1 = (d2 psi_bar, -d1 psi_bar).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bessel import bessel_zero_cl, j0, j1
from .core.grid import FREE, DomainSpec, ScalarField2D
from .errors import ConfigError, FluxSquareError, NumericalFailure


@dataclass(frozen=True)
class LambConstants:
    c_L: float
    j0_cL: float
    m_L: float
    m_L_coarse: float

    @property
    def amplitude(self) -> float:
        """Prefactor of J1(c r) sin(theta) in the vorticity."""
        return -2.0 * self.c_L / self.j0_cL


def _half_disc_mass(c: float, j0c: float, n: int) -> float:
    # tensor Gauss-Legendre over (r, theta) in [0, 1] x [0, pi]
    g, w = np.polynomial.legendre.leggauss(n)
    r = 0.5 * (g + 1)
    wr = 0.5 * w
    th = 0.5 * np.pi * (g + 1)
    wt = 0.5 * np.pi * w
    radial = (-2 * c / j0c) * j1(c * r) * r
    return float(np.sum(radial * wr) * np.sum(np.sin(th) * wt))


@lru_cache(maxsize=1)
def lamb_constants() -> LambConstants:
    """c_L, J0(c_L) and the upper-half mass m_L (checked at two resolutions)."""
    c, j0c = bessel_zero_cl()
    # the integrand is entire, so Gauss rules converge geometrically
    fine = _half_disc_mass(c, j0c, 64)
    coarse = _half_disc_mass(c, j0c, 32)
    if abs(fine - coarse) > 1e-12 * abs(fine):
        raise NumericalFailure("half-disc mass quadrature did not converge")
    return LambConstants(c, j0c, fine, coarse)


def _j1_over_r(c: float, r: np.ndarray) -> np.ndarray:
    """J1(c r) / r, continuous at r = 0."""
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, j1(c * safe) / safe, c / 2.0)


def lamb_vorticity(x1, x2) -> np.ndarray:
    """w_L at the given points (zero outside the unit disc)."""
    k = lamb_constants()
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    r = np.hypot(x1, x2)
    inside = r < 1.0
    out = np.zeros(np.broadcast(x1, x2).shape)
    if np.any(inside):
        ri = np.broadcast_to(r, out.shape)[inside]
        yi = np.broadcast_to(x2, out.shape)[inside]
        out[inside] = k.amplitude * _j1_over_r(k.c_L, ri) * yi
    return out


def lamb_stream_comoving(x1, x2, branch: str = "auto") -> np.ndarray:
    """psi_bar at the given points.

    ``branch`` selects the inner Bessel formula, the outer potential-flow
    formula, or ("auto") whichever applies. Both branches are analytic near
    the circle, which is handy for finite-difference checks on r = 1.
    """
    k = lamb_constants()
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    r = np.hypot(x1, x2)
    inner = -2.0 / (k.c_L * k.j0_cL) * _j1_over_r(k.c_L, r) * x2
    with np.errstate(divide="ignore", invalid="ignore"):
        outer = x2 * (1.0 / r ** 2 - 1.0)
    if branch == "inner":
        return inner
    if branch == "outer":
        return outer
    if branch != "auto":
        raise ConfigError(f"unknown branch {branch!r}")
    return np.where(r < 1.0, inner, outer)


def lamb_velocity_comoving(x1, x2) -> tuple:
    """(u - e1) = (d2 psi_bar, -d1 psi_bar) from the closed forms."""
    k = lamb_constants()
    c = k.c_L
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x1, x2 = np.broadcast_arrays(x1, x2)
    r = np.hypot(x1, x2)
    A = -2.0 / (c * k.j0_cL)
    F = _j1_over_r(c, r)
    small = r < 1e-3
    rs = np.where(small, 1.0, r)
    # F'(r) / r, with a Taylor branch near the origin
    Fp_over_r = np.where(
        small,
        c * (-c * c / 8.0 + c ** 4 * r * r / 96.0),
        (c * rs * j0(c * rs) - 2.0 * j1(c * rs)) / rs ** 3,
    )
    in1 = A * (F + x2 * x2 * Fp_over_r)
    in2 = -A * x1 * x2 * Fp_over_r
    with np.errstate(divide="ignore", invalid="ignore"):
        r4 = r ** 4
        out1 = 1.0 / r ** 2 - 1.0 - 2.0 * x2 * x2 / r4
        out2 = 2.0 * x1 * x2 / r4
    inside = r < 1.0
    return np.where(inside, in1, out1), np.where(inside, in2, out2)


def lamb_saddle_hessian(side: int) -> np.ndarray:
    """Hessian of psi_bar at the stagnation point (side, 0), side = -1 or +1."""
    if side not in (-1, 1):
        raise ConfigError("side must be -1 or +1")
    s = -float(side)
    return np.array([[0.0, 2.0 * s], [2.0 * s, 0.0]])


def lamb_field(domain: DomainSpec, center=(0.0, 0.0), cell_average: bool = False,
               time: float = 0.0) -> ScalarField2D:
    """Sample w_L(x - center) on a free-space grid.

    With ``cell_average`` the values are exact-to-quadrature averages over
    each grid cell, which makes grid sums reproduce the continuous
    integrals of the Lipschitz profile far more accurately than point
    samples.
    """
    if domain.kind != FREE:
        raise ConfigError("the Lamb dipole lives on a free-space grid")
    X1, X2 = domain.mesh()
    f = lambda a, b: lamb_vorticity(a - center[0], b - center[1])  # noqa: E731
    if not cell_average:
        return ScalarField2D(domain, f(X1, X2), time)
    vals = cell_averages(f, X1, X2, domain.dx, domain.dy,
                         lambda a, b: np.hypot(a - center[0], b - center[1]) - 1.0)
    return ScalarField2D(domain, vals, time)


def cell_averages(f, X1, X2, h1, h2, level_set, depth: int = 9, order: int = 3):
    """Average of ``f`` over the cells centred at (X1, X2).

    ``level_set`` marks the curve where ``f`` has a kink; cells it crosses
    are refined as a quadtree ``depth`` times before Gauss quadrature.
    """
    g, w = np.polynomial.legendre.leggauss(order)
    g = 0.5 * g
    w = 0.5 * w
    out = np.zeros(X1.shape)

    def gauss(c1, c2, s1, s2):
        acc = np.zeros(c1.shape)
        for gi, wi in zip(g, w):
            for gj, wj in zip(g, w):
                acc += wi * wj * f(c1 + gi * s1, c2 + gj * s2)
        return acc

    def crosses(c1, c2, s1, s2):
        vals = [level_set(c1 + a * s1 / 2, c2 + b * s2 / 2) for a in (-1, 1) for b in (-1, 1)]
        vals.append(level_set(c1, c2))
        lo = np.minimum.reduce(vals)
        hi = np.maximum.reduce(vals)
        # level set is a distance-like function, so pad by half a diagonal
        pad = 0.5 * np.hypot(s1, s2)
        return (lo < pad) & (hi > -pad)

    c1, c2 = X1.ravel(), X2.ravel()
    owner = np.arange(c1.size)
    frac = np.ones(c1.size)
    s1, s2 = h1, h2
    acc = np.zeros(c1.size)
    for level in range(depth + 1):
        cut = crosses(c1, c2, s1, s2) if level < depth else np.zeros(c1.size, bool)
        keep = ~cut
        if np.any(keep):
            np.add.at(acc, owner[keep], frac[keep] * gauss(c1[keep], c2[keep], s1, s2))
        if not np.any(cut):
            break
        c1, c2, owner, frac = c1[cut], c2[cut], owner[cut], frac[cut]
        s1, s2 = s1 / 2, s2 / 2
        c1 = np.concatenate([c1 + a * s1 / 2 for a in (-1, 1) for b in (-1, 1)])
        c2 = np.concatenate([c2 + b * s2 / 2 for a in (-1, 1) for b in (-1, 1)])
        owner = np.tile(owner, 4)
        frac = np.tile(frac / 4, 4)
    out[:] = acc.reshape(X1.shape)
    return out


@dataclass(frozen=True)
class FluxSquareReport:
    eta: float
    c0: float
    min_gamma1: float
    max_gamma2: float
    min_gamma3: float
    max_gamma4: float


def flux_square(eta: float, n_samples: int = 2000) -> FluxSquareReport:
    """Flux constant of Q = {|x1 + 1| < eta, |x2| < eta} for the co-moving Lamb flow.

    Gamma1 is the left side x1 = -1 - eta, Gamma2 the top, Gamma3 the right
    side and Gamma4 the bottom. Fluxes are (u - e1) . n with n the outward
    normal, sampled at open-segment midpoints.
    """
    if not 0 < eta < 0.5:
        raise ConfigError("eta must lie in (0, 1/2)")
    s = -eta + (np.arange(n_samples) + 0.5) * (2 * eta / n_samples)
    left = lamb_velocity_comoving(-1.0 - eta, s)
    right = lamb_velocity_comoving(-1.0 + eta, s)
    top = lamb_velocity_comoving(-1.0 + s, eta)
    bottom = lamb_velocity_comoving(-1.0 + s, -eta)
    g1 = float(np.min(-left[0]))
    g3 = float(np.min(right[0]))
    g2 = float(np.max(top[1]))
    g4 = float(np.max(-bottom[1]))
    c0 = min(g1, g3, -g2, -g4)
    if not c0 > 0:
        raise FluxSquareError(f"flux square at eta={eta} has no positive flux constant")
    return FluxSquareReport(eta, c0, g1, g2, g3, g4)
