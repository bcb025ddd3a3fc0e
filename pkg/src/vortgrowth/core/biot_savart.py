"""Velocity from vorticity: u = grad-perp of the inverse Laplacian, grad-perp = (-d2, d1)."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import ConfigError, SupportOverflowError
from .grid import (FREE, TORUS, DomainSpec, ScalarField2D, VectorField2D, irfft2, rfft2,
                   wavenumbers)

SUPPORT_RTOL = 1e-3


@lru_cache(maxsize=16)
def torus_velocity_symbols(domain: DomainSpec):
    """Multipliers turning w_hat into (u1_hat, u2_hat) on a periodic box."""
    k1, k2 = wavenumbers(domain)
    ksq = k1 ** 2 + k2 ** 2
    inv = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=inv, where=ksq > 0)
    nyq1 = np.isclose(np.abs(k1), np.pi / domain.dx)
    nyq2 = np.isclose(k2, np.pi / domain.dy)
    inv = np.where(nyq1 | nyq2, 0.0, inv)
    return 1j * k2 * inv, -1j * k1 * inv


def biot_savart_torus(omega: ScalarField2D) -> VectorField2D:
    """Spectral Biot-Savart law on the 2*pi torus."""
    d = omega.domain
    if d.kind != TORUS:
        raise ConfigError("biot_savart_torus needs a torus field")
    omega.require_mean_zero()
    s1, s2 = torus_velocity_symbols(d)
    hat = rfft2(omega.values)
    return VectorField2D(omega.with_values(irfft2(s1 * hat, d.shape)),
                         omega.with_values(irfft2(s2 * hat, d.shape)))


def _rect_antiderivative(x, y):
    # G with d2G/dxdy = y / (x^2 + y^2); the linear part cancels in corner sums
    r2 = x * x + y * y
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(r2 > 0, 0.5 * x * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        b = np.where(y != 0, y * np.arctan(x / np.where(y != 0, y, 1.0)), 0.0)
    return a + b


def _cell_integrals(c1, c2, h1, h2):
    """Exact integrals of K over the cells centred at (c1, c2)."""
    lo1, hi1 = c1 - h1 / 2, c1 + h1 / 2
    lo2, hi2 = c2 - h2 / 2, c2 + h2 / 2

    def corners(G):
        return G(hi1, hi2) - G(lo1, hi2) - G(hi1, lo2) + G(lo1, lo2)

    int_z2 = corners(lambda a, b: _rect_antiderivative(a, b))
    int_z1 = corners(lambda a, b: _rect_antiderivative(b, a))
    return -int_z2 / (2 * np.pi), int_z1 / (2 * np.pi)


@lru_cache(maxsize=8)
def free_space_kernel_hat(domain: DomainSpec):
    """FFT of the cell-integrated Biot-Savart kernel on the padded lattice."""
    P = domain.pad_factor
    n1, n2 = P * domain.nx, P * domain.ny
    o1 = np.fft.fftfreq(n1) * n1 * domain.dx
    o2 = np.fft.fftfreq(n2) * n2 * domain.dy
    C1, C2 = np.meshgrid(o1, o2, indexing="ij")
    k1, k2 = _cell_integrals(C1, C2, domain.dx, domain.dy)
    return rfft2(k1), rfft2(k2)


def check_support(omega: ScalarField2D, rtol: float = SUPPORT_RTOL) -> None:
    """Free-space support must stay at least one cell inside the box."""
    v = np.abs(omega.values)
    ring = max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max())
    if ring > rtol * max(v.max(), 1e-300):
        raise SupportOverflowError(
            f"vorticity {ring:.3e} on the box boundary; enlarge the box")


def free_velocity_arrays(values: np.ndarray, domain: DomainSpec):
    P = domain.pad_factor
    shape = (P * domain.nx, P * domain.ny)
    kh1, kh2 = free_space_kernel_hat(domain)
    padded = np.zeros(shape)
    padded[:domain.nx, :domain.ny] = values
    w_hat = rfft2(padded)
    u1 = irfft2(kh1 * w_hat, shape)[:domain.nx, :domain.ny]
    u2 = irfft2(kh2 * w_hat, shape)[:domain.nx, :domain.ny]
    return u1, u2


def biot_savart_free(omega: ScalarField2D, support_rtol: float = SUPPORT_RTOL) -> VectorField2D:
    """Free-space Biot-Savart law by zero-padded FFT convolution."""
    d = omega.domain
    if d.kind != FREE:
        raise ConfigError("biot_savart_free needs a free-space field")
    check_support(omega, support_rtol)
    u1, u2 = free_velocity_arrays(omega.values, d)
    return VectorField2D(omega.with_values(u1), omega.with_values(u2))


def velocity(omega: ScalarField2D) -> VectorField2D:
    if omega.domain.kind == TORUS:
        return biot_savart_torus(omega)
    return biot_savart_free(omega)


# ------------------------------------------------------------ image-sum oracle


class _TrigInterpolant:
    """Band-limited interpolant of a torus field, evaluated pointwise."""

    def __init__(self, omega: ScalarField2D, rtol: float = 1e-14):
        d = omega.domain
        n1, n2 = d.shape
        c = np.fft.fft2(omega.values) / (n1 * n2)
        m1 = np.rint(np.fft.fftfreq(n1) * n1)
        m2 = np.rint(np.fft.fftfreq(n2) * n2)
        M1, M2 = np.meshgrid(m1, m2, indexing="ij")
        # grid starts at -pi: shift phases so c multiplies exp(i m.x)
        c = c * np.exp(1j * (M1 * np.pi + M2 * np.pi))
        keep = np.abs(c) > rtol * np.abs(c).max()
        # Nyquist modes are ambiguous; the oracle expects band-limited data
        keep &= (np.abs(M1) < n1 / 2) & (np.abs(M2) < n2 / 2)
        self.m1 = M1[keep]
        self.m2 = M2[keep]
        self.c = c[keep]

    def __call__(self, y1, y2):
        y1 = np.asarray(y1)
        flat1, flat2 = y1.ravel(), np.asarray(y2).ravel()
        out = np.zeros(flat1.shape)
        for start in range(0, flat1.size, 65536):
            s = slice(start, start + 65536)
            ph = np.outer(flat1[s], self.m1) + np.outer(flat2[s], self.m2)
            out[s] = (np.exp(1j * ph) @ self.c).real
        return out.reshape(y1.shape)


def _kernel(z1, z2):
    r2 = z1 * z1 + z2 * z2
    return -z2 / (2 * np.pi * r2), z1 / (2 * np.pi * r2)


def _near_block(x, w, n_quad):
    """int over [-3pi, 3pi]^2 of K(x - z) w(z) dz with Duffy-regularised corners."""
    g, gw = np.polynomial.legendre.leggauss(n_quad)
    g = 0.5 * (g + 1)
    gw = 0.5 * gw
    U, V = np.meshgrid(g, g, indexing="ij")
    W = np.outer(gw, gw)
    total = np.zeros(2)
    for a in (3 * np.pi - x[0], -3 * np.pi - x[0]):
        for b in (3 * np.pi - x[1], -3 * np.pi - x[1]):
            for tri in range(2):
                if tri == 0:
                    w1, w2 = a * U, b * U * V
                    v1, v2 = a, b * V
                else:
                    w1, w2 = a * U * V, b * U
                    v1, v2 = a * V, b
                # K(-w) * |ab| u, with the 1/u singularity cancelled
                q = abs(a * b) / (2 * np.pi * (v1 * v1 + v2 * v2))
                vals = w(x[0] + w1, x[1] + w2) * W
                total[0] += np.sum(q * v2 * vals)
                total[1] += np.sum(-q * v1 * vals)
    return total


def biot_savart_image_sum(omega: ScalarField2D, points, m_max: int = 20,
                          n_quad: int = 64, n_far: int = 32,
                          dipole_correction: bool = True) -> np.ndarray:
    """Periodic-image quadrature of the Biot-Savart law (validation oracle).

    The nine cells with |m| < 2 are integrated with Duffy-transformed
    Gauss-Legendre rules around the singularity, the cells with
    2 <= |m| <= m_max with a tensor rule after subtracting K(2*pi*m).

    The image series converges only conditionally when the cell carries a
    dipole moment P = int y w(y) dy. A disc-ordered partial sum then
    converges to the zero-mean periodic field plus the uniform term
    -P_perp / (2 |cell|) produced by the "surface" of the disc. The
    default adds it back so the oracle targets the zero-mean
    velocity.

    Returns an array of shape (npoints, 2).
    """
    d = omega.domain
    if d.kind != TORUS:
        raise ConfigError("image-sum oracle needs a torus field")
    omega.require_mean_zero()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    w = _TrigInterpolant(omega)

    g, gw = np.polynomial.legendre.leggauss(n_far)
    g = np.pi * g
    gw = np.pi * gw
    Y1, Y2 = np.meshgrid(g, g, indexing="ij")
    WY = np.outer(gw, gw)
    wy = w(Y1, Y2) * WY
    r = int(np.floor(m_max))
    ms = np.array([(i, j) for i in range(-r, r + 1) for j in range(-r, r + 1)
                   if 4 <= i * i + j * j <= m_max * m_max], dtype=float)

    P = np.array([np.sum(Y1 * wy), np.sum(Y2 * wy)])
    area = 4 * np.pi ** 2

    out = np.zeros((len(pts), 2))
    for idx, x in enumerate(pts):
        near = _near_block(x, w, n_quad)
        far = np.zeros(2)
        for chunk in np.array_split(ms, max(1, len(ms) // 256)):
            s1 = 2 * np.pi * chunk[:, 0][:, None, None]
            s2 = 2 * np.pi * chunk[:, 1][:, None, None]
            k1, k2 = _kernel(x[0] - Y1[None] + s1, x[1] - Y2[None] + s2)
            c1, c2 = _kernel(s1, s2)
            far[0] += np.sum((k1 - c1) * wy[None])
            far[1] += np.sum((k2 - c2) * wy[None])
        out[idx] = near + far
        if dipole_correction:
            out[idx] += np.array([-P[1], P[0]]) / (2 * area)
    return out
