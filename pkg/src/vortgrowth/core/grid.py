"""Grids, fields and Fourier helpers.

Arrays are indexed ``values[i, j]`` at the point ``(x1_i, x2_j)``.
Periodic boxes (the torus and the free-space computational box) use
``x = origin + i * dx`` with ``dx = length / n``. The torus grid starts at
-pi; the free-space grid is cell-centred on [-L, L). Chart grids used by the
tracer include both end points, so ``dx = length / (n - 1)``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from ..errors import ConfigError, MeanZeroError

TORUS = "torus"
FREE = "free"
CHART = "chart"

MEAN_ZERO_RTOL = 1e-12


def fft_workers() -> int:
    """Worker count for scipy.fft, capped by ``VORT_THREADS``."""
    raw = os.environ.get("VORT_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def rfft2(a):
    return sfft.rfft2(a, workers=fft_workers())


def irfft2(a, shape, overwrite=False):
    return sfft.irfft2(a, s=shape, workers=fft_workers(), overwrite_x=overwrite)


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    nx: int
    ny: int
    origin: tuple
    length: tuple
    pad_factor: int = 2

    def __post_init__(self):
        if self.kind not in (TORUS, FREE, CHART):
            raise ConfigError(f"unknown domain kind {self.kind!r}")
        if self.nx < 16 or self.ny < 16:
            raise ConfigError("grid must have at least 16 points per axis")
        if min(self.length) <= 0:
            raise ConfigError("domain lengths must be positive")
        if self.kind == TORUS:
            if not np.allclose(self.length, (2 * np.pi, 2 * np.pi), rtol=0, atol=1e-12):
                raise ConfigError("torus side must be 2*pi")
        if self.kind == FREE:
            if self.pad_factor < 2:
                raise ConfigError("pad_factor must be at least 2")
            if min(self.length) < 8.0:
                raise ConfigError("free-space box half-width must be at least 4")
            if self.nx % 2 or self.ny % 2:
                raise ConfigError("free-space grid sizes must be even")

    @classmethod
    def torus(cls, n: int, ny: int | None = None) -> "DomainSpec":
        return cls(TORUS, n, ny or n, (-np.pi, -np.pi), (2 * np.pi, 2 * np.pi))

    @classmethod
    def free(cls, n: int, half_width: float = 6.0, ny: int | None = None,
             pad_factor: int = 2) -> "DomainSpec":
        # cell-centred: x2 = 0 is a cell edge, so half-plane sums are midpoint rules
        L = float(half_width)
        m = ny or n
        return cls(FREE, n, m, (-L + L / n, -L + L / m), (2 * L, 2 * L), pad_factor)

    @classmethod
    def chart(cls, n: int, half_width: float) -> "DomainSpec":
        h = float(half_width)
        return cls(CHART, n, n, (-h, -h), (2 * h, 2 * h))

    @property
    def periodic(self) -> bool:
        return self.kind != CHART

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        n = self.nx if self.periodic else self.nx - 1
        return self.length[0] / n

    @property
    def dy(self) -> float:
        n = self.ny if self.periodic else self.ny - 1
        return self.length[1] / n

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def x1(self) -> np.ndarray:
        return self.origin[0] + self.dx * np.arange(self.nx)

    def x2(self) -> np.ndarray:
        return self.origin[1] + self.dy * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x1(), self.x2(), indexing="ij")


class ScalarField2D:
    """Immutable sampled scalar field on a :class:`DomainSpec`."""

    __slots__ = ("domain", "values", "time")

    def __init__(self, domain: DomainSpec, values, time: float = 0.0):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.shape != domain.shape:
            raise ConfigError(f"field shape {arr.shape} does not match grid {domain.shape}")
        arr.setflags(write=False)
        self.domain = domain
        self.values = arr
        self.time = float(time)

    @classmethod
    def from_function(cls, domain: DomainSpec, f, time: float = 0.0) -> "ScalarField2D":
        X1, X2 = domain.mesh()
        return cls(domain, f(X1, X2), time)

    def with_values(self, values, time: float | None = None) -> "ScalarField2D":
        return ScalarField2D(self.domain, values, self.time if time is None else time)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def integral(self) -> float:
        return float(np.sum(self.values) * self.domain.cell_area)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values ** 2) * self.domain.cell_area))

    def is_mean_zero(self, rtol: float = MEAN_ZERO_RTOL) -> bool:
        return abs(self.mean()) <= rtol * max(self.max_abs(), 1e-300)

    def require_mean_zero(self, rtol: float = MEAN_ZERO_RTOL) -> None:
        if not self.is_mean_zero(rtol):
            raise MeanZeroError(
                f"torus vorticity mean {self.mean():.3e} exceeds {rtol:g} * max|w|")

    def __sub__(self, other: "ScalarField2D") -> "ScalarField2D":
        return self.with_values(self.values - other.values)

    def __add__(self, other: "ScalarField2D") -> "ScalarField2D":
        return self.with_values(self.values + other.values)

    def __repr__(self):
        return f"ScalarField2D({self.domain.kind}, {self.domain.shape}, t={self.time:g})"


@dataclass(frozen=True)
class VectorField2D:
    u1: ScalarField2D
    u2: ScalarField2D

    @property
    def domain(self) -> DomainSpec:
        return self.u1.domain

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u1.values, self.u2.values)

    def max_norm(self) -> float:
        return float(np.max(self.magnitude()))


# ---------------------------------------------------------------- spectral


@lru_cache(maxsize=16)
def wavenumbers(domain: DomainSpec):
    """Angular wavenumbers (k1, k2) broadcast to the rfft2 layout."""
    k1 = 2 * np.pi * sfft.fftfreq(domain.nx, d=domain.dx)
    k2 = 2 * np.pi * sfft.rfftfreq(domain.ny, d=domain.dy)
    return k1[:, None], k2[None, :]


@lru_cache(maxsize=16)
def _index_modes(domain: DomainSpec):
    m1 = np.rint(sfft.fftfreq(domain.nx) * domain.nx).astype(int)
    m2 = np.arange(domain.ny // 2 + 1)
    return m1[:, None], m2[None, :]


@lru_cache(maxsize=16)
def dealias_mask(domain: DomainSpec) -> np.ndarray:
    """Two-thirds rule: keep integer modes with |m_i| <= n_i / 3."""
    m1, m2 = _index_modes(domain)
    return (np.abs(m1) <= domain.nx / 3) & (np.abs(m2) <= domain.ny / 3)


@lru_cache(maxsize=16)
def derivative_symbols(domain: DomainSpec):
    """i*k1 and i*k2 with the Nyquist entries removed."""
    k1, k2 = wavenumbers(domain)
    m1, m2 = _index_modes(domain)
    d1 = 1j * np.where(np.abs(m1) == domain.nx // 2, 0.0, k1)
    d2 = 1j * np.where(m2 == domain.ny // 2, 0.0, k2)
    return d1, d2


def _require_periodic(field: ScalarField2D):
    if not field.domain.periodic:
        raise ConfigError("spectral operations need a periodic box")


def dealias_23(field: ScalarField2D) -> ScalarField2D:
    _require_periodic(field)
    d = field.domain
    hat = rfft2(field.values) * dealias_mask(d)
    return field.with_values(irfft2(hat, d.shape))


def fourier_coefficient(field: ScalarField2D, k) -> complex:
    """Continuous coefficient  int exp(-i k.x) w(x) dx  for integer mode k on the box."""
    _require_periodic(field)
    d = field.domain
    return fourier_coefficient_from_hat(rfft2(field.values), d, k)


def fourier_coefficient_from_hat(hat: np.ndarray, domain: DomainSpec, k) -> complex:
    """Same as :func:`fourier_coefficient` but reads an existing rfft2 array."""
    m1, m2 = int(k[0]), int(k[1])
    conj = False
    if m2 < 0:
        m1, m2, conj = -m1, -m2, True
    if abs(m2) > domain.ny // 2 or abs(m1) > domain.nx // 2:
        return 0j
    raw = hat[m1 % domain.nx, m2]
    if conj:
        raw = np.conj(raw)
        m1, m2 = -m1, -m2
    kx = 2 * np.pi * m1 / domain.length[0]
    ky = 2 * np.pi * m2 / domain.length[1]
    phase = np.exp(-1j * (kx * domain.origin[0] + ky * domain.origin[1]))
    return complex(raw * phase * domain.cell_area)


def _fd4(a: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    out = (8 * (np.roll(a, -1, axis) - np.roll(a, 1, axis))
           - (np.roll(a, -2, axis) - np.roll(a, 2, axis))) / (12 * h)
    if not periodic:
        edge = np.gradient(a, h, axis=axis, edge_order=2)
        sl = [slice(None)] * 2
        for idx in (0, 1, -2, -1):
            sl[axis] = idx
            out[tuple(sl)] = edge[tuple(sl)]
    return out


def gradient_spectral(field: ScalarField2D) -> VectorField2D:
    """Gradient: spectral on the torus, 4th-order centered differences elsewhere."""
    d = field.domain
    if d.kind == TORUS:
        hat = rfft2(field.values)
        d1, d2 = derivative_symbols(d)
        g1 = irfft2(d1 * hat, d.shape)
        g2 = irfft2(d2 * hat, d.shape)
    else:
        periodic = d.kind == FREE
        g1 = _fd4(field.values, d.dx, 0, periodic)
        g2 = _fd4(field.values, d.dy, 1, periodic)
    return VectorField2D(field.with_values(g1), field.with_values(g2))


def grad_max(field: ScalarField2D) -> float:
    g = gradient_spectral(field)
    return g.max_norm()
