"""Saddle probes, side fluxes, the cut-off tracer and gradient-growth bookkeeping.

A probe is the parallelogram D = {x0 + b1 q1 + b2 q2 : |b1|, |b2| < eta}
built from the linearisation A of the velocity at a saddle of the stream
function. The sides b1 = -eta (G1) and b1 = +eta (G3) carry outward flux,
b2 = +-eta carry inward flux.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core.grid import CHART, DomainSpec, ScalarField2D, gradient_spectral
from .core.semilagrangian import advect_semilagrangian, cubic_interpolate
from .errors import ConfigError, NoSaddleError, OrderingError

GROWTH_CSV_COLUMNS = ["t", "grad_max", "resolved", "inv_integral", "tlogt_ratio",
                      "flux_min_G1", "flux_min_G3", "flux_max_G2", "flux_max_G4",
                      "tracer_mass", "band_width"]


@dataclass(frozen=True)
class Side:
    start: np.ndarray
    end: np.ndarray
    normal: np.ndarray  # outer unit normal
    outward: bool  # True for G1, G3


@dataclass(frozen=True)
class SaddleProbe:
    x0: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    lam1: float
    lam2: float
    theta: float
    eta: float
    c0: float
    sides: tuple  # G1..G4, clockwise

    @property
    def Q(self) -> np.ndarray:
        return np.column_stack([self.q1, self.q2])

    @property
    def area(self) -> float:
        return 4 * self.eta ** 2 * np.sin(self.theta)

    def to_physical(self, b1, b2):
        return (self.x0[0] + b1 * self.q1[0] + b2 * self.q2[0],
                self.x0[1] + b1 * self.q1[1] + b2 * self.q2[1])

    def with_eta(self, eta: float) -> "SaddleProbe":
        return _assemble(self.x0, self.q1, self.q2, self.lam1, self.lam2, eta)


def linearisation(hessian) -> np.ndarray:
    """A = [[-H12, -H22], [H11, H12]]: the Jacobian of u = (-d2 Phi, d1 Phi)."""
    H = np.asarray(hessian, dtype=float)
    return np.array([[-H[0, 1], -H[1, 1]], [H[0, 0], H[0, 1]]])


def _unit(v):
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    # sign convention: first nonzero component positive
    lead = v[0] if abs(v[0]) > 1e-14 else v[1]
    return v if lead > 0 else -v


def _assemble(x0, q1, q2, lam1, lam2, eta) -> SaddleProbe:
    if not eta > 0:
        raise ConfigError("probe half-width must be positive")
    x0 = np.asarray(x0, dtype=float)
    cross = q1[0] * q2[1] - q1[1] * q2[0]
    sin_t = abs(cross)
    theta = float(np.arccos(np.clip(abs(q1 @ q2), 0.0, 1.0)))
    c0 = 0.5 * eta * sin_t * min(lam1, abs(lam2))
    n13 = q1 - (q1 @ q2) * q2
    n13 /= np.linalg.norm(n13)
    n24 = q2 - (q2 @ q1) * q1
    n24 /= np.linalg.norm(n24)

    def pt(b1, b2):
        return x0 + b1 * q1 + b2 * q2

    g1 = Side(pt(-eta, -eta), pt(-eta, eta), -n13, True)
    g3 = Side(pt(eta, eta), pt(eta, -eta), n13, True)
    top = Side(pt(-eta, eta), pt(eta, eta), n24, False)
    bot = Side(pt(eta, -eta), pt(-eta, -eta), -n24, False)
    # clockwise after G1 comes the side whose midpoint is reached by turning right
    sides = (g1, top, g3, bot) if cross > 0 else (g1, bot, g3, top)
    return SaddleProbe(x0, q1, q2, float(lam1), float(lam2), theta, float(eta), float(c0), sides)


def build_probe(hessian, x0, eta: float) -> SaddleProbe:
    """Probe at a saddle x0 of the stream function with Hessian ``hessian``."""
    H = np.asarray(hessian, dtype=float)
    if not np.linalg.det(H) < 0:
        raise NoSaddleError(f"Hessian determinant {np.linalg.det(H):.3e} is not negative")
    A = linearisation(H)
    lam, vec = np.linalg.eig(A)
    lam = np.real(lam)
    vec = np.real(vec)
    i1, i2 = (0, 1) if lam[0] > lam[1] else (1, 0)
    if not (lam[i1] > 0 > lam[i2]):
        raise NoSaddleError(f"linearisation eigenvalues {lam} are not of opposite sign")
    return _assemble(x0, _unit(vec[:, i1]), _unit(vec[:, i2]), lam[i1], lam[i2], eta)


def probe_from_field(phi: ScalarField2D, x0, eta: float) -> SaddleProbe:
    """Probe from the spectral Hessian of a periodic stream function at x0."""
    from .steady import _Trig
    _, _, H = _Trig(phi).derivs(np.asarray(x0, dtype=float))
    return build_probe(H, x0, eta)


def side_points(probe: SaddleProbe, i: int, n_samples: int = 400):
    """Midpoints of n equal pieces of side G_i (1-based); endpoints excluded."""
    s = probe.sides[i - 1]
    t = (np.arange(n_samples) + 0.5) / n_samples
    pts = s.start[None, :] + t[:, None] * (s.end - s.start)[None, :]
    return pts[:, 0], pts[:, 1], s.normal


def measure_flux(v, probe: SaddleProbe, i: int, n_samples: int = 400) -> tuple:
    """(min, max) of v . n over side G_i; ``v`` maps (x1, x2) arrays to (v1, v2)."""
    if n_samples < 100:
        raise ConfigError("need at least 100 samples per side")
    x1, x2, n = side_points(probe, i, n_samples)
    v1, v2 = v(x1, x2)
    f = np.asarray(v1) * n[0] + np.asarray(v2) * n[1]
    return float(f.min()), float(f.max())


@dataclass(frozen=True)
class FluxCheck:
    min_G1: float
    max_G2: float
    min_G3: float
    max_G4: float
    c0: float

    @property
    def ok(self) -> bool:
        h = 0.5 * self.c0
        return (self.min_G1 > h and self.min_G3 > h
                and self.max_G2 < -h and self.max_G4 < -h)


def check_condition(v, probe: SaddleProbe, n_samples: int = 400) -> FluxCheck:
    """Outward flux > c0/2 on G1, G3 and inward flux < -c0/2 on G2, G4."""
    f = [measure_flux(v, probe, i, n_samples) for i in (1, 2, 3, 4)]
    return FluxCheck(f[0][0], f[1][1], f[2][0], f[3][1], probe.c0)


# ---------------------------------------------------------------- cut-off f

F_SCALE = 273.375  # makes f(K + 1/3) = 1 and f(K + 2/3) = 2


def cutoff_f(s, K: float = 0.0):
    """C^2 bump on (K, K+1): f(K + x) = 273.375 x^4 (1 - x)^3."""
    x = np.asarray(s, dtype=float) - K
    inside = (x > 0) & (x < 1)
    xc = np.where(inside, x, 0.0)
    return np.where(inside, F_SCALE * xc ** 4 * (1 - xc) ** 3, 0.0)


def cutoff_f_prime(s, K: float = 0.0):
    x = np.asarray(s, dtype=float) - K
    inside = (x > 0) & (x < 1)
    xc = np.where(inside, x, 0.0)
    return np.where(inside, F_SCALE * xc ** 3 * (1 - xc) ** 2 * (4 - 7 * xc), 0.0)


# ------------------------------------------------------------------ tracer

def _trapezoid_weights(domain: DomainSpec) -> np.ndarray:
    w1 = np.full(domain.nx, domain.dx)
    w1[[0, -1]] *= 0.5
    w2 = np.full(domain.ny, domain.dy)
    w2[[0, -1]] *= 0.5
    return np.outer(w1, w2)


def band_width(mu: ScalarField2D, jac_len: float = 1.0, n_samples: int = 4096,
               lo: float = 1.0, hi: float = 2.0) -> float:
    """Length of {lo <= mu <= hi} on the side b1 = -h, from uniform samples."""
    d = mu.domain
    h = d.length[1] / 2
    b2 = -h + 2 * h * (np.arange(n_samples) + 0.5) / n_samples
    s1 = np.zeros(n_samples)
    s2 = (b2 - d.origin[1]) / d.dy
    vals = cubic_interpolate(mu.values, s1, s2)
    frac = np.count_nonzero((vals >= lo) & (vals <= hi)) / n_samples
    return float(frac * 2 * h * jac_len)


@dataclass(frozen=True)
class TracerState:
    mu: ScalarField2D
    mass: float
    band: float
    K: float
    jac: float = 1.0  # |det Q|: physical area per unit chart area
    monotone: bool = True


def tracer_mass(mu: ScalarField2D, jac: float = 1.0) -> float:
    return float(np.sum(_trapezoid_weights(mu.domain) * mu.values) * jac)


def init_tracer(rho0: ScalarField2D, K: float, region=None, jac: float = 1.0) -> TracerState:
    """mu0 = f_K(rho0), optionally times the indicator array ``region``."""
    if rho0.domain.kind != CHART:
        raise ConfigError("the tracer lives on a chart grid")
    vals = cutoff_f(rho0.values, K)
    if region is not None:
        vals = vals * np.asarray(region, dtype=float)
    mu = rho0.with_values(vals)
    return TracerState(mu, tracer_mass(mu, jac), band_width(mu), K, jac)


def evolve_tracer(state: TracerState, v, t: float, dt: float,
                  mass_rtol: float = 1e-10, m0: float | None = None) -> TracerState:
    """One semi-Lagrangian step with zero inflow; ``v`` is (b1, b2, time) -> chart velocity."""
    mu = advect_semilagrangian(state.mu, v, t, dt, inflow=0.0)
    return update_tracer(state, mu, mass_rtol, m0)


def update_tracer(state: TracerState, mu: ScalarField2D, mass_rtol: float = 1e-10,
                  m0: float | None = None) -> TracerState:
    """New state around an already advected ``mu``; flags any mass increase."""
    m = tracer_mass(mu, state.jac)
    ref = state.mass if m0 is None else m0
    mono = state.monotone and m <= state.mass + mass_rtol * abs(ref)
    return TracerState(mu, m, band_width(mu), state.K, state.jac, mono)


def chart_velocity(probe: SaddleProbe, v):
    """Pull a physical velocity sampler back to probe coordinates b = Q^-1 (x - x0)."""
    Qinv = np.linalg.inv(probe.Q)

    def w(b1, b2, time):
        x1, x2 = probe.to_physical(b1, b2)
        v1, v2 = v(x1, x2, time)
        return Qinv[0, 0] * v1 + Qinv[0, 1] * v2, Qinv[1, 0] * v1 + Qinv[1, 1] * v2

    return w


def grad_max_chart(f: ScalarField2D) -> float:
    return gradient_spectral(f).max_norm()


# ---------------------------------------------------------- growth series

@dataclass
class GrowthSeries:
    t: list = field(default_factory=list)
    grad: list = field(default_factory=list)
    resolved: list = field(default_factory=list)
    inv_integral: list = field(default_factory=list)
    tlogt_sup: list = field(default_factory=list)

    def increment(self, t0: float, t1: float) -> float:
        """Growth of the running integral between two sample times."""
        t = np.asarray(self.t)
        I = np.asarray(self.inv_integral)
        return float(np.interp(t1, t, I) - np.interp(t0, t, I))


def grad_growth_metrics(series: GrowthSeries, t: float, grad: float,
                        resolved: bool = True) -> GrowthSeries:
    """Append a sample; trapezoid update of int 1/grad, running sup of grad/(t log t)."""
    if series.t and not t > series.t[-1]:
        raise OrderingError(f"time {t} does not follow {series.t[-1]}")
    if series.t:
        dt = t - series.t[-1]
        inc = 0.5 * dt * (1.0 / series.grad[-1] + 1.0 / grad)
        series.inv_integral.append(series.inv_integral[-1] + inc)
    else:
        series.inv_integral.append(0.0)
    prev = series.tlogt_sup[-1] if series.tlogt_sup else float("nan")
    if t > np.e:
        r = grad / (t * np.log(t))
        prev = r if np.isnan(prev) else max(prev, r)
    series.tlogt_sup.append(prev)
    series.t.append(float(t))
    series.grad.append(float(grad))
    series.resolved.append(bool(resolved))
    return series
