"""Approximate translation vector on the torus from Fourier phases.

With two independent modes k1, k2 (rows of the integer matrix K) and
b_j = arg w*_hat(k_j) - arg w_hat(t, k_j), the translation p solves
K p = b on the torus. Its time derivative follows from the mode equation
d/dt w_hat(k) = -i k . F[u w](k).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core.grid import (TORUS, ScalarField2D, VectorField2D, fourier_coefficient,
                        fourier_coefficient_from_hat, rfft2)
from .errors import AliasingError, ConfigError, TieError, TrackerDegeneracyError
from .steady import lattice_solutions, nonzero_independent_modes

TRACKER_CSV_COLUMNS = ["t", "p1", "p2", "p1_lift", "p2_lift", "pdot1", "pdot2",
                       "amp_k1", "amp_k2", "l2_drift"]


def wrap(a):
    """Map angles into [-pi, pi)."""
    return (np.asarray(a, dtype=float) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class ModePair:
    k1: tuple
    k2: tuple
    ref_coef: tuple  # continuous coefficients of w* at k1, k2

    @property
    def K(self) -> np.ndarray:
        return np.array([self.k1, self.k2], dtype=np.int64)

    @property
    def Kinv(self) -> np.ndarray:
        return np.linalg.inv(self.K.astype(float))

    @property
    def ref_phase(self) -> np.ndarray:
        return np.angle(np.array(self.ref_coef))

    @property
    def ref_amp(self) -> np.ndarray:
        return np.abs(np.array(self.ref_coef))


def select_modes(omega_star: ScalarField2D, floor: float | None = None) -> ModePair:
    k1, k2 = nonzero_independent_modes(omega_star, floor)
    return ModePair(k1, k2, (fourier_coefficient(omega_star, k1),
                             fourier_coefficient(omega_star, k2)))


def build_b(coefs, modes: ModePair) -> np.ndarray:
    """Phase vector b in [-pi, pi)^2 from the current coefficients at (k1, k2)."""
    c = np.asarray(coefs, dtype=complex)
    floor = 0.5 * modes.ref_amp
    if np.any(np.abs(c) < floor):
        raise TrackerDegeneracyError(
            f"tracked amplitudes {np.abs(c)} fell below half their reference {modes.ref_amp}")
    return wrap(modes.ref_phase - np.angle(c))


@dataclass(frozen=True)
class TorusTrackerState:
    modes: ModePair
    p: np.ndarray
    p_lift: np.ndarray
    b_lift: np.ndarray
    b: np.ndarray
    pdot: np.ndarray = field(default_factory=lambda: np.zeros(2))
    amps: tuple = (np.nan, np.nan)
    tie: bool = False


def _shift_distance_sq(hat0, hat_star, domain, p) -> float:
    """||w0 - w*(. - p)||_L2^2 by Parseval on rfft2 arrays."""
    from .core.grid import wavenumbers
    k1, k2 = wavenumbers(domain)
    diff = hat0 - hat_star * np.exp(-1j * (k1 * p[0] + k2 * p[1]))
    w = np.full(diff.shape[1], 2.0)
    w[0] = 1.0
    if domain.ny % 2 == 0:
        w[-1] = 1.0
    n = domain.nx * domain.ny
    return float(np.sum(np.abs(diff) ** 2 * w[None, :]) * domain.cell_area / n)


def l2_drift(omega: ScalarField2D, omega_star: ScalarField2D, p) -> float:
    return float(np.sqrt(_shift_distance_sq(rfft2(omega.values), rfft2(omega_star.values),
                                            omega.domain, p)))


def init_p(omega0: ScalarField2D, omega_star: ScalarField2D, modes: ModePair | None = None,
           on_tie: str = "raise", tie_tol: float = 1e-12) -> TorusTrackerState:
    """Initial translation: the L2-closest of the |det K| phase-consistent candidates."""
    if omega0.domain.kind != TORUS or omega0.domain != omega_star.domain:
        raise ConfigError("init_p needs two fields on the same torus grid")
    if modes is None:
        modes = select_modes(omega_star)
    hat0 = rfft2(omega0.values)
    hat_s = rfft2(omega_star.values)
    d = omega0.domain
    coefs = [fourier_coefficient_from_hat(hat0, d, k) for k in (modes.k1, modes.k2)]
    b = build_b(coefs, modes)
    base = modes.Kinv @ b
    cands = [wrap(base + s) for s in lattice_solutions(modes.K)]
    dist = np.array([np.sqrt(_shift_distance_sq(hat0, hat_s, d, p)) for p in cands])
    order = np.argsort(dist, kind="stable")
    tie = len(cands) > 1 and dist[order[1]] - dist[order[0]] <= tie_tol
    if tie and on_tie == "raise":
        raise TieError("two candidate translations have the same L2 error")
    p = cands[order[0]]
    # b_lift chosen so that K p_lift = b_lift exactly
    return TorusTrackerState(modes, p, p.copy(), modes.K @ p, b, np.zeros(2),
                             tuple(np.abs(coefs)), bool(tie))


def update_p(state: TorusTrackerState, b_new, max_increment: float = np.pi) -> TorusTrackerState:
    """Unwrap b continuously and refresh p_lift = K^-1 b_lift, p = p_lift mod 2pi."""
    b_new = wrap(b_new)
    inc = wrap(b_new - state.b_lift)
    if np.any(np.abs(inc) >= max_increment):
        raise AliasingError(f"phase increment {inc} too large; reduce the time step")
    b_lift = state.b_lift + inc
    p_lift = state.modes.Kinv @ b_lift
    return replace(state, p=wrap(p_lift), p_lift=p_lift, b_lift=b_lift, b=b_new)


def mode_rhs(omega: ScalarField2D, u: VectorField2D, k) -> complex:
    """d/dt of the continuous coefficient at k: -i k . F[u w](k).

    The product is formed on the grid without a prefilter. For retained k
    and a state band-limited to the two-thirds band this agrees with the
    time stepper's right-hand side to roundoff; the time loop itself reads
    the stepper's right-hand side directly.
    """
    d = omega.domain
    m1 = (k[0] * d.length[0] / (2 * np.pi), k[1] * d.length[1] / (2 * np.pi))
    if max(abs(m1[0]) / d.nx, abs(m1[1]) / d.ny) > 1 / 3:
        raise ConfigError(f"mode {k} lies outside the retained two-thirds band")
    w = omega.values
    f1 = fourier_coefficient_from_hat(rfft2(u.u1.values * w), d, k)
    f2 = fourier_coefficient_from_hat(rfft2(u.u2.values * w), d, k)
    return complex(-1j * (k[0] * f1 + k[1] * f2))


def p_dot(state: TorusTrackerState, coefs, rhs) -> np.ndarray:
    """pdot = -K^-1 Im(rhs_j / coef_j)."""
    c = np.asarray(coefs, dtype=complex)
    build_b(c, state.modes)  # amplitude floor check
    r = np.asarray(rhs, dtype=complex)
    return -state.modes.Kinv @ np.imag(r / c)


class TorusTracker:
    """Stateful wrapper used by the time loop.

    ``observe`` takes the spectral state and the right-hand side the stepper
    already computed, so tracking costs O(1) per step and the reported
    pdot is the exact derivative of the discrete phases.
    """

    def __init__(self, omega0: ScalarField2D, omega_star: ScalarField2D,
                 modes: ModePair | None = None, on_tie: str = "raise"):
        self.domain = omega0.domain
        self.omega_star_hat = rfft2(omega_star.values)
        self.state = init_p(omega0, omega_star, modes, on_tie)

    def _coefs(self, hat):
        m = self.state.modes
        return [fourier_coefficient_from_hat(hat, self.domain, k) for k in (m.k1, m.k2)]

    def observe(self, w_hat, rhs_hat=None) -> TorusTrackerState:
        coefs = self._coefs(w_hat)
        b = build_b(coefs, self.state.modes)
        st = update_p(self.state, b)
        pd = st.pdot
        if rhs_hat is not None:
            pd = p_dot(st, coefs, self._coefs(rhs_hat))
        self.state = replace(st, pdot=pd, amps=tuple(np.abs(coefs)))
        return self.state

    def drift(self, w_hat) -> float:
        return float(np.sqrt(_shift_distance_sq(w_hat, self.omega_star_hat, self.domain,
                                                self.state.p)))

    def csv_row(self, t: float, w_hat) -> dict:
        s = self.state
        return {"t": t, "p1": s.p[0], "p2": s.p[1], "p1_lift": s.p_lift[0],
                "p2_lift": s.p_lift[1], "pdot1": s.pdot[0], "pdot2": s.pdot[1],
                "amp_k1": s.amps[0], "amp_k2": s.amps[1], "l2_drift": self.drift(w_hat)}
