"""Approximate translation p(t) for odd vorticity on the plane.

p solves H(t, p) = 0 where H(t, p) = int_{x2>0} w(t, x) g(x1 - p) dx and g
is an odd, bounded cutoff that is the identity on [-2, 2]. H is
non-increasing in p when w >= 0 on the upper half, so a bracketed Newton
iteration finds the root.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.grid import FREE, ScalarField2D, VectorField2D, irfft2, rfft2, wavenumbers
from .errors import ConfigError, InvariantViolation, RegimeLossError
from .lamb import lamb_constants

PLANE_CSV_COLUMNS = ["t", "p", "pdot", "H_residual", "dHdp", "l2_drift_comoving",
                     "regime_flag"]

ODD_TOL = 1e-8
NEGATIVITY_TOL = 1e-8


@dataclass(frozen=True)
class CutoffG:
    """g(s) = s on [0, 2], raised-cosine taper of width ``width``, then constant.

    With g'(s) = (1 + cos(pi (s - 2) / width)) / 2 on the taper the plateau
    is 2 + width / 2, so width 2 reaches 3 and width 1 reaches 2.5.
    """
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ConfigError("taper width must be positive")

    @property
    def r_g(self) -> float:
        return 2.0 + self.width

    @property
    def plateau(self) -> float:
        return 2.0 + 0.5 * self.width

    @property
    def sup(self) -> float:
        return self.plateau


def eval_g(s, g: CutoffG = CutoffG()):
    """Return (g(s), g'(s)); vectorised."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    w = g.width
    t = np.clip(a - 2.0, 0.0, w)
    taper_val = 2.0 + 0.5 * t + w / (2 * np.pi) * np.sin(np.pi * t / w)
    taper_der = 0.5 * (1.0 + np.cos(np.pi * t / w))
    val = np.where(a <= 2.0, a, taper_val)
    der = np.where(a <= 2.0, 1.0, taper_der)
    return np.sign(s) * val, der


def _upper(omega: ScalarField2D):
    d = omega.domain
    if d.kind != FREE:
        raise ConfigError("the plane tracker needs a free-space field")
    up = d.x2() > 0
    return omega.values[:, up], d.x1(), d.cell_area


def eval_H(omega: ScalarField2D, p: float, g: CutoffG = CutoffG()):
    """(H, dH/dp) by the midpoint rule over the upper half of the grid."""
    w, x1, dA = _upper(omega)
    gv, gd = eval_g(x1 - p, g)
    col = w.sum(axis=1) * dA  # mass per x1 column
    return float(col @ gv), float(-(col @ gd))


def oddness_defect(omega: ScalarField2D) -> float:
    """max |w(x1, x2) + w(x1, -x2)| / max |w| (the grid is symmetric in x2)."""
    v = omega.values
    m = np.max(np.abs(v))
    return float(np.max(np.abs(v + v[:, ::-1])) / m) if m > 0 else 0.0


def negativity(omega: ScalarField2D) -> float:
    """Negative mass on the upper half over the positive mass there."""
    w, _, dA = _upper(omega)
    pos = float(np.sum(np.clip(w, 0, None))) * dA
    neg = float(np.sum(np.clip(-w, 0, None))) * dA
    return neg / pos if pos > 0 else np.inf


@dataclass(frozen=True)
class PlaneTrackerState:
    p: float
    H_residual: float
    dHdp: float
    pdot: float = 0.0
    regime_ok: bool = True
    negativity: float = 0.0

    @property
    def regime_flag(self) -> int:
        return 0 if self.regime_ok else 1


def solve_p(omega: ScalarField2D, p_guess: float = 0.0, g: CutoffG = CutoffG(),
            m_ref: float | None = None, max_iter: int = 100) -> PlaneTrackerState:
    """Root of H(., p) on [p_guess - 1, p_guess + 1] by safeguarded Newton.

    Raises RegimeLossError when H has no strict sign change on the bracket.
    The returned state is flagged out of regime when the slope at the root
    is above -m_ref / 4 or the upper half carries negative mass.
    """
    if oddness_defect(omega) > ODD_TOL:
        raise InvariantViolation("vorticity is not odd in x2")
    neg = negativity(omega)
    if m_ref is None:
        m_ref = lamb_constants().m_L
    tol = 1e-12 * m_ref * g.sup
    a, b = p_guess - 1.0, p_guess + 1.0
    Ha, _ = eval_H(omega, a, g)
    Hb, _ = eval_H(omega, b, g)
    if not (Ha > tol and Hb < -tol):
        raise RegimeLossError(
            f"H has no sign change on [{a:g}, {b:g}] (H = {Ha:.3e}, {Hb:.3e})")
    p = p_guess
    H, dH = eval_H(omega, p, g)
    for _ in range(max_iter):
        if abs(H) <= tol:
            break
        if H > 0:
            a = p
        else:
            b = p
        step_ok = dH < 0
        q = p - H / dH if step_ok else 0.5 * (a + b)
        if not (a < q < b):
            q = 0.5 * (a + b)
        p = q
        H, dH = eval_H(omega, p, g)
        if b - a < 1e-15:
            break
    ok = dH <= -0.25 * m_ref and neg <= NEGATIVITY_TOL
    return PlaneTrackerState(p, H, dH, 0.0, bool(ok), neg)


@dataclass(frozen=True)
class PdotReport:
    pdot: float
    dHdt: float
    dHdp: float
    cancellation: float


def _lamb_cancellation(omega: ScalarField2D, p: float, g: CutoffG) -> float:
    """int w_L (u_L1 - 1) g'(x1) over the upper half with the closed-form velocity."""
    from .lamb import lamb_velocity_comoving, lamb_vorticity
    d = omega.domain
    X1, X2 = d.mesh()
    up = X2 > 0
    wl = lamb_vorticity(X1[up], X2[up])
    v1, _ = lamb_velocity_comoving(X1[up], X2[up])
    _, gd = eval_g(X1[up], g)
    return float(np.sum(wl * v1 * gd) * d.cell_area)


def p_dot_plane(omega: ScalarField2D, u: VectorField2D, p: float, g: CutoffG = CutoffG(),
                m_ref: float | None = None, cancellation: bool = False) -> PdotReport:
    """pdot = -dH/dt / dH/dp with dH/dt = int_{x2>0} w (u1 - 1) g'(x1 - p) dx.

    ``u`` is the fixed-frame Biot-Savart velocity of ``omega``.
    """
    if m_ref is None:
        m_ref = lamb_constants().m_L
    w, x1, dA = _upper(omega)
    up = omega.domain.x2() > 0
    u1 = u.u1.values[:, up]
    _, gd = eval_g(x1 - p, g)
    dHdt = float(np.sum(w * (u1 - 1.0) * gd[:, None]) * dA)
    dHdp = float(-np.sum(w.sum(axis=1) * gd) * dA)
    if not dHdp <= -0.25 * m_ref:
        raise RegimeLossError(f"slope dH/dp = {dHdp:.4g} above the floor -m/4")
    canc = _lamb_cancellation(omega, p, g) if cancellation else float("nan")
    return PdotReport(-dHdt / dHdp, dHdt, dHdp, canc)


def shift_x1(values: np.ndarray, domain, s: float) -> np.ndarray:
    """Spectral translation f(x1 - s, x2) of a compactly supported array."""
    k1, _ = wavenumbers(domain)
    return irfft2(rfft2(values) * np.exp(-1j * k1 * s), domain.shape)


def l2_drift_comoving(omega: ScalarField2D, p: float, reference: ScalarField2D) -> float:
    """|| w(. + p e1) - w_ref ||_L2 on the grid."""
    diff = shift_x1(omega.values, omega.domain, -p) - reference.values
    return float(np.sqrt(np.sum(diff * diff) * omega.domain.cell_area))


class PlaneTracker:
    """Chains solve_p from step to step and formats CSV rows."""

    def __init__(self, omega0: ScalarField2D, reference: ScalarField2D,
                 g: CutoffG = CutoffG(), p_guess: float = 0.0):
        self.g = g
        self.reference = reference
        self.m_ref = lamb_constants().m_L
        self.state = solve_p(omega0, p_guess, g, self.m_ref)

    def observe(self, omega: ScalarField2D, u: VectorField2D | None = None) -> PlaneTrackerState:
        st = solve_p(omega, self.state.p, self.g, self.m_ref)
        pd = 0.0
        if u is not None:
            pd = p_dot_plane(omega, u, st.p, self.g, self.m_ref).pdot
        self.state = PlaneTrackerState(st.p, st.H_residual, st.dHdp, pd, st.regime_ok,
                                       st.negativity)
        return self.state

    def csv_row(self, t: float, omega: ScalarField2D) -> dict:
        s = self.state
        return {"t": t, "p": s.p, "pdot": s.pdot, "H_residual": s.H_residual, "dHdp": s.dHdp,
                "l2_drift_comoving": l2_drift_comoving(omega, s.p, self.reference),
                "regime_flag": s.regime_flag}
