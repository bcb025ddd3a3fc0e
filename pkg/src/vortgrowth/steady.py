"""Cosine steady states on the torus and saddle detection for stream functions."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core.grid import TORUS, DomainSpec, ScalarField2D, rfft2
from .errors import ConfigError, DegeneracyError, NoSaddleError


@dataclass(frozen=True)
class CosineState:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError("cosine amplitudes must be positive")

    @property
    def sup_norm(self) -> float:
        return self.alpha + self.beta


def eval_cosine(state: CosineState, x1, x2):
    """(w*, Phi*, (u1*, u2*)) with u* = grad-perp Phi* = (-beta sin x2, alpha sin x1)."""
    a, b = state.alpha, state.beta
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    w = a * np.cos(x1) + b * np.cos(x2)
    phi = -w
    u = (-b * np.sin(x2) + 0 * x1, a * np.sin(x1) + 0 * x2)
    return w, phi, u


def cosine_field(state: CosineState, domain: DomainSpec, shift=(0.0, 0.0)) -> ScalarField2D:
    """w*(x - shift) sampled on a torus grid."""
    if domain.kind != TORUS:
        raise ConfigError("cosine states live on the torus")
    X1, X2 = domain.mesh()
    w, _, _ = eval_cosine(state, X1 - shift[0], X2 - shift[1])
    return ScalarField2D(domain, w)


@dataclass(frozen=True)
class SaddleReport:
    x0: tuple
    hessian: np.ndarray
    lam_plus: float
    lam_minus: float
    resolved: bool = True

    def csv_row(self) -> dict:
        h = self.hessian
        return {"x0_1": self.x0[0], "x0_2": self.x0[1], "h11": h[0, 0], "h12": h[0, 1],
                "h22": h[1, 1], "lam_plus": self.lam_plus, "lam_minus": self.lam_minus}


SADDLE_CSV_COLUMNS = ["x0_1", "x0_2", "h11", "h12", "h22", "lam_plus", "lam_minus"]


def saddle_from_hessian(x0, hessian, resolved: bool = True) -> SaddleReport:
    """Eigenvalues +-sqrt(h12^2 - h11 h22) of the linearised flow matrix."""
    h = np.asarray(hessian, dtype=float)
    disc = h[0, 1] ** 2 - h[0, 0] * h[1, 1]
    if disc <= 0:
        raise DegeneracyError("Hessian determinant is not negative; not a saddle")
    lam = math.sqrt(disc)
    return SaddleReport((float(x0[0]), float(x0[1])), h, lam, -lam, resolved)


def cosine_saddles(state: CosineState) -> list:
    """The saddles (pi, 0) and (0, pi) of Phi* = -alpha cos x1 - beta cos x2."""
    a, b = state.alpha, state.beta
    return [saddle_from_hessian((math.pi, 0.0), np.diag([-a, b])),
            saddle_from_hessian((0.0, math.pi), np.diag([a, -b]))]


class _Trig:
    """Exact evaluation of a band-limited torus field and its derivatives."""

    def __init__(self, field: ScalarField2D, rtol: float = 1e-14):
        d = field.domain
        n1, n2 = d.shape
        c = np.fft.fft2(field.values) / (n1 * n2)
        m1 = np.rint(np.fft.fftfreq(n1) * n1)
        m2 = np.rint(np.fft.fftfreq(n2) * n2)
        M1, M2 = np.meshgrid(m1, m2, indexing="ij")
        c = c * np.exp(-1j * (M1 * d.origin[0] + M2 * d.origin[1]))
        keep = (np.abs(c) > rtol * np.abs(c).max()) & (np.abs(M1) < n1 / 2) & (np.abs(M2) < n2 / 2)
        self.m1, self.m2, self.c = M1[keep], M2[keep], c[keep]

    def derivs(self, x):
        e = self.c * np.exp(1j * (self.m1 * x[0] + self.m2 * x[1]))
        g = np.array([(1j * self.m1 * e).sum().real, (1j * self.m2 * e).sum().real])
        h11 = (-self.m1 ** 2 * e).sum().real
        h12 = (-self.m1 * self.m2 * e).sum().real
        h22 = (-self.m2 ** 2 * e).sum().real
        return g, np.array([[h11, h12], [h12, h22]])


def find_saddles(phi: ScalarField2D, tol_grad: float = 1e-10, max_iter: int = 50,
                 region=None) -> list:
    """Saddle points of a torus stream function.

    Candidate cells are those where both gradient components change sign;
    each candidate is polished by Newton's method on the trigonometric
    interpolant. ``region`` optionally restricts the search to a box
    ((x1_lo, x1_hi), (x2_lo, x2_hi)). Candidates whose Newton iteration does
    not converge are reported with ``resolved=False``.
    """
    d = phi.domain
    if d.kind != TORUS:
        raise ConfigError("find_saddles expects a torus field")
    hat = rfft2(phi.values)
    from .core.grid import derivative_symbols, irfft2
    s1, s2 = derivative_symbols(d)
    g1 = irfft2(s1 * hat, d.shape)
    g2 = irfft2(s2 * hat, d.shape)

    def changes(g):
        corners = [g, np.roll(g, -1, 0), np.roll(g, -1, 1), np.roll(np.roll(g, -1, 0), -1, 1)]
        lo = np.minimum.reduce(corners)
        hi = np.maximum.reduce(corners)
        return (lo <= 0) & (hi >= 0)

    cand = np.argwhere(changes(g1) & changes(g2))
    trig = _Trig(phi)
    x1, x2 = d.x1(), d.x2()
    found = []
    for i, j in cand:
        x = np.array([x1[i] + d.dx / 2, x2[j] + d.dy / 2])
        if region is not None:
            (a1, b1), (a2, b2) = region
            if not (a1 <= x[0] <= b1 and a2 <= x[1] <= b2):
                continue
        ok = False
        for _ in range(max_iter):
            g, H = trig.derivs(x)
            if np.linalg.norm(g) <= tol_grad:
                ok = True
                break
            # least squares keeps degenerate (line) critical sets from stalling
            x = x - np.linalg.lstsq(H, g, rcond=1e-12)[0]
        g, H = trig.derivs(x)
        ok = ok or np.linalg.norm(g) <= tol_grad
        if ok and np.linalg.det(H) >= -1e-12 * max(1.0, np.abs(H).max() ** 2):
            continue
        x = (x + np.pi) % (2 * np.pi) - np.pi
        if any(_torus_dist(x, f.x0) < 1e-6 for f in found):
            continue
        if ok:
            found.append(saddle_from_hessian(x, H))
        else:
            found.append(SaddleReport((float(x[0]), float(x[1])), H, math.nan, math.nan, False))
    return found


def _torus_dist(a, b) -> float:
    d = (np.asarray(a) - np.asarray(b) + np.pi) % (2 * np.pi) - np.pi
    return float(np.hypot(*d))


# ------------------------------------------------------------------ modes


def significant_modes(field: ScalarField2D, floor: float | None = None):
    """Integer modes (one per +-k pair) with continuous coefficient >= floor.

    Returns (modes, amplitudes, coefficients) sorted by decreasing
    amplitude, then |k|^2, then k1 descending and k2 descending.
    """
    d = field.domain
    if d.kind != TORUS:
        raise ConfigError("mode analysis needs a torus field")
    hat = rfft2(field.values)
    amp = np.abs(hat) * d.cell_area
    if floor is None:
        floor = 1e-8 * amp.max()
    m1 = np.rint(np.fft.fftfreq(d.nx) * d.nx).astype(int)
    idx = np.argwhere(amp >= floor)
    rows = []
    for i, j in idx:
        k1, k2 = int(m1[i]), int(j)
        if k1 == 0 and k2 == 0:
            continue
        if abs(k1) == d.nx // 2 or k2 == d.ny // 2:
            continue
        # canonical representative of {k, -k}: k2 > 0, or k2 == 0 and k1 > 0
        if k2 == 0 and k1 < 0:
            continue
        rows.append((k1, k2))
    coefs = []
    from .core.grid import fourier_coefficient_from_hat
    for k in rows:
        coefs.append(fourier_coefficient_from_hat(hat, d, k))
    amps = np.abs(np.array(coefs)) if coefs else np.zeros(0)
    order = sorted(range(len(rows)), key=lambda n: (-_round_amp(amps[n]),
                                                   rows[n][0] ** 2 + rows[n][1] ** 2,
                                                   -rows[n][0], -rows[n][1]))
    return [rows[n] for n in order], amps[order] if len(rows) else amps, \
        [coefs[n] for n in order]


def _round_amp(a: float) -> float:
    # amplitudes equal to ~1e-10 relative count as ties
    if a == 0:
        return 0.0
    e = math.floor(math.log10(a))
    return round(a, 9 - e)


def nonzero_independent_modes(field: ScalarField2D, floor: float | None = None,
                              max_candidates: int = 64) -> tuple:
    """Two independent modes maximising the smaller amplitude.

    Ties are broken by smaller |k1|^2 + |k2|^2, then by the candidate order
    of :func:`significant_modes`.
    """
    modes, amps, _ = significant_modes(field, floor)
    modes = modes[:max_candidates]
    best = None
    for a, b in itertools.combinations(range(len(modes)), 2):
        ka, kb = modes[a], modes[b]
        if ka[0] * kb[1] - ka[1] * kb[0] == 0:
            continue
        key = (-_round_amp(min(amps[a], amps[b])),
               ka[0] ** 2 + ka[1] ** 2 + kb[0] ** 2 + kb[1] ** 2, a, b)
        if best is None or key < best[0]:
            best = (key, ka, kb)
    if best is None:
        raise DegeneracyError("all significant modes are collinear")
    return best[1], best[2]


def lattice_solutions(K) -> np.ndarray:
    """All s in [0, 2pi)^2 with K s in (2 pi Z)^2, lattice order.

    With d = det K and adj K the adjugate, s = 2 pi (adj K m mod |d|) / |d|
    for integer m; m ranging over [0, |d|)^2 reaches every residue class.
    """
    K = np.asarray(K, dtype=np.int64)
    det = int(round(np.linalg.det(K)))
    if det == 0:
        raise DegeneracyError("mode matrix is singular")
    n = abs(det)
    adj = np.array([[K[1, 1], -K[0, 1]], [-K[1, 0], K[0, 0]]], dtype=np.int64)
    if det < 0:
        adj = -adj
    seen = []
    for a in range(n):
        for b in range(n):
            r = tuple(int(v) for v in (adj @ np.array([a, b])) % n)
            if r not in seen:
                seen.append(r)
    seen.sort()
    return 2 * np.pi * np.array(seen, dtype=float) / n


def check_minimal_period(field: ScalarField2D, floor: float | None = None) -> bool:
    """True iff no nonzero torus shift leaves every significant mode invariant."""
    modes, _, _ = significant_modes(field, floor)
    try:
        k1, k2 = nonzero_independent_modes(field, floor)
    except DegeneracyError:
        return False
    S = lattice_solutions(np.array([k1, k2]))
    M = np.array(modes, dtype=float)
    for s in S[1:]:
        phase = (M @ s) / (2 * np.pi)
        if np.all(np.abs(phase - np.rint(phase)) < 1e-9):
            return False
    return True
