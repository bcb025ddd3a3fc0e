"""Acceptance suite: one test per criterion, thresholds taken literally.

Each test records a PASS/FAIL line that the terminal summary prints in
criterion order. Simulation artifacts land in run_out/acceptance/<name>.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.special

from vortgrowth.bessel import bessel_zero_cl, j1
from vortgrowth.config import load_config
from vortgrowth.core import DomainSpec, ScalarField2D, biot_savart_image_sum
from vortgrowth.core.grid import irfft2, rfft2, wavenumbers
from vortgrowth.errors import RegimeLossError
from vortgrowth.flux import build_probe
from vortgrowth.io import read_csv
from vortgrowth.lamb import (lamb_constants, lamb_field, lamb_saddle_hessian,
                             lamb_stream_comoving, lamb_vorticity)
from vortgrowth.runner import run_simulation
from vortgrowth.seeds import (PlaneSeedSpec, TorusSeedSpec, admit_initial_data,
                              build_plane_seed, build_torus_seed)
from vortgrowth.steady import _Trig, lattice_solutions
from vortgrowth.tracker_plane import PlaneTracker, eval_H, solve_p

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
RUNS = ROOT / "run_out" / "acceptance"


def run_config(name, out_name=None, quick=False):
    cfg = load_config(CONFIGS / f"{name}.cfg")
    if quick:
        cfg = cfg.quick()
    rep = run_simulation(cfg, RUNS / (out_name or name))
    return rep, rep.values["wall_seconds"]


def conclude(criterion, number, checks, detail):
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    criterion(number, ok, detail + (f"  failed: {', '.join(failed)}" if failed else ""))
    assert ok, f"criterion {number}: {failed} ({detail})"


# ------------------------------------------------------------------ 1


def bisect_j1_zero(lo=3.0, hi=4.5):
    flo = scipy.special.j1(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = scipy.special.j1(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_c01_bessel_constants(criterion):
    t0 = time.perf_counter()
    c, j0c = bessel_zero_cl()
    wall = time.perf_counter() - t0
    oracle = bisect_j1_zero()
    checks = {"c_L_vs_bisection": abs(c - oracle) <= 1e-12,
              "c_L_value": abs(c - 3.8317059702075123) <= 1e-12,
              "J1_residual": abs(float(j1(c))) <= 1e-12,
              "J0_range": -0.41 < j0c < -0.40,
              "runtime": wall < 1.0}
    conclude(criterion, 1, checks,
             f"c_L={c:.16f} |c_L-bisect|={abs(c - oracle):.1e} J0={j0c:.6f} {wall:.3f}s")


# ------------------------------------------------------------------ 2


def fd_hessian(f, x0, h=1e-4):
    a, b = x0
    H = np.zeros((2, 2))
    H[0, 0] = (f(a + h, b) - 2 * f(a, b) + f(a - h, b)) / h ** 2
    H[1, 1] = (f(a, b + h) - 2 * f(a, b) + f(a, b - h)) / h ** 2
    H[0, 1] = H[1, 0] = (f(a + h, b + h) - f(a + h, b - h) - f(a - h, b + h)
                         + f(a - h, b - h)) / (4 * h * h)
    return H


def test_c02_saddle_hessians(criterion):
    t0 = time.perf_counter()
    f = lambda a, b: float(lamb_stream_comoving(a, b))  # noqa: E731
    errs = {}
    for x1, expect in ((-1.0, [[0, 2], [2, 0]]), (1.0, [[0, -2], [-2, 0]])):
        H = fd_hessian(f, (x1, 0.0))
        errs[x1] = float(np.max(np.abs(H - np.array(expect))))
        assert np.array_equal(lamb_saddle_hessian(int(x1)), np.array(expect, dtype=float))
    wall = time.perf_counter() - t0
    checks = {"hessian_-1": errs[-1.0] <= 1e-6, "hessian_+1": errs[1.0] <= 1e-6,
              "runtime": wall < 1.0}
    conclude(criterion, 2, checks,
             f"FD error at (-1,0) {errs[-1.0]:.1e}, at (1,0) {errs[1.0]:.1e}, {wall:.3f}s")


# ------------------------------------------------------------------ 3


def test_c03_steady_state(criterion):
    rep, wall = run_config("steady_cosine")
    v = rep.values
    checks = {"status": rep.status == "ok",
              "linf": v.get("linf_change_from_initial", np.inf) <= 1e-6,
              "l2_drift": v.get("l2_relative_change", np.inf) <= 1e-6,
              "runtime": wall < 120}
    conclude(criterion, 3, checks,
             f"|w(5)-w*|_inf={v.get('linf_change_from_initial', np.nan):.2e} "
             f"L2 drift={v.get('l2_relative_change', np.nan):.2e} {wall:.1f}s")


# ------------------------------------------------------------------ 4


def random_band_limited(rng, n=64, kmax=6):
    d = DomainSpec.torus(n)
    X1, X2 = d.mesh()
    w = np.zeros(d.shape)
    for k1 in range(-kmax, kmax + 1):
        for k2 in range(0, kmax + 1):
            if k2 == 0 and k1 <= 0:
                continue
            a, b = rng.standard_normal(2) / (1 + k1 * k1 + k2 * k2)
            w += a * np.cos(k1 * X1 + k2 * X2) + b * np.sin(k1 * X1 + k2 * X2)
    return ScalarField2D(d, w)


def fft_velocity_at(omega, pts):
    """Spectral inversion evaluated exactly at off-grid points via the stream function."""
    d = omega.domain
    k1, k2 = wavenumbers(d)
    k2sum = k1 ** 2 + k2 ** 2
    k2sum[0, 0] = 1.0
    phi_hat = -rfft2(omega.values) / k2sum
    phi_hat[0, 0] = 0.0
    trig = _Trig(omega.with_values(irfft2(phi_hat, d.shape)))
    out = []
    for x in pts:
        g, _ = trig.derivs(x)
        out.append((-g[1], g[0]))
    return np.array(out)


def test_c04_biot_savart_cross_validation(criterion):
    rng = np.random.default_rng(20240604)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(3):
        w = random_band_limited(rng)
        pts = rng.uniform(-np.pi, np.pi, size=(10, 2))
        a = fft_velocity_at(w, pts)
        b = biot_savart_image_sum(w, pts, m_max=20)
        worst = max(worst, float(np.max(np.abs(a - b))))
    wall = time.perf_counter() - t0
    checks = {"agreement": worst <= 1e-4, "runtime": wall < 30}
    conclude(criterion, 4, checks, f"max |u_fft - u_images| = {worst:.2e} {wall:.1f}s")


# ------------------------------------------------------------------ 5


def test_c05_lamb_traveling_wave(criterion):
    rep, wall = run_config("lamb")
    v = rep.values
    dev = v.get("max_rel_l2_dev", np.inf)
    speed = v.get("centroid_speed", np.nan)
    checks = {"status": rep.status == "ok", "l2_deviation": dev <= 0.05,
              "centroid_speed": abs(speed - 1.0) <= 0.02, "runtime": wall < 600}
    conclude(criterion, 5, checks,
             f"max rel L2 dev={dev:.2e} centroid speed={speed:.5f} {wall:.1f}s")


# ------------------------------------------------------------------ 6


def brute_force_branches(K, M=24):
    K = np.asarray(K)
    count = 0
    for i in range(M):
        for j in range(M):
            v = K @ np.array([i, j]) / M
            count += bool(np.all(np.abs(v - np.rint(v)) < 1e-12))
    return count


def test_c06_torus_tracker(criterion):
    rep, wall = run_config("shifted_cosine")
    tr = read_csv(RUNS / "shifted_cosine" / "tracker.csv")
    p_err = float(np.max(np.hypot(tr["p1"] - 0.3, tr["p2"] + 0.2)))
    pdot = float(np.max(np.hypot(tr["pdot1"], tr["pdot2"])))
    counts = {}
    for name, K in (("I", np.eye(2, dtype=int)), ("diag21", np.diag([2, 1])),
                    ("hadamard", np.array([[1, 1], [1, -1]]))):
        det = abs(round(np.linalg.det(K)))
        counts[name] = (len(lattice_solutions(K)), brute_force_branches(K), det)
    checks = {"status": rep.status == "ok", "p": p_err <= 1e-6, "pdot": pdot <= 1e-6,
              "t_final": abs(rep.t_final - 5.0) < 1e-9,
              "branches": all(a == b == c for a, b, c in counts.values()),
              "runtime": wall < 300}
    conclude(criterion, 6, checks,
             f"max|p-(0.3,-0.2)|={p_err:.1e} max|pdot|={pdot:.1e} "
             f"|S|={[c[0] for c in counts.values()]} {wall:.1f}s")


# ------------------------------------------------------------------ 7


def test_c07_plane_tracker(criterion):
    t0 = time.perf_counter()
    m = lamb_constants().m_L
    d = DomainSpec.free(512, 6.0)
    shifted = lamb_field(d, center=(0.5, 0.0), cell_average=True)
    p = solve_p(shifted, 0.0).p
    base = lamb_field(d, cell_average=True)
    lin = max(abs(eval_H(base, q)[0] + m * q) for q in (-0.8, -0.3, 0.0, 0.3, 0.8))
    d2 = DomainSpec.free(512, 12.0)
    X1, X2 = d2.mesh()
    double = ScalarField2D(d2, lamb_vorticity(X1 - 5.0, X2) + lamb_vorticity(X1 + 5.0, X2))
    try:
        solve_p(double, 0.0)
        raised = False
    except RegimeLossError:
        raised = True
    wall = time.perf_counter() - t0
    checks = {"p": abs(p - 0.5) <= 1e-6, "H_linear": lin <= 1e-6 * m,
              "double_dipole_regime_loss": raised, "runtime": wall < 60}
    conclude(criterion, 7, checks,
             f"p={p:.9f} max|H+m p|={lin:.1e} (tol {1e-6 * m:.1e}) "
             f"regime loss raised={raised} {wall:.1f}s")


# ------------------------------------------------------------------ 8


@pytest.mark.long
def test_c08_flux_persistence(criterion):
    rep, wall = run_config("flux_torus")
    v = rep.values
    checks = {"status": rep.status == "ok", "checked": v.get("flux_checks", 0) > 0,
              "floors": v.get("flux_failures", 1) == 0, "runtime": wall < 1800}
    conclude(criterion, 8, checks,
             f"{v.get('flux_checks')} checks, {v.get('flux_failures')} below c0/2, "
             f"min margin {v.get('flux_min_relative_margin')}, {wall:.0f}s")


# ------------------------------------------------------------------ 9


@pytest.mark.long
def test_c09_growth_quick(criterion):
    rep, wall = run_config("growth_torus", "growth_torus_quick", quick=True)
    v = rep.values
    ratio = v.get("growth_ratio", 0.0)
    checks = {"status": rep.status == "ok", "growth_2x": ratio >= 2.0, "runtime": wall < 600}
    conclude(criterion, 9, checks,
             f"[quick 512^2 T=10] growth {ratio:.3f}x resolved throughout="
             f"{v.get('resolved_throughout')} {wall:.0f}s")


@pytest.mark.long
def test_c09_growth_full(criterion):
    rep, wall = run_config("growth_torus")
    v = rep.values
    ratio = v.get("growth_ratio", 0.0)
    i1 = v.get("inv_increment_first_half", np.nan)
    i2 = v.get("inv_increment_second_half", np.nan)
    checks = {"status": rep.status == "ok", "growth_3x": ratio >= 3.0,
              "resolved": bool(v.get("resolved_throughout")),
              "increments": i2 <= 0.7 * i1, "runtime": wall <= 3600}
    conclude(criterion, 9, checks,
             f"[full 1024^2 T=20] growth {ratio:.3f}x resolved throughout="
             f"{v.get('resolved_throughout')} (first unresolved t={v.get('first_unresolved_t')}) "
             f"increments {i1:.4f} -> {i2:.4f} (ratio {i2 / i1:.3f}) {wall:.0f}s")


# ------------------------------------------------------------------ 10


def test_c10_appendix_oracle(criterion):
    rep, wall = run_config("oracle")
    v = rep.values
    integral = v.get("inv_integral", np.nan)
    checks = {"status": rep.status == "ok",
              "sup_error_t1": (v.get("rho_sup_err_t1") or np.inf) <= 1e-3,
              "integral": abs(integral - 1.0) <= 1e-2,
              "bound": v.get("bound") == 120 and integral <= 120,
              "mass_monotone": bool(v.get("mass_monotone")),
              "divergence_inequality": bool(v.get("divergence_inequality")),
              "runtime": wall < 300}
    conclude(criterion, 10, checks,
             f"rho err(1)={v.get('rho_sup_err_t1'):.1e} int={integral:.5f} "
             f"bound={v.get('bound')} monotone={v.get('mass_monotone')} "
             f"div ineq={v.get('divergence_inequality')} {wall:.0f}s")


# ------------------------------------------------------------------ 11


def test_c11_seed_admissibility(criterion):
    t0 = time.perf_counter()
    probe = build_probe(np.diag([-1.0, 1.0]), (math.pi, 0.0), 0.08)
    tseed = build_torus_seed(TorusSeedSpec(eps_target=0.3), probe, DomainSpec.torus(512))
    tv = admit_initial_data(tseed.field, tseed)
    pseed = build_plane_seed(PlaneSeedSpec(eps_target=0.5, eta=0.1), DomainSpec.free(512, 4.0))
    pv = admit_initial_data(pseed.field, pseed)
    ref = lamb_field(pseed.field.domain, cell_average=True)
    p0 = PlaneTracker(pseed.field, ref).state.p
    wall = time.perf_counter() - t0
    checks = {"torus": tv.passed, "plane": pv.passed, "p0": abs(p0) < 0.1, "runtime": wall < 60}
    conclude(criterion, 11, checks,
             f"torus violations {tv.failures} plane violations {pv.failures} "
             f"p(0)={p0:.4f} {wall:.1f}s")


# ------------------------------------------------------------------ 12


def test_c12_reproducibility(criterion):
    a, _ = run_config("flux_torus", "repro_a", quick=True)
    b, _ = run_config("flux_torus", "repro_b", quick=True)
    names = sorted(p.name for p in (RUNS / "repro_a").glob("*.csv"))
    same = {n: (RUNS / "repro_a" / n).read_bytes() == (RUNS / "repro_b" / n).read_bytes()
            for n in names}
    checks = {"status": a.status == b.status == "ok", "csvs_present": len(names) >= 2,
              "identical": all(same.values())}
    conclude(criterion, 12, checks, f"{len(names)} CSV files compared, identical={same}")
