import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given
from hypothesis import strategies as st

from vortgrowth.core import DomainSpec, ScalarField2D
from vortgrowth.errors import ConfigError, InfeasibleSeedError, NoSaddleError, OrderingError
from vortgrowth.flux import (GrowthSeries, band_width, build_probe, check_condition, cutoff_f,
                             cutoff_f_prime, evolve_tracer, grad_growth_metrics, init_tracer,
                             linearisation, measure_flux, tracer_mass)
from vortgrowth.lamb import lamb_saddle_hessian, lamb_velocity_comoving
from vortgrowth.seeds import (PlaneSeedSpec, TorusSeedSpec, admit_initial_data, bump,
                              build_plane_seed, build_torus_seed, mollify, plateau,
                              segment_crossing_ok, smooth_step)
from vortgrowth.steady import CosineState, eval_cosine


def cosine_probe(eta=0.08, a=1.0, b=1.0):
    return build_probe(np.diag([-a, b]), (math.pi, 0.0), eta)


def cosine_velocity(a=1.0, b=1.0):
    def v(x1, x2):
        _, _, u = eval_cosine(CosineState(a, b), x1, x2)
        return u
    return v


def test_linearisation_is_velocity_jacobian():
    H = np.array([[0.3, -0.7], [-0.7, -1.1]])
    A = linearisation(H)
    # u = (-d2 Phi, d1 Phi) for Phi = x.H x / 2
    assert np.allclose(A, [[-H[1, 0], -H[1, 1]], [H[0, 0], H[0, 1]]])


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.01, 0.2))
def test_cosine_probe_geometry(a, b, eta):
    p = cosine_probe(eta, a, b)
    lam = math.sqrt(a * b)
    assert p.lam1 == pytest.approx(lam) and p.lam2 == pytest.approx(-lam)
    assert p.area == pytest.approx(4 * eta ** 2 * math.sin(p.theta))
    assert p.c0 == pytest.approx(0.5 * eta * math.sin(p.theta) * lam)
    for s in p.sides:
        assert np.linalg.norm(s.normal) == pytest.approx(1.0)
        mid = 0.5 * (s.start + s.end)
        assert (mid - p.x0) @ s.normal > 0  # outer normals point away from x0


def test_sides_are_clockwise():
    p = cosine_probe()
    mids = np.array([0.5 * (s.start + s.end) - p.x0 for s in p.sides])
    ang = np.unwrap(np.arctan2(mids[:, 1], mids[:, 0]))
    assert np.all(np.diff(ang) < 0)


def test_cosine_flux_check_passes():
    p = cosine_probe()
    fc = check_condition(cosine_velocity(), p)
    assert fc.ok
    # the midpoint flux is 2 c0; sin(x) < x pulls the side minimum slightly below
    assert 1.95 * p.c0 < fc.min_G1 <= 2 * p.c0
    with pytest.raises(ConfigError):
        measure_flux(cosine_velocity(), p, 1, n_samples=10)


def test_lamb_probe_flux_check_passes():
    # saddle of the co-moving stream function is a saddle of Phi = -psi_bar
    for side in (-1, 1):
        p = build_probe(-lamb_saddle_hessian(side), (float(side), 0.0), 0.05)
        assert p.lam1 == pytest.approx(2.0)
        fc = check_condition(lambda x1, x2: lamb_velocity_comoving(x1, x2), p)
        assert fc.ok


def test_no_saddle():
    with pytest.raises(NoSaddleError):
        build_probe(np.eye(2), (0.0, 0.0), 0.1)


def test_cutoff_f_values():
    assert float(cutoff_f(1 / 3)) == pytest.approx(1.0)
    assert float(cutoff_f(2 / 3)) == pytest.approx(2.0)
    assert float(cutoff_f(-0.1)) == 0 and float(cutoff_f(1.2)) == 0
    x = np.linspace(0, 1, 200001)
    assert scipy.integrate.trapezoid(cutoff_f(x), x) == pytest.approx(0.97634, abs=1e-5)
    assert np.max(np.abs(cutoff_f_prime(x))) == pytest.approx(9.18, abs=0.01)


@given(st.floats(-0.5, 1.5), st.floats(-3, 3))
def test_cutoff_f_shift_and_derivative(s, K):
    assert float(cutoff_f(s + K, K)) == pytest.approx(float(cutoff_f(s)), abs=1e-9)
    h = 1e-6
    fd = (float(cutoff_f(s + h)) - float(cutoff_f(s - h))) / (2 * h)
    assert abs(fd - float(cutoff_f_prime(s))) < 1e-4


@given(st.floats(-2, 2))
def test_bump_and_steps(z):
    assert 0 <= float(bump(z)) <= 1
    assert 0 <= float(smooth_step(z)) <= 1
    assert float(smooth_step(z)) + float(smooth_step(1 - z)) == pytest.approx(1.0)
    if abs(z) <= 0.5:
        assert float(plateau(z, 0.5, 0.2)) == 1.0
    if abs(z) >= 0.7:
        assert float(plateau(z, 0.5, 0.2)) == 0.0


def test_mollify_preserves_mean_and_rejects_tiny_scale():
    d = DomainSpec.torus(64)
    X1, X2 = d.mesh()
    f = ScalarField2D(d, np.sign(np.cos(X1)) + 0.1)
    g = mollify(f, 0.3)
    assert g.mean() == pytest.approx(f.mean(), abs=1e-14)
    assert g.max_abs() <= f.max_abs() + 1e-12
    with pytest.raises(ConfigError):
        mollify(f, 0.5 * d.dx)


def test_tracer_on_hyperbolic_flow_loses_mass_monotonically():
    d = DomainSpec.chart(129, 1.0)
    B1, B2 = d.mesh()
    st_ = init_tracer(ScalarField2D(d, B2), K=-0.5)
    assert st_.mass == pytest.approx(tracer_mass(st_.mu))
    v = lambda b1, b2, t: (b1, -b2)
    m = [st_.mass]
    t = 0.0
    for _ in range(50):
        st_ = evolve_tracer(st_, v, t, 0.01)
        t += 0.01
        m.append(st_.mass)
    assert st_.monotone
    assert np.all(np.diff(m) <= 1e-12)
    assert band_width(st_.mu) >= 0
    with pytest.raises(ConfigError):
        init_tracer(ScalarField2D(DomainSpec.torus(32), np.zeros((32, 32))), 0.0)


def test_growth_series():
    s = GrowthSeries()
    for t, g in [(0.0, 1.0), (1.0, 2.0), (2.0, 4.0), (4.0, 8.0)]:
        grad_growth_metrics(s, t, g)
    assert s.inv_integral[1] == pytest.approx(0.75)
    assert s.increment(0.0, 4.0) == pytest.approx(0.75 + 0.375 + 2 * 0.1875)
    assert s.tlogt_sup[-1] == pytest.approx(8 / (4 * math.log(4)))
    with pytest.raises(OrderingError):
        grad_growth_metrics(s, 3.0, 1.0)


@pytest.fixture(scope="module")
def torus_seed():
    d = DomainSpec.torus(512)
    return build_torus_seed(TorusSeedSpec(eps_target=0.3), cosine_probe(0.08), d)


def test_torus_seed_properties(torus_seed):
    s = torus_seed
    assert s.distance < 0.3
    assert s.flux_ok
    assert s.radius >= 2 * s.field.domain.dx
    assert not s.underresolved
    assert abs(s.field.mean()) < 1e-13
    v = admit_initial_data(s.field, s)
    assert v.passed, v.failures


def test_torus_seed_admission_rejects_far_candidate(torus_seed):
    s = torus_seed
    bad = s.field.with_values(s.field.values + 0.2 * np.cos(s.field.domain.mesh()[0]))
    v = admit_initial_data(bad, s)
    assert "sup_distance" in v.failures


def test_torus_seed_infeasible_on_coarse_grid():
    with pytest.raises(InfeasibleSeedError) as e:
        build_torus_seed(TorusSeedSpec(eps_target=0.3), cosine_probe(0.08), DomainSpec.torus(128))
    assert e.value.minimal_eps > 0.3


def test_segment_crossing():
    p = cosine_probe(0.08)
    assert segment_crossing_ok(p, (0.0, 0.0))
    assert not segment_crossing_ok(p, (1.0, 1.0))


def test_plane_seed_properties():
    d = DomainSpec.free(512, 4.0)
    s = build_plane_seed(PlaneSeedSpec(), d)
    v = admit_initial_data(s.field, s)
    assert v.passed, v.failures
    x1, x2 = s.segment()
    assert np.allclose(s.evaluate(x1, x2), 2.0, atol=1e-12)
