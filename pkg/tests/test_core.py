import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortgrowth.core import (DomainSpec, ScalarField2D, advect_semilagrangian, biot_savart_free,
                             biot_savart_image_sum, biot_savart_torus, cfl_dt, cubic_interpolate,
                             dealias_23, fourier_coefficient, grad_max, periodic_cubic_sampler,
                             step_rk4, velocity)
from vortgrowth.core.grid import gradient_spectral, rfft2
from vortgrowth.core.stepping import EulerStepper
from vortgrowth.errors import (ConfigError, MeanZeroError, StepSizeError,
                               SupportOverflowError)


def trig_field(domain, terms):
    X1, X2 = domain.mesh()
    w = np.zeros(domain.shape)
    for (k1, k2), a, ph in terms:
        w += a * np.cos(k1 * X1 + k2 * X2 + ph)
    return ScalarField2D(domain, w)


modes = st.tuples(st.integers(-6, 6), st.integers(-6, 6)).filter(lambda k: k != (0, 0))
terms = st.lists(st.tuples(modes, st.floats(-2, 2), st.floats(0, 6.28)), min_size=1, max_size=5)


def test_domain_validation():
    with pytest.raises(ConfigError):
        DomainSpec.free(64, 3.0)
    with pytest.raises(ConfigError):
        DomainSpec.torus(8)
    with pytest.raises(ConfigError):
        ScalarField2D(DomainSpec.torus(32), np.zeros((16, 16)))


def test_free_grid_is_symmetric_in_x2():
    d = DomainSpec.free(64, 4.0)
    x2 = d.x2()
    assert np.array_equal(x2, -x2[::-1])


@given(terms)
def test_torus_velocity_of_trig_polynomial(ts):
    # exact oracle: Phi = -sum a/|k|^2 cos(.), u = (-d2 Phi, d1 Phi)
    d = DomainSpec.torus(32)
    w = trig_field(d, ts)
    u = biot_savart_torus(w)
    X1, X2 = d.mesh()
    e1 = np.zeros(d.shape)
    e2 = np.zeros(d.shape)
    for (k1, k2), a, ph in ts:
        s = np.sin(k1 * X1 + k2 * X2 + ph) * a / (k1 * k1 + k2 * k2)
        e1 += -k2 * s
        e2 += k1 * s
    assert np.max(np.abs(u.u1.values - e1)) < 1e-11
    assert np.max(np.abs(u.u2.values - e2)) < 1e-11


@given(terms)
def test_velocity_is_divergence_free_and_curl_recovers_vorticity(ts):
    d = DomainSpec.torus(32)
    w = trig_field(d, ts)
    u = biot_savart_torus(w)
    a = gradient_spectral(u.u1)
    b = gradient_spectral(u.u2)
    assert np.max(np.abs(a.u1.values + b.u2.values)) < 1e-10
    assert np.max(np.abs(b.u1.values - a.u2.values - w.values)) < 1e-10


def test_torus_requires_mean_zero():
    d = DomainSpec.torus(32)
    with pytest.raises(MeanZeroError):
        biot_savart_torus(ScalarField2D(d, np.ones(d.shape)))


@given(st.tuples(st.integers(-10, 10), st.integers(0, 10)), st.floats(-3, 3), st.floats(0, 6.2))
def test_fourier_coefficient_of_single_mode(k, a, ph):
    if k == (0, 0) or a == 0:
        return
    d = DomainSpec.torus(32)
    w = trig_field(d, [(k, a, ph)])
    c = fourier_coefficient(w, k)
    # int exp(-ik.x) a cos(k.x + ph) = 2 pi^2 a exp(i ph)
    assert abs(c - 2 * np.pi ** 2 * a * np.exp(1j * ph)) < 1e-10 * (1 + abs(a))
    assert abs(fourier_coefficient(w, (-k[0], -k[1])) - np.conj(c)) < 1e-10 * (1 + abs(a))


def test_dealias_removes_high_modes_only():
    d = DomainSpec.torus(48)
    w = trig_field(d, [((3, 1), 1.0, 0.0), ((20, 0), 1.0, 0.0)])
    low = dealias_23(w)
    assert np.max(np.abs(low.values - trig_field(d, [((3, 1), 1.0, 0.0)]).values)) < 1e-12


def _gaussian_error(n):
    # radial oracle for w = exp(-4 r^2): u_theta = (1 - exp(-4 r^2)) / (8 r)
    d = DomainSpec.free(n, 6.0)
    X1, X2 = d.mesh()
    r2 = X1 ** 2 + X2 ** 2
    u = biot_savart_free(ScalarField2D(d, np.exp(-4 * r2)))
    r = np.maximum(np.sqrt(r2), 1e-12)
    ut = (1 - np.exp(-4 * r2)) / (8 * r)
    return max(np.max(np.abs(u.u1.values + X2 / r * ut)), np.max(np.abs(u.u2.values - X1 / r * ut)))


def test_free_space_velocity_of_gaussian_converges_second_order():
    e128, e256 = _gaussian_error(128), _gaussian_error(256)
    assert e256 < 5e-4
    assert np.log2(e128 / e256) > 1.9


def test_free_space_support_overflow():
    d = DomainSpec.free(64, 4.0)
    with pytest.raises(SupportOverflowError):
        biot_savart_free(ScalarField2D(d, np.ones(d.shape)))


def test_image_sum_matches_fft_small():
    d = DomainSpec.torus(32)
    w = trig_field(d, [((1, 0), 1.0, 0.2), ((2, -1), 0.5, 1.0)])
    pts = np.array([[0.3, -1.2], [2.0, 2.5]])
    ref = biot_savart_image_sum(w, pts, m_max=20)
    X = pts
    e = np.zeros_like(X)
    for (k1, k2), a, ph in [((1, 0), 1.0, 0.2), ((2, -1), 0.5, 1.0)]:
        s = np.sin(k1 * X[:, 0] + k2 * X[:, 1] + ph) * a / (k1 * k1 + k2 * k2)
        e[:, 0] += -k2 * s
        e[:, 1] += k1 * s
    assert np.max(np.abs(ref - e)) < 1e-4
    fft = velocity(w)
    samp = periodic_cubic_sampler(fft.u1, fft.u2)(X[:, 0], X[:, 1])
    assert np.max(np.abs(np.stack(samp, axis=1) - e)) < 1e-3


def test_stepper_preserves_steady_cosine():
    d = DomainSpec.torus(32)
    X1, X2 = d.mesh()
    w = ScalarField2D(d, np.cos(X1) + np.cos(X2))
    out = w
    for _ in range(10):
        out = step_rk4(out, dt=1e-2)
    assert np.max(np.abs(out.values - w.values)) < 1e-13
    assert out.time == pytest.approx(0.1)


def test_uniform_drift_translates_exactly():
    # with a steady single-mode field, a drift d shifts the profile by d*t
    d = DomainSpec.torus(32)
    X1, X2 = d.mesh()
    w = ScalarField2D(d, np.cos(X1))
    st_ = EulerStepper(d)
    hat = st_.to_hat(w.values)
    t = 0.0
    for _ in range(20):
        hat, _ = st_.step(hat, 0.05, drift=(0.5, 0.0))
        t += 0.05
    # w_t - (u - d).grad w... frame drift adds +d.grad w, i.e. the profile moves by -d t
    ref = np.cos(X1 + 0.5 * t)
    assert np.max(np.abs(st_.to_values(hat) - ref)) < 1e-8


@given(terms)
def test_stepper_conserves_l2_and_mean(ts):
    d = DomainSpec.torus(32)
    w = trig_field(d, [((k1 % 4, k2 % 4), a, ph) for (k1, k2), a, ph in ts
                       if (k1 % 4, k2 % 4) != (0, 0)] or [((1, 0), 1.0, 0.0)])
    out = step_rk4(step_rk4(w, dt=1e-3), dt=1e-3)
    assert abs(out.mean()) < 1e-12
    assert abs(out.l2_norm() - w.l2_norm()) <= 1e-6 * (1 + w.l2_norm())


def test_step_size_errors():
    d = DomainSpec.torus(32)
    X1, _ = d.mesh()
    with pytest.raises(StepSizeError):
        step_rk4(ScalarField2D(d, np.cos(X1)), dt=0.0)
    assert cfl_dt(2.0, 0.1, 0.5, dt_max=1.0) == pytest.approx(0.025)
    assert cfl_dt(2.0, 0.1, 0.5) == 1e-2
    assert cfl_dt(0.0, 0.1) == 1e-2


@given(st.floats(0, 28.9), st.floats(0, 28.9))
def test_cubic_interpolation_exact_on_cubics(s1, s2):
    i, j = np.meshgrid(np.arange(32.0), np.arange(32.0), indexing="ij")
    f = i ** 3 - 2 * i * j ** 2 + j + 1
    v = cubic_interpolate(f, np.array([s1]), np.array([s2]))
    assert abs(v[0] - (s1 ** 3 - 2 * s1 * s2 ** 2 + s2 + 1)) < 1e-8 * (1 + s1 ** 3 + s1 * s2 ** 2)


def test_semilagrangian_hyperbolic_flow_linear_data():
    # rho = b1 * b2 is invariant under v = (b1, -b2): d/dt(b1 b2) = 0
    d = DomainSpec.chart(65, 1.0)
    B1, B2 = d.mesh()
    rho = ScalarField2D(d, B1 * B2)
    vel = lambda b1, b2, t: (b1, -b2)
    out = rho
    for n in range(20):
        out = advect_semilagrangian(out, vel, n * 0.01, 0.01, inflow=lambda p1, p2, t: p1 * p2)
    assert np.max(np.abs(out.values - rho.values)) < 1e-6


def test_semilagrangian_rejects_bad_input():
    d = DomainSpec.chart(33, 1.0)
    f = ScalarField2D(d, np.zeros(d.shape))
    with pytest.raises(StepSizeError):
        advect_semilagrangian(f, lambda a, b, t: (a, -b), 0.0, -1.0)
    with pytest.raises(StepSizeError):
        advect_semilagrangian(f, lambda a, b, t: (50 + 0 * a, 0 * b), 0.0, 0.1)
    with pytest.raises(ConfigError):
        advect_semilagrangian(ScalarField2D(DomainSpec.torus(32), np.zeros((32, 32))),
                              lambda a, b, t: (a, b), 0.0, 0.1)


def test_grad_max_of_single_mode():
    d = DomainSpec.torus(64)
    X1, X2 = d.mesh()
    w = ScalarField2D(d, np.cos(3 * X1 + 4 * X2))
    assert grad_max(w) == pytest.approx(5.0, rel=1e-3)


@given(terms)
def test_torus_rhs_equals_divergence_form(ts):
    # the rewritten product must match -div(u w) when nothing is aliased
    d = DomainSpec.torus(48)
    w = trig_field(d, [((k1 % 5, k2 % 5), a, ph) for (k1, k2), a, ph in ts
                       if (k1 % 5, k2 % 5) != (0, 0)] or [((1, 0), 1.0, 0.0)])
    st_ = EulerStepper(d)
    r, (u1, u2, _, r2) = st_.rhs(rfft2(w.values))
    assert r is r2
    ref = st_.md1 * rfft2(u1 * w.values) + st_.md2 * rfft2(u2 * w.values)
    assert np.max(np.abs(r - ref)) <= 1e-10 * (1 + np.max(np.abs(ref)))
