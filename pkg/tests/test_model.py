import numpy as np
import pytest
from hypothesis import given, strategies as st

from chdg import model
from chdg.grid_ops import Grid
from chdg.model import DomainError, ModelParams


def test_reference_values():
    assert model.F(0.5) == pytest.approx(0.2616240, abs=1e-6)
    assert model.F(1.0) == pytest.approx(2 * np.log(2), abs=1e-15)
    assert model.F(0.0) == 0.0
    assert model.f(0.5) == pytest.approx(np.log(3), rel=1e-15)
    assert model.a(0.5) == pytest.approx(8 / 3, rel=1e-15)
    assert model.a_prime(0.5) == pytest.approx(64 / 9 / 2, rel=1e-15)
    assert model.phi(0.5) == pytest.approx(np.pi / 6, rel=1e-15)
    assert model.j(np.log(3)) == pytest.approx(0.5, rel=1e-15)
    assert model.m_weight(0.0) == 0.5
    assert model.m_weight(1.0, 0.75) == pytest.approx(0.5 / 2**0.75)


def test_curvature_identity():
    r = np.linspace(-0.99, 0.99, 1001)
    a, ap, app = model.a(r), model.a_prime(r), model.a_second(r)
    assert np.max(np.abs(a - 2 * ap**2 / app - 2 / (1 + 3 * r**2))) < 1e-12
    assert (a - 2 * ap**2 / app)[750] == pytest.approx(2 / (1 + 3 * r[750] ** 2))
    assert float(model.a(0.5) - 2 * model.a_prime(0.5) ** 2 / model.a_second(0.5)) == pytest.approx(8 / 7)


def test_phi_prime_squared():
    r = np.linspace(-0.99, 0.99, 501)
    assert np.allclose(model.phi_prime(r) ** 2, model.a(r) / 2, rtol=1e-14)


@given(st.floats(-0.999, 0.999))
def test_j_inverts_f(r):
    assert model.j(model.f(r)) == pytest.approx(r, abs=1e-13)


@given(st.floats(-14, 14))
def test_f_inverts_j(v):
    assert model.f(model.j(v)) == pytest.approx(v, abs=1e-10)


def test_j_prime_matches_a():
    v = np.linspace(-10, 10, 41)
    assert np.allclose(model.j_prime(v) * model.a(model.j(v)), 1.0, rtol=1e-10)


def test_domain_errors():
    for fn in (model.f, model.a, model.a_prime, model.phi_prime):
        with pytest.raises(DomainError):
            fn(1.0)
    with pytest.raises(DomainError):
        model.F(1.2)
    with pytest.raises(DomainError):
        model.m_weight(0.0, 0.5)


def test_m_derivatives_fd():
    v = np.linspace(-3, 3, 61)
    h = 1e-5
    for p in (0.6, 1.0):
        fd = (model.m_weight(v + h, p) - model.m_weight(v - h, p)) / (2 * h)
        assert np.allclose(fd, model.m_prime(v, p), atol=1e-9)
        fd2 = (model.m_prime(v + h, p) - model.m_prime(v - h, p)) / (2 * h)
        assert np.allclose(fd2, model.m_second(v, p), atol=1e-8)


def test_f_delta_agrees_on_inner_band():
    delta = 0.05
    r = np.linspace(-1 + 2 * delta, 1 - 2 * delta, 100)
    assert np.array_equal(model.f_delta(r, delta), model.f(r))
    assert np.array_equal(model.F_delta(r, delta), model.F(r))


@pytest.mark.parametrize("delta", [0.1, 0.05, 0.01])
def test_f_delta_shape(delta):
    r = np.linspace(0, 1 - delta - 1e-4, 4000)
    fd = model.f_delta(r, delta)
    assert np.all(np.diff(fd) > 0)
    inside = r < 1 - delta
    assert np.all(fd[inside] >= model.f(r[inside]) - 1e-12)
    assert np.all(model.f_delta(-r, delta) == -fd)
    assert model.f_delta(1 - delta - 1e-9, delta) > 1e5


@pytest.mark.parametrize("delta", [0.1, 0.02])
def test_f_delta_is_c2_at_junction(delta):
    s0 = 1 - 2 * delta
    e = 1e-7
    lo, hi = s0 - e, s0 + e
    # jumps no larger than the slope times the probe width
    assert abs(model.f_delta(hi, delta) - model.f_delta(lo, delta)) < 3 * e * model.a(s0)
    assert abs(model.f_delta_prime(hi, delta) - model.f_delta_prime(lo, delta)) < 3 * e * model.a_prime(s0)
    left = (model.f_delta_prime(s0, delta) - model.f_delta_prime(s0 - 1e-8, delta)) / 1e-8
    right = (model.f_delta_prime(s0 + 1e-8, delta) - model.f_delta_prime(s0, delta)) / 1e-8
    assert left == pytest.approx(right, rel=1e-3)


def test_F_delta_is_antiderivative():
    delta = 0.05
    r = np.linspace(0.8, 0.94, 50)
    h = 1e-6
    fd = (model.F_delta(r + h, delta) - model.F_delta(r - h, delta)) / (2 * h)
    assert np.allclose(fd, model.f_delta(r, delta), rtol=1e-7)
    fd = (model.f_delta(r + h, delta) - model.f_delta(r - h, delta)) / (2 * h)
    assert np.allclose(fd, model.f_delta_prime(r, delta), rtol=1e-6)


def test_a_delta_blend():
    delta = 0.05
    K = model.default_K(delta)
    assert model.a_delta(2.0, delta) == pytest.approx(K)
    assert model.a_delta(-3.0, delta) == pytest.approx(K)
    assert model.a_delta(0.0, delta) == 2.0
    r = np.linspace(0, 1 - delta, 200)
    assert np.array_equal(model.a_delta(r, delta), model.a(r))
    r = np.linspace(0, 1.2, 5000)
    val, der, sec = model.a_delta_all(r, delta)
    assert np.all(np.diff(val) >= -1e-12)
    assert np.max(val) <= K + 1e-12
    h = 1e-6
    assert np.allclose((model.a_delta(r + h, delta) - model.a_delta(r - h, delta)) / (2 * h), der,
                       rtol=1e-5, atol=1e-5)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(lam=-1)
    with pytest.raises(ValueError):
        ModelParams(delta=0.2)
    with pytest.raises(ValueError):
        ModelParams(eps=np.nan)
    with pytest.raises(ValueError):
        ModelParams(K_delta=1.0)
    assert ModelParams(delta=0.05).K_delta == model.default_K(0.05)


def test_mu_on_constants():
    g = Grid.interval(16, 1.0)
    m = 0.3
    u = g.constant(m)
    p = ModelParams(lam=2.0, eps=0.7)
    expect = float(model.f(m)) - 2.0 * m
    zero = np.zeros(16)
    assert np.allclose(model.mu_residual_u(g, u, zero, p), expect)
    assert np.allclose(model.mu_residual_z(g, u, model.phi(u), None, p), expect)
    assert np.allclose(model.mu_residual_v(g, u, model.f(u), zero, p), expect)
    assert np.allclose(model.mu_residual_u(g, u, zero, ModelParams(lam=2.0)), expect)


def test_mu_consistency_checks():
    g = Grid.interval(16, 1.0)
    u = g.constant(0.2)
    p = ModelParams()
    with pytest.raises(ValueError):
        model.mu_residual_z(g, u, u, None, p)
    with pytest.raises(ValueError):
        model.mu_residual_v(g, u, u, None, p)
    with pytest.raises(DomainError):
        model.mu_residual_u(g, g.constant(1.0), None, p)
