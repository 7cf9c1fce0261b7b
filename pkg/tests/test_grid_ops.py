import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chdg.grid_ops import Grid, SolverError


def test_geometry():
    g = Grid.interval(8, 2.0)
    assert g.shape == (8,)
    assert g.h == (0.25,)
    assert np.allclose(g.coords()[0], 0.125 + 0.25 * np.arange(8))
    r = Grid.rectangle((4, 6), (1.0, 3.0))
    assert r.ndims == 2 and r.size == 24
    assert r.cell_volume == pytest.approx(0.25 * 0.5)
    assert r.volume == pytest.approx(3.0)


@pytest.mark.parametrize("bad", [(0,), (2,), (4, 4, 4)])
def test_bad_sizes(bad):
    with pytest.raises(ValueError):
        Grid(bad, (1.0,) * len(bad))


def test_constants_in_kernel():
    g = Grid.rectangle((16, 8), (1.0, 2.0))
    c = g.constant(0.3)
    assert np.max(np.abs(g.laplacian(c))) < 1e-12
    assert np.all(g.gradient_sq(c) == 0)


def test_laplacian_symmetric_negative():
    L = Grid.rectangle((7, 5), (1.0, 1.3)).L.toarray()
    assert np.allclose(L, L.T)
    assert np.max(np.linalg.eigvalsh(L)) < 1e-12


def test_cosine_eigenfunction_second_order():
    errs = []
    for n in (32, 64, 128):
        g = Grid.interval(n, 1.0)
        x = g.coords()[0]
        errs.append(np.max(np.abs(g.laplacian(np.cos(np.pi * x)) + np.pi**2 * np.cos(np.pi * x))))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(orders - 2) < 0.1)


def test_gradient_sq_examples():
    g = Grid.interval(4, 4.0)
    u = np.array([0.0, 1.0, 3.0, 3.0])
    # face differences 1, 2, 0; each cell averages its two faces (boundary faces carry zero)
    assert np.allclose(g.gradient_sq(u), [0.5, 2.5, 2.0, 0.0])
    g = Grid.interval(256, 1.0)
    x = g.coords()[0]
    assert g.integrate(g.gradient_sq(np.cos(np.pi * x))) == pytest.approx(np.pi**2 / 2, rel=1e-4)


def test_helmholtz_on_cosine():
    g = Grid.interval(256, 1.0)
    x = g.coords()[0]
    z = g.solve_shifted_helmholtz(np.cos(np.pi * x), 0.1)
    assert np.max(np.abs(z - np.cos(np.pi * x) / 1.98696044)) < 1e-4
    with pytest.raises(ValueError):
        g.solve_shifted_helmholtz(x, 0.0)


def test_poisson_roundtrip(rng):
    g = Grid.rectangle((24, 16), (1.0, 2.0))
    f = rng.standard_normal(g.shape)
    f -= f.mean()
    y = g.solve_poisson_zero_mean(f)
    assert abs(y.mean()) < 1e-14
    assert np.allclose(g.laplacian(y), f, atol=1e-10)
    g = Grid.interval(256, 1.0)
    x = g.coords()[0]
    assert np.max(np.abs(g.solve_poisson_zero_mean(np.cos(np.pi * x)) + np.cos(np.pi * x) / np.pi**2)) < 1e-5


def test_poisson_rejects_mean():
    g = Grid.interval(16, 1.0)
    with pytest.raises(ValueError, match="nonzero mean"):
        g.solve_poisson_zero_mean(np.ones(16))


def test_vprime_of_cosine():
    g = Grid.interval(512, 1.0)
    x = g.coords()[0]
    assert g.norm_Vprime_zero_mean(np.cos(np.pi * x)) == pytest.approx(np.sqrt(1 / (2 * np.pi**2)), rel=1e-5)


def test_nonfinite_rejected():
    g = Grid.interval(8, 1.0)
    u = np.zeros(8)
    u[3] = np.nan
    with pytest.raises(ValueError):
        g.laplacian(u)
    with pytest.raises(ValueError):
        g.solve_shifted_helmholtz(u, 0.1)


def test_solver_error_carries_residual():
    err = SolverError("x", 1e-3)
    assert err.residual == 1e-3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(1e-4, 1.0), st.sampled_from([(16,), (9, 12)]))
def test_helmholtz_contracts_h1_and_sup(seed, delta, n):
    g = Grid(n, (1.0,) * len(n))
    z1 = np.random.default_rng(seed).uniform(-1, 1, g.shape)
    z = g.solve_shifted_helmholtz(z1, delta)
    assert g.seminorm_H1(z) <= g.seminorm_H1(z1) * (1 + 1e-12)
    assert np.max(np.abs(z)) <= np.max(np.abs(z1)) * (1 + 1e-12)
    assert z.mean() == pytest.approx(z1.mean(), abs=1e-13)
