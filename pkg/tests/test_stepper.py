import numpy as np
import pytest

from chdg import initial, model
from chdg.diagnostics import energy
from chdg.grid_ops import Grid
from chdg.model import ModelParams
from chdg.stepper import (
    NewtonError, SimState, StepError, StepperConfig, chemical_potential, default_dt,
    initial_state, newton_solve, run, step,
)


def test_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(dt=0.0)
    with pytest.raises(ValueError):
        StepperConfig(dt=0.1, scheme="rk4")
    with pytest.raises(ValueError):
        StepperConfig(dt=0.1, newton_tol=1e-3)
    with pytest.raises(ValueError):
        StepperConfig(dt=0.1, clip_margin=0.1).margin(0.05)
    assert StepperConfig(dt=0.1).margin(0.05) == pytest.approx(5e-5)
    assert default_dt(Grid.interval(8, np.pi)) == pytest.approx(5e-5)


def test_chemical_potential_matches_continuous_form():
    g = Grid.interval(256, 1.0)
    u = initial.cosine(g, 1, 0.5)
    p = ModelParams()
    ref = model.mu_residual_u(g, u, None, p)
    assert np.max(np.abs(chemical_potential(g, u, p) - ref)) < 1e-3


def test_chemical_potential_is_energy_gradient(rng):
    g = Grid.rectangle((6, 5), (1.0, 1.2))
    p = ModelParams(delta=0.05)
    u = rng.uniform(-0.8, 0.8, g.shape)
    mu = chemical_potential(g, u, p)
    for _ in range(5):
        e = rng.standard_normal(g.shape)
        h = 1e-6
        fd = (energy(g, u + h * e, p, truncated=True) - energy(g, u - h * e, p, truncated=True)) / (2 * h)
        assert fd == pytest.approx(g.inner(mu, e), rel=1e-6)


def test_hessian_taylor(rng):
    g = Grid.rectangle((7, 4), (1.0, 1.0))
    p = ModelParams(delta=0.05)
    u = rng.uniform(-0.9, 0.9, g.shape)
    mu, H = chemical_potential(g, u, p, jacobian=True)
    e = rng.standard_normal(g.size)
    errs = []
    for h in (1e-3, 5e-4, 2.5e-4):
        mu2 = chemical_potential(g, u + h * e.reshape(g.shape), p)
        errs.append(np.max(np.abs(mu2.ravel() - mu.ravel() - h * (H @ e))))
    assert np.log2(errs[0] / errs[1]) > 1.8 and np.log2(errs[1] / errs[2]) > 1.8


def test_constant_is_fixed_point():
    g = Grid.interval(32, 1.0)
    p = ModelParams(lam=3.0)
    s = initial_state(g, g.constant(0.3), p)
    s2 = step(g, s, p, StepperConfig(dt=1.0))
    assert np.allclose(s2.u, 0.3, atol=1e-14)
    assert np.allclose(s2.w, float(model.f(0.3)) - 0.9, atol=1e-12)
    assert s2.t == 1.0 and s2.step_index == 1


def test_newton_converges_quadratically():
    g = Grid.interval(64, 1.0)
    p = ModelParams(lam=2.0)
    s = initial_state(g, initial.cosine(g, 2, 0.6), p)
    cfg = StepperConfig(dt=1e-3, newton_tol=1e-12)
    _, _, it, hist = newton_solve(g, s, p, cfg)
    hist = np.array(hist)
    assert hist[-1] < 1e-9
    big = hist[(hist > 1e-11) & (hist < 1e-1)]
    if len(big) >= 3:
        slopes = np.log(big[2:] / big[1:-1]) / np.log(big[1:-1] / big[:-2])
        assert np.max(slopes) >= 1.8


def test_newton_from_exact_root():
    g = Grid.interval(32, 1.0)
    p = ModelParams(lam=1.0)
    s = initial_state(g, initial.cosine(g, 1, 0.4), p)
    cfg = StepperConfig(dt=1e-3)
    u, w, _, _ = newton_solve(g, s, p, cfg)
    _, _, it, _ = newton_solve(g, s, p, cfg, guess=(u, w))
    assert it <= 1


def test_newton_handles_clipped_guess():
    g = Grid.interval(32, 1.0)
    p = ModelParams(lam=1.0)
    s = initial_state(g, initial.cosine(g, 1, 0.4), p)
    u, _, _, _ = newton_solve(g, s, p, StepperConfig(dt=1e-3), guess=(np.full(32, 0.999), s.w))
    assert np.max(np.abs(u)) < 0.5


def test_delta_is_inactive_for_separated_data():
    # away from the truncation band the scheme does not see delta at all
    g = Grid.interval(32, 1.0)
    u0 = initial.cosine(g, 1, 0.4)
    cfg = StepperConfig(dt=1e-3)
    out = []
    for delta in (0.1, 0.05):
        p = ModelParams(lam=1.0, delta=delta, K_delta=50.0)
        out.append(run(g, u0, p, cfg, 5e-3).u)
    assert np.array_equal(out[0], out[1])


def test_small_viscosity_limit():
    g = Grid.interval(32, 1.0)
    u0 = initial.cosine(g, 1, 0.4)
    cfg = StepperConfig(dt=1e-3)
    a = run(g, u0, ModelParams(lam=1.0), cfg, 0.01).u
    b = run(g, u0, ModelParams(lam=1.0, eps=1e-8), cfg, 0.01).u
    assert np.max(np.abs(a - b)) < 1e-5


def test_fully_implicit_scheme_runs():
    g = Grid.interval(32, 1.0)
    u0 = initial.cosine(g, 1, 0.4)
    p = ModelParams(lam=1.0)
    a = run(g, u0, p, StepperConfig(dt=1e-4, scheme="backward_euler_full"), 1e-3).u
    b = run(g, u0, p, StepperConfig(dt=1e-4), 1e-3).u
    assert np.max(np.abs(a - b)) < 1e-4
    assert a.mean() == pytest.approx(u0.mean(), abs=1e-14)


def test_run_zero_time_emits_initial_record():
    g = Grid.interval(16, 1.0)
    recs = []
    s = run(g, initial.cosine(g), ModelParams(), StepperConfig(dt=0.1), 0.0, emit=recs.append)
    assert len(recs) == 1 and recs[0].t == 0.0 and s.step_index == 0


def test_run_stride_and_final_time():
    g = Grid.interval(16, 1.0)
    recs, seen = [], []
    s = run(g, initial.cosine(g), ModelParams(), StepperConfig(dt=1e-3), 7.5e-3,
            emit=recs.append, stride=3, observer=lambda st: seen.append(st.t))
    assert [r.t for r in recs] == pytest.approx([0, 3e-3, 6e-3, 7.5e-3])
    assert seen == [r.t for r in recs]
    assert s.t == 7.5e-3 and s.step_index == 8


def test_stable_homogeneous_state_relaxes():
    g = Grid.interval(64, 2 * np.pi)
    p = ModelParams(lam=1.0)
    u0 = 0.1 + 1e-3 * initial.cosine(g, 1, 1.0)
    s = run(g, u0, p, StepperConfig(dt=0.5), 20.0)
    assert np.max(np.abs(s.u - 0.1)) < 1e-3 * np.exp(-0.3 * 20) * 2
    assert s.u.mean() == pytest.approx(u0.mean(), abs=1e-14)


def test_energy_decreases_in_spinodal_run():
    g = Grid.interval(64, 16.0)
    p = ModelParams(lam=3.0)
    u0 = initial.smooth_noise(g, 0.01, seed=5)
    recs = []
    run(g, u0, p, StepperConfig(dt=0.5), 20.0, emit=recs.append)
    E = np.array([r.energy for r in recs])
    assert np.all(np.diff(E) <= 1e-9 * (1 + np.abs(E[:-1])))
    assert E[-1] < E[0]


def test_failure_reports_step():
    g = Grid.interval(16, 1.0)
    p = ModelParams(lam=1.0)
    cfg = StepperConfig(dt=1e-3, newton_max_iter=1, newton_tol=1e-12, max_halvings=0)
    with pytest.raises(StepError) as info:
        run(g, initial.cosine(g, 1, 0.8), p, cfg, 1e-2)
    assert info.value.step_index == 0
    with pytest.raises(NewtonError):
        newton_solve(g, initial_state(g, initial.cosine(g, 1, 0.8), p), p, cfg)


def test_state_copy_is_deep():
    s = SimState(0.0, np.zeros(3), np.zeros(3), np.zeros(3))
    c = s.copy()
    c.u[0] = 1
    assert s.u[0] == 0
