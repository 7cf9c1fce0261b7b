"""Acceptance batteries.

Each ``criterion_*`` function runs one battery at desk scale and returns a
list of :class:`~chdg.verification.OracleReport`.  ``SUITES`` maps the names
used by ``chdg verify`` to these functions.
"""
from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np
import sympy

from . import diagnostics as dg
from . import initial, io, model, stepper
from .grid_ops import Grid
from .model import ModelParams
from .regularize import regularize_initial
from .stepper import StepperConfig, run
from .verification import (
    OracleReport, Profile, _s, _x, _y, dispersion_oracle, dpgg_identity_check,
    formulation_equivalence_suite, measure_growth_rate, observed_orders,
    reference_integrate,
)


def _report(name, measured, reference, tol, passed, **details):
    return OracleReport(name, {}, measured, reference, tol, bool(passed), details)


# -- 1 ---------------------------------------------------------------------------

def _fd(fn, r, step):
    """Fourth-order central difference."""
    return (-fn(r + 2 * step) + 8 * fn(r + step) - 8 * fn(r - step) + fn(r - 2 * step)) / (12 * step)


def criterion_identities(seed=0):
    rng = np.random.default_rng(seed)
    r = rng.uniform(-0.99, 0.99, 1000)
    step = 1e-3 * (1 - np.abs(r))
    rel = lambda x, y: float(np.max(np.abs(x - y) / np.abs(y).clip(1e-300)))
    chain = max(
        rel(_fd(model.f, r, step), model.a(r)),
        rel(_fd(model.a, r, step), model.a_prime(r) + (model.a_prime(r) == 0)),
        rel(_fd(model.a_prime, r, step), model.a_second(r)),
    )
    rr = np.linspace(-0.999, 0.999, 4001)
    curv = float(np.max(np.abs(
        model.a(rr) - 2 * model.a_prime(rr) ** 2 / model.a_second(rr) - 2 / (1 + 3 * rr**2)
    )))
    ru = rng.uniform(-1, 1, 1000)
    ru = ru[np.abs(ru) < 1]
    phi_err = rel(model.phi_prime(ru), np.sqrt(model.a(ru) / 2))
    uj = np.linspace(-0.99, 0.99, 2001)
    jf = float(np.max(np.abs(model.j(model.f(uj)) - uj)))
    return [
        _report("derivative chain a=f', a'=f'', a''=f''' (rel)", chain, 0.0, 1e-6, chain <= 1e-6),
        _report("a - 2a'^2/a'' = 2/(1+3u^2)", curv, 0.0, 1e-12, curv <= 1e-12),
        _report("phi' = sqrt(a/2) (rel)", phi_err, 0.0, 1e-14, phi_err <= 1e-14),
        _report("j(f(u)) = u on [-0.99, 0.99]", jf, 0.0, 1e-13, jf <= 1e-13),
    ]


# -- 2 ---------------------------------------------------------------------------

DELTAS = tuple(2.0 ** -k for k in range(3, 8))


def regularization_battery(grid, seed=0):
    """Rough and front-like data on ``grid``, all with mean strictly inside (-1, 1)."""
    rng = np.random.default_rng(seed)
    data = {
        "uniform noise": rng.uniform(-1, 1, grid.shape),
        "tanh front": initial.tanh_front(grid, steepness=20.0 / grid.length[0]),
        "pure phases": np.where(grid.coords()[0] < 0.3 * grid.length[0], 1.0, -1.0),
        "near-pure noise": np.clip(0.8 + 0.4 * rng.standard_normal(grid.shape), -1, 1),
    }
    return data


def criterion_regularization(seed=0):
    reports = []
    worst = np.inf
    for n in (64, 256, 1024):
        grid = Grid.interval(n, 1.0)
        for u0 in regularize_battery_values(grid, seed):
            for d in DELTAS:
                u = regularize_initial(grid, u0, d)
                worst = min(worst, 1 - 3 * d - np.max(np.abs(u)))
    reports.append(_report("bounds -1+3d <= u0d <= 1-3d (min margin)", worst, 0.0, 0.0, worst >= 0))

    rng = np.random.default_rng(seed + 1)
    ratios = []
    for k in range(100):
        grid = Grid.interval(128, 1.0) if k % 2 == 0 else Grid.rectangle(24, (1.0, 1.0))
        rhs = rng.standard_normal(grid.shape)
        d = DELTAS[k % len(DELTAS)]
        z = grid.solve_shifted_helmholtz(rhs, d)
        ratios.append(grid.seminorm_H1(z) / grid.seminorm_H1(rhs))
    reports.append(_report("Helmholtz H1 contraction (max ratio, 100 fields)", max(ratios), 1.0, 0.0,
                           max(ratios) <= 1.0))

    grid = Grid.interval(256, 1.0)
    params = ModelParams(lam=3.0)
    u0 = initial.tanh_front(grid, steepness=20.0)
    E0 = dg.energy(grid, u0, params)
    # E(u0d) <= J(u0) + |Omega| 2 log 2 <= E(u0) + |Omega| (2 log 2 + lam/2)
    c = grid.volume * (2 * np.log(2) + params.lam / 2)
    bound = max(1.0, c)
    ratios = [dg.energy(grid, regularize_initial(grid, u0, d), params) / (1 + E0) for d in DELTAS]
    reports.append(_report("E(u0d)/(1+E(u0)) bounded uniformly in delta", max(ratios), bound, 0.0,
                           max(ratios) <= bound, ratios=ratios))

    mono = True
    dists = {}
    for steep in (5.0, 20.0, 80.0):
        u0 = initial.tanh_front(grid, steepness=steep)
        dd = [float(grid.norm_L2(regularize_initial(grid, u0, d) - u0)) for d in DELTAS]
        dists[steep] = dd
        mono &= all(b < a for a, b in zip(dd, dd[1:]))
    reports.append(_report("||u0d - u0|| decreasing as delta decreases (tanh battery)",
                           dists, "monotone", 0.0, mono))
    return reports


def regularize_battery_values(grid, seed=0):
    return list(regularization_battery(grid, seed).values())


# -- 3 ---------------------------------------------------------------------------

def conservation_battery(seed=0):
    """(name, grid, u0, params, dt) for the conservation/dissipation runs."""
    out = []
    g = Grid.interval(64, 1.0)
    out.append(("1D smooth", g, initial.cosine(g, 1, 0.4, 0.05), ModelParams(lam=3.0), 1e-5))
    g = Grid.interval(128, 32.0)
    u0 = regularize_initial(g, initial.smooth_noise(g, 1e-3, seed), 0.05)
    out.append(("1D spinodal", g, u0, ModelParams(lam=3.0), 0.2))
    g = Grid.interval(128, 8.0)
    u0 = regularize_initial(g, initial.tanh_front(g, 4.0, 0.1), 0.05)
    out.append(("1D front, viscous", g, u0, ModelParams(lam=2.0, eps=0.1), 1e-3))
    g = Grid.rectangle(24, (8.0, 8.0))
    u0 = regularize_initial(g, 0.2 + initial.smooth_noise(g, 0.05, seed, modes=6), 0.05)
    out.append(("2D spinodal", g, u0, ModelParams(lam=3.0), 0.05))
    return out


def criterion_conservation(nsteps=1000, seed=0):
    reports = []
    for name, grid, u0, params, dt in conservation_battery(seed):
        cfg = StepperConfig(dt=dt)
        state = stepper.initial_state(grid, u0, params)
        m0 = grid.mean(u0)
        E = dg.energy(grid, u0, params, truncated=True)
        drift, excess = 0.0, -np.inf
        for _ in range(nsteps):
            state = stepper.step(grid, state, params, cfg)
            E_new = dg.energy(grid, state.u, params, truncated=True)
            excess = max(excess, (E_new - E) / (1 + abs(E)))
            E = E_new
            drift = max(drift, abs(grid.mean(state.u) - m0))
        reports.append(_report(f"mass drift over {nsteps} steps ({name})", drift, 0.0, 1e-11, drift <= 1e-11))
        reports.append(_report(f"energy non-increase ({name}), max (dE)/(1+|E|)", excess, 0.0, 1e-9,
                               excess <= 1e-9))

    smooth = [
        (Grid.interval(64, 1.0), lambda x: 0.4 * np.cos(np.pi * x) + 0.1 * np.cos(2 * np.pi * x),
         ModelParams(lam=3.0), 1e-3),
        (Grid.interval(64, 1.0), lambda x: 0.3 * np.cos(np.pi * x) + 0.1,
         ModelParams(lam=1.0, eps=0.05), 1e-3),
        (Grid.rectangle(24, (1.0, 1.0)), lambda x, y: 0.3 * np.cos(np.pi * x) * np.cos(np.pi * y) + 0.1,
         ModelParams(lam=3.0), 1e-3),
    ]
    for i, (grid, prof, params, T) in enumerate(smooth):
        u0 = grid.sample(prof)
        totals = []
        for k in (20, 40, 80):
            recs = []
            run(grid, u0, params, StepperConfig(dt=T / k), T, emit=recs.append)
            totals.append(sum(r.dissipation_residual for r in recs))
        ratios = [a / b for a, b in zip(totals, totals[1:])]
        ok = all(abs(q - 2) <= 0.4 for q in ratios)
        reports.append(_report(f"dissipation residual halves with dt (smooth run {i + 1})", ratios, 2.0, 0.4,
                               ok, totals=totals))
    return reports


# -- 4 ---------------------------------------------------------------------------

DISPERSION_CASES = (
    # m, lam, eps, q, L
    (0.0, 3.0, 0.0, 1, 2 * np.pi),
    (0.0, 1.0, 0.0, 1, 2 * np.pi),
    (0.3, 3.0, 0.0, 1, 2 * np.pi),
    (0.0, 3.0, 0.5, 1, 2 * np.pi),
    (0.2, 1.0, 0.1, 2, 4.0),
    (-0.4, 3.5, 0.0, 1, 8.0),
    (0.0, 1.0, 0.0, 1, 1.0),
)


def criterion_dispersion():
    reports = []
    for m, lam, eps, q, L in DISPERSION_CASES:
        params = ModelParams(lam=lam, eps=eps)
        sigma = dispersion_oracle(m, params, q, L)
        meas = measure_growth_rate(m, params, q, L)
        err = abs(meas - sigma) / abs(sigma)
        reports.append(_report(f"growth rate m={m} lam={lam} eps={eps} q={q} L={L:.4g}",
                               meas, sigma, 0.01, err <= 0.01, rel_error=err))
    return reports


# -- 5 ---------------------------------------------------------------------------

def criterion_equivalence():
    params = ModelParams(lam=3.0, eps=0.0)
    return [
        formulation_equivalence_suite(lambda x: 0.5 * np.cos(np.pi * x), params,
                                      name="formulations agree, u=0.5cos(pi x)"),
        formulation_equivalence_suite(lambda x: 0.9 * np.cos(np.pi * x), params,
                                      name="formulations agree, u=0.9cos(pi x)"),
        formulation_equivalence_suite(lambda x, y: 0.5 * np.cos(np.pi * x) * np.cos(np.pi * y) + 0.2,
                                      params, ns=(32, 64, 128), ndims=2,
                                      name="formulations agree, 2D product profile"),
    ]


# -- 6 ---------------------------------------------------------------------------

def dpgg_battery():
    pi = sympy.pi
    return [
        Profile(sympy.cos(pi * _x), _s**2),
        Profile(sympy.cos(pi * _x) + sympy.Rational(1, 3) * sympy.cos(3 * pi * _x), sympy.exp(_s / 2)),
        Profile(sympy.cos(pi * _x) * sympy.cos(pi * _y), 1 / (2 * (1 + _s**2)), ndims=2),
        Profile(sympy.cos(pi * _x) + sympy.Rational(1, 2) * sympy.cos(2 * pi * _y)
                + sympy.Rational(3, 10) * sympy.cos(pi * _x) * sympy.cos(pi * _y),
                sympy.sin(_s) + _s**2, ndims=2),
    ]


def criterion_dpgg():
    return [dpgg_identity_check(p) for p in dpgg_battery()]


# -- 7 ---------------------------------------------------------------------------

def spinodal_floor(m, n, delta, L=32.0, T=150.0, dt=0.5, tau=0.01, seed=0):
    grid = Grid.interval(n, L)
    params = ModelParams(lam=3.0, delta=delta)
    u0 = regularize_initial(grid, m + initial.smooth_noise(grid, 1e-3, seed), delta)
    cfg = StepperConfig(dt=dt)
    state = stepper.initial_state(grid, u0, params)
    # first step lands exactly on tau
    state = stepper.step(grid, state, params, cfg, dt=tau)
    gap_tau = dg.separation_gap(state.u)
    gaps = [gap_tau]
    run(grid, state, params, cfg, T, emit=lambda r: gaps.append(r.separation_gap))
    return gap_tau, min(gaps)


def criterion_separation(seed=0):
    reports = []
    for m in (0.0, 0.3):
        floors = {}
        for n, d in ((128, 0.05), (256, 0.05), (128, 0.025)):
            floors[(n, d)] = spinodal_floor(m, n, d, seed=seed)
        base = floors[(128, 0.05)][1]
        spread = max(abs(f[1] - base) / base for f in floors.values())
        positive = all(f[0] > 0 and f[1] > 0 for f in floors.values())
        reports.append(_report(f"separation floor stable (m={m}): max relative change",
                               spread, 0.0, 0.2, positive and spread <= 0.2,
                               floors={f"n={k[0]},delta={k[1]}": v for k, v in floors.items()}))
    return reports


# -- 8 ---------------------------------------------------------------------------

def vprime_growth_constant(dt, L=32.0, n=128, T=10.0, tau=0.01, dist=1e-6, seed=0):
    grid = Grid.interval(n, L)
    params = ModelParams(lam=3.0)
    u1 = regularize_initial(grid, initial.smooth_noise(grid, 1e-2, seed, modes=8), 0.05)
    # perturb along the fastest-growing mode (k^2 = 1/4)
    q = round(L / (2 * np.pi))
    pert = initial.cosine(grid, q, 1.0)
    pert *= dist / grid.norm_Vprime_zero_mean(pert - pert.mean())
    u2 = u1 + pert
    d0 = dg.vprime_distance(grid, u1, u2)
    cfg = StepperConfig(dt=dt)
    s1, s2 = stepper.initial_state(grid, u1, params), stepper.initial_state(grid, u2, params)
    s1 = stepper.step(grid, s1, params, cfg, dt=tau)
    s2 = stepper.step(grid, s2, params, cfg, dt=tau)
    sup = dg.vprime_distance(grid, s1.u, s2.u)
    for _ in range(int(round((T - tau) / dt))):
        s1 = stepper.step(grid, s1, params, cfg)
        s2 = stepper.step(grid, s2, params, cfg)
        sup = max(sup, dg.vprime_distance(grid, s1.u, s2.u))
    return sup / d0


def criterion_uniqueness():
    C = [vprime_growth_constant(dt) for dt in (0.1, 0.05)]
    change = abs(C[1] - C[0]) / C[0]
    return [_report("V' stability constant stable under dt halving", change, 0.0, 0.2, change <= 0.2,
                    constants=C)]


# -- 9 ---------------------------------------------------------------------------

def criterion_reference():
    reports = []
    T = 2e-3
    cases = [
        ("lam=3", Grid.interval(32, 2.0), ModelParams(lam=3.0)),
        ("lam=1, eps=0.01", Grid.interval(32, 2.0), ModelParams(lam=1.0, eps=0.01)),
    ]
    for name, grid, params in cases:
        u0 = grid.sample(lambda x: 0.4 * np.cos(np.pi * x / 2) + 0.15 * np.cos(2 * np.pi * x / 2) + 0.05)
        ref = reference_integrate(grid, u0, params, T)
        errs = []
        for k in (10, 20, 40, 80):
            state = run(grid, u0, params, StepperConfig(dt=T / k), T)
            errs.append(grid.norm_L2(state.u - ref))
        orders = observed_orders(errs)
        ok = all(abs(o - 1.0) <= 0.2 for o in orders)
        reports.append(_report(f"dt-order vs reference integrator ({name})", orders.tolist(), 1.0, 0.2, ok,
                               errors=errs))
    return reports


# -- 10 --------------------------------------------------------------------------

DETERMINISM_CONFIG = """\
# small spinodal run
grid.n = 64
grid.length = 16
model.lambda = 3
model.delta = 0.05
stepper.dt = 0.5
run.t_end = 10
run.snapshot_stride = 5
ic.type = constant
ic.mean = 0.1
ic.noise = 0.01
"""


def criterion_determinism():
    from .cli import parse_config, run_simulation

    outs = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            cfg = parse_config(DETERMINISM_CONFIG)
            out = Path(tmp) / f"run{k}"
            status = run_simulation(cfg, out)
            outs.append({p.relative_to(out).as_posix(): p.read_bytes()
                         for p in sorted(out.rglob("*")) if p.is_file()})
        same = status == 0 and outs[0] == outs[1] and len(outs[0]) > 2

        rng = np.random.default_rng(3)
        roundtrip = True
        for shape, length in (((17,), (2.5,)), ((9, 13), (1.0, 3.0))):
            u = rng.standard_normal(shape) * 10.0 ** rng.integers(-300, 300, shape)
            path = Path(tmp) / "snap.chdg"
            io.write_snapshot(path, u, 0.1 + 0.2, length)
            v, t, L = io.read_snapshot(path)
            roundtrip &= (v.tobytes() == np.ascontiguousarray(u).tobytes()
                          and t == 0.1 + 0.2 and L == length)
            io.write_snapshot(Path(tmp) / "snap2.chdg", v, t, L)
            roundtrip &= path.read_bytes() == (Path(tmp) / "snap2.chdg").read_bytes()
    return [
        _report("repeated runs byte-identical", same, True, 0.0, same),
        _report("snapshot write/read bit-exact", roundtrip, True, 0.0, roundtrip),
    ]


SUITES = {
    "identities": criterion_identities,
    "regularization": criterion_regularization,
    "conservation": criterion_conservation,
    "dispersion": criterion_dispersion,
    "equivalence": criterion_equivalence,
    "dpgg": criterion_dpgg,
    "separation": criterion_separation,
    "uniqueness": criterion_uniqueness,
    "reference": criterion_reference,
    "determinism": criterion_determinism,
}
