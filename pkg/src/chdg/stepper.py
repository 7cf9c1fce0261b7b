"""Implicit time stepping for the truncated system.

Each step solves, for the unknowns ``(u+, w+)``::

    (u+ - u) / dt = Lap_h w+
    w+ = mu_delta(u+) - lam * u_expl + eps * (u+ - u) / dt

where ``mu_delta`` is the exact gradient of the discrete energy
``sum_faces abar/2 |D u|^2 + sum_cells F_delta(u)`` (``abar`` the face
average of ``a_delta``).  ``u_expl`` is ``u+`` for ``backward_euler_full`` and
``u`` for ``convex_splitting``.  The discrete gradient part is jointly convex,
so convex splitting dissipates the discrete energy for any ``dt``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import diagnostics
from .model import ModelParams

log = logging.getLogger(__name__)

SCHEMES = ("convex_splitting", "backward_euler_full")
# residuals below this are accepted when Newton can no longer reduce them
ROUNDOFF_FLOOR = 1e-9


class NewtonError(RuntimeError):
    """Newton iteration failed to converge; a smaller time step usually helps."""


class StepError(RuntimeError):
    def __init__(self, message, step_index, t):
        super().__init__(f"step {step_index} at t={t:.6g}: {message}")
        self.step_index = step_index
        self.t = t


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    scheme: str = "convex_splitting"
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    clip_margin: float | None = None
    max_halvings: int = 8

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.newton_tol <= 1e-6:
            raise ValueError("newton_tol must lie in (0, 1e-6]")
        if self.clip_margin is not None and not self.clip_margin > 0:
            raise ValueError("clip margin must be positive")

    def margin(self, delta):
        m = 1e-3 * delta if self.clip_margin is None else self.clip_margin
        if not m < delta:
            raise ValueError("clip margin must be smaller than delta")
        return m


def default_dt(grid):
    """``1e-4 (L/pi)^4 / a(0)`` with ``L`` the shortest side."""
    L = min(grid.length)
    return 1e-4 * (L / np.pi) ** 4 / 2.0


@dataclass
class SimState:
    t: float
    u: np.ndarray
    w: np.ndarray
    u_prev: np.ndarray
    step_index: int = 0

    def copy(self):
        return SimState(self.t, self.u.copy(), self.w.copy(), self.u_prev.copy(), self.step_index)


def chemical_potential(grid, u, params, jacobian=False):
    """Discrete variational derivative of the truncated energy (without ``-lam u``)."""
    uf = np.asarray(u, dtype=float).ravel()
    D, M = grid.D, grid.M
    av, ap, app = params.a_d(uf)
    du = D @ uf
    abar = M @ av
    g2 = M.T @ (du * du)
    mu = D.T @ (abar * du) + ap / 2 * g2 + params.f_d(uf)
    if not jacobian:
        return mu.reshape(grid.shape)
    cross = D.T @ sp.diags(du) @ M @ sp.diags(ap)
    H = (
        D.T @ sp.diags(abar) @ D + cross + cross.T
        + sp.diags(app / 2 * g2 + params.f_d_prime(uf))
    )
    return mu.reshape(grid.shape), H.tocsc()


def initial_state(grid, u0, params, t=0.0):
    u0 = np.asarray(u0, dtype=float)
    w0 = chemical_potential(grid, u0, params) - params.lam * u0
    return SimState(t, u0.copy(), w0, u0.copy(), 0)


def newton_solve(grid, state, params, cfg, dt=None, guess=None):
    """Solve one implicit step for ``(u+, w+)`` by damped Newton.

    Returns ``(u+, w+, iterations, residual_history)``.
    """
    dt = cfg.dt if dt is None else dt
    N = grid.size
    u_old = state.u.ravel()
    implicit_lam = cfg.scheme == "backward_euler_full"
    bound = 1 - params.delta - cfg.margin(params.delta)
    L = grid.L
    eye = sp.identity(N, format="csc")

    def residual(x, jac=False):
        u, w = x[:N], x[N:]
        out = chemical_potential(grid, u, params, jacobian=jac)
        mu, H = (out[0].ravel(), out[1]) if jac else (out.ravel(), None)
        u_expl = u if implicit_lam else u_old
        r1 = u - u_old - dt * (L @ w)
        r2 = w - mu + params.lam * u_expl - params.eps * (u - u_old) / dt
        return np.concatenate([r1, r2]), H

    def size(r, x):
        w_scale = 1.0 + np.max(np.abs(x[N:]))
        return max(np.max(np.abs(r[:N])), np.max(np.abs(r[N:])) / w_scale)

    if guess is None:
        x = np.concatenate([u_old, state.w.ravel()])
    else:
        x = np.concatenate([np.ravel(guess[0]), np.ravel(guess[1])])
    x[:N] = np.clip(x[:N], -bound, bound)

    r, H = residual(x, jac=True)
    history = [size(r, x)]
    it = 0
    while history[-1] > cfg.newton_tol:
        if it >= cfg.newton_max_iter:
            raise NewtonError(
                f"Newton did not converge in {it} iterations "
                f"(residual {history[-1]:.3e}); reduce dt"
            )
        c = params.lam if implicit_lam else 0.0
        J21 = -H + (c - params.eps / dt) * eye
        J = sp.bmat([[eye, -dt * L], [J21, eye]], format="csc")
        step = spsolve(J, -r)
        if not np.all(np.isfinite(step)):
            raise NewtonError("singular Newton system; reduce dt")
        alpha = 1.0
        while True:
            trial = x + alpha * step
            trial[:N] = np.clip(trial[:N], -bound, bound)
            r_trial, _ = residual(trial)
            if size(r_trial, trial) < history[-1] or alpha < 1e-3:
                break
            alpha /= 2
        it += 1
        if size(r_trial, trial) >= history[-1]:
            if history[-1] <= ROUNDOFF_FLOOR:
                break  # already at the roundoff floor
            raise NewtonError(f"line search stalled at residual {history[-1]:.3e}; reduce dt")
        x = trial
        r, H = residual(x, jac=True)
        history.append(size(r, x))
    if history[-1] > max(cfg.newton_tol, ROUNDOFF_FLOOR):
        raise NewtonError(f"Newton stagnated at residual {history[-1]:.3e}; reduce dt")
    if np.any(np.abs(x[:N]) >= bound):
        raise NewtonError("iterate stuck at the clipping bound; reduce dt")
    w = x[N:]
    # mass update in exact divergence form
    u = u_old + dt * (L @ w)
    return u.reshape(grid.shape), w.reshape(grid.shape), it, history


def step(grid, state, params, cfg, dt=None):
    """Advance ``state`` by one step of size ``dt`` (defaults to ``cfg.dt``)."""
    dt = cfg.dt if dt is None else dt
    u, w, _, _ = newton_solve(grid, state, params, cfg, dt=dt)
    return SimState(state.t + dt, u, w, state.u.copy(), state.step_index + 1)


def _adaptive_step(grid, state, params, cfg, dt, depth=0):
    try:
        return [step(grid, state, params, cfg, dt)]
    except NewtonError as exc:
        if depth >= cfg.max_halvings:
            raise StepError(str(exc), state.step_index, state.t) from exc
        log.info("halving dt to %.3g at t=%.6g", dt / 2, state.t)
        first = _adaptive_step(grid, state, params, cfg, dt / 2, depth + 1)
        rest = _adaptive_step(grid, first[-1], params, cfg, dt / 2, depth + 1)
        return first + rest


def run(grid, initial, params, cfg, t_end, emit=None, stride=1, adaptive=True, observer=None):
    """Integrate from ``initial`` (a field or a ``SimState``) up to ``t_end``.

    ``emit`` receives one ``DiagnosticsRecord`` for the initial state and one
    per ``stride`` steps thereafter (and always for the final state).
    ``observer``, if given, is called with the ``SimState`` at the same points.
    """
    state = initial.copy() if isinstance(initial, SimState) else initial_state(grid, initial, params)
    if emit is not None:
        emit(diagnostics.make_record(grid, state.t, state.u, params))
    if observer is not None:
        observer(state)
    nsteps = int(np.ceil((t_end - state.t) / cfg.dt - 1e-9)) if t_end > state.t else 0
    t0 = state.t
    residual = 0.0
    for n in range(1, nsteps + 1):
        target = t0 + n * cfg.dt if n < nsteps else t_end
        dt = target - state.t
        prev = state
        if adaptive:
            substeps = _adaptive_step(grid, state, params, cfg, dt)
        else:
            try:
                substeps = [step(grid, state, params, cfg, dt)]
            except NewtonError as exc:
                raise StepError(str(exc), state.step_index, state.t) from exc
        for s in substeps:
            residual += diagnostics.dissipation_residual(
                grid, prev.u, s.u, s.w, params, s.t - prev.t
            )
            prev = s
        state = substeps[-1]
        state.t = target
        if n % stride == 0 or n == nsteps:
            if emit is not None:
                emit(diagnostics.make_record(grid, state.t, state.u, params, residual))
            if observer is not None:
                observer(state)
            residual = 0.0
    return state


def with_dt(cfg, dt):
    return replace(cfg, dt=dt)


__all__ = [
    "ModelParams", "NewtonError", "SCHEMES", "SimState", "StepError", "StepperConfig",
    "chemical_potential", "default_dt", "initial_state", "newton_solve", "run", "step",
    "with_dt",
]
