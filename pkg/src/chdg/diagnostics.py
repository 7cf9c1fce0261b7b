"""Functionals monitored along a run: energy, dissipation, separation, entropy."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from . import model

CSV_COLUMNS = (
    "t", "mass", "energy", "J", "dissipation_residual", "min_u", "max_u",
    "separation_gap", "entropy_m_grad", "entropy_m_lap", "entropy_quartic",
)


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    J: float
    dissipation_residual: float
    min_u: float
    max_u: float
    separation_gap: float
    entropy_m_grad: float
    entropy_m_lap: float
    entropy_quartic: float
    vprime_distance: float | None = None

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]

    def as_dict(self):
        return asdict(self)


def _weights(u, params, truncated):
    if truncated:
        aval = params.a_d(u)
        return aval[0], params.F_d(u)
    return model.a(u), model.F(u)


def gradient_energy(grid, u, params=None, truncated=False):
    """``J(u) = int a(u)/2 |grad u|^2`` by cell quadrature."""
    u = model._separated(u, 0.0)
    aval = params.a_d(u)[0] if truncated else model.a(u)
    return grid.integrate(aval / 2 * grid.gradient_sq(u))


def energy(grid, u, params, truncated=False, allow_pure=False):
    """Discrete energy ``int a(u)/2 |grad u|^2 + F(u) - lam u^2 / 2``.

    With ``truncated`` the constitutive functions ``a_delta`` and
    ``F_delta`` replace ``a`` and ``F`` (the functional the stepper dissipates).
    ``allow_pure`` admits cells with ``|u| = 1`` whose gradient vanishes.
    """
    u = np.asarray(u, dtype=float)
    g2 = grid.gradient_sq(u)
    if allow_pure and not truncated:
        pure = np.abs(u) >= 1
        if np.any(pure & (g2 > 0)):
            return float("inf")
        aval = np.where(pure, 0.0, 2.0 / np.where(pure, 2.0, 1 - u * u))
        Fval = model.F(u)
    else:
        if not truncated:
            model._separated(u, 0.0)
        aval, Fval = _weights(u, params, truncated)
    dens = aval / 2 * g2 + Fval - params.lam * u * u / 2
    return grid.integrate(dens)


def dissipation(grid, w, u_new, u_old, dt, params):
    """``||grad w||^2 + eps ||u_t||^2`` for one step."""
    ut = (np.asarray(u_new) - np.asarray(u_old)) / dt
    return grid.seminorm_H1(w) ** 2 + params.eps * grid.norm_L2(ut) ** 2


def dissipation_residual(grid, u_old, u_new, w_new, params, dt, truncated=True):
    """``E(u_new) - E(u_old) + dt (||grad w||^2 + eps ||u_t||^2)``."""
    dE = energy(grid, u_new, params, truncated) - energy(grid, u_old, params, truncated)
    return dE + dt * dissipation(grid, w_new, u_new, u_old, dt, params)


def entropy_monitors(grid, u, params):
    """``(int m(v)|grad v|^2, int m(v)|Lap v|^2, int (1+|v|^3)/(1+v^2)^(p+2) |grad v|^4)``."""
    u = model._separated(u, 0.0)
    v = model.f(u)
    p = params.p
    mv = model.m_weight(v, p)
    g2 = grid.gradient_sq(v)
    lap = grid.laplacian(v)
    quart = (1 + np.abs(v) ** 3) / (1 + v * v) ** (p + 2) * g2 * g2
    return (
        grid.integrate(mv * g2),
        grid.integrate(mv * lap * lap),
        grid.integrate(quart),
    )


def vprime_distance(grid, u1, u2):
    """Dual-norm distance of two states with equal mass."""
    u1, u2 = np.asarray(u1, dtype=float), np.asarray(u2, dtype=float)
    gap = u1.mean() - u2.mean()
    if abs(gap) > 1e-10:
        raise ValueError(f"states have different means (difference {gap:.3e})")
    d = u1 - u2
    if not np.any(d):
        return 0.0
    return grid.norm_Vprime_zero_mean(d - d.mean())


def separation_gap(u):
    return float(1 - np.max(np.abs(u)))


def make_record(grid, t, u, params, residual=0.0, truncated=True, vprime=None):
    E = energy(grid, u, params, truncated)
    J = gradient_energy(grid, u, params, truncated)
    ent = entropy_monitors(grid, u, params)
    return DiagnosticsRecord(
        t=float(t), mass=grid.mean(u), energy=E, J=J,
        dissipation_residual=float(residual),
        min_u=float(np.min(u)), max_u=float(np.max(u)),
        separation_gap=separation_gap(u),
        entropy_m_grad=ent[0], entropy_m_lap=ent[1], entropy_quartic=ent[2],
        vprime_distance=vprime,
    )


RECORD_FIELDS = tuple(f.name for f in fields(DiagnosticsRecord))
