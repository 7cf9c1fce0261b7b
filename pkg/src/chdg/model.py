"""Constitutive functions: logarithmic potential and the degenerate-at-the-poles coefficient ``a``.

Logarithmic potential and its derivatives::

    F(r) = (1 - r) log(1 - r) + (1 + r) log(1 + r)
    f(r) = F'(r) = log((1 + r) / (1 - r))
    a(r) = f'(r) = 2 / (1 - r^2)

together with the substitutions ``z = arcsin(u)`` and ``v = f(u)``, the
entropy weight ``m(v) = 1 / (2 (1 + v^2)^p)``, and truncated versions
``f_delta``/``a_delta`` used by the time stepper.

All functions are vectorised over numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Argument outside the domain of a constitutive function."""


def _arr(r):
    return np.asarray(r, dtype=float)


def _require(mask, r, what):
    if not np.all(mask):
        bad = np.asarray(r)[~np.asarray(mask)].ravel()[0]
        raise DomainError(f"{what} (got {bad!r})")


def _xlogx(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


def F(r):
    r = _arr(r)
    _require(np.abs(r) <= 1, r, "F needs |r| <= 1")
    return _xlogx(1 - r) + _xlogx(1 + r)


def _open(r, name):
    r = _arr(r)
    _require(np.abs(r) < 1, r, f"{name} is singular at |r| >= 1")
    return r


def f(r):
    r = _open(r, "f")
    return np.log1p(r) - np.log1p(-r)


def a(r):
    r = _open(r, "a")
    return 2.0 / (1 - r * r)


def a_prime(r):
    r = _open(r, "a'")
    return 4 * r / (1 - r * r) ** 2


def a_second(r):
    r = _open(r, "a''")
    return 4 * (1 + 3 * r * r) / (1 - r * r) ** 3


def phi(r):
    r = _arr(r)
    _require(np.abs(r) <= 1, r, "phi needs |r| <= 1")
    return np.arcsin(r)


def phi_prime(r):
    r = _open(r, "phi'")
    return 1.0 / np.sqrt(1 - r * r)


def j(v):
    """Inverse of ``f``: ``(e^v - 1) / (e^v + 1)``, evaluated as ``tanh(v/2)``."""
    return np.tanh(_arr(v) / 2)


def j_prime(v):
    t = j(v)
    return (1 - t * t) / 2


def _check_p(p):
    if not 0.5 < p <= 1:
        raise DomainError(f"entropy exponent p must lie in (1/2, 1], got {p}")


def m_weight(v, p=1.0):
    _check_p(p)
    v = _arr(v)
    return 0.5 / (1 + v * v) ** p


def m_prime(v, p=1.0):
    _check_p(p)
    v = _arr(v)
    return -p * v / (1 + v * v) ** (p + 1)


def m_second(v, p=1.0):
    _check_p(p)
    v = _arr(v)
    return ((2 * p * p + p) * v * v - p) / (1 + v * v) ** (p + 2)


# -- truncated functions ------------------------------------------------------

def _fd_pieces(r, delta):
    """Return (|r|, sign, t, mask) for the outer band of ``f_delta``."""
    s0 = 1 - 2 * delta
    ar, sg = np.abs(r), np.sign(r)
    t = np.maximum(ar - s0, 0.0)
    return ar, sg, t, ar > s0


def _fd_coef(delta):
    # C * t^3 / (delta - t) dominates the Taylor remainder of f at s0
    return delta * float(a_second(1 - delta)) / 6


def f_delta(r, delta):
    """Monotone C^2 modification of ``f`` that blows up at ``+-(1 - delta)``.

    Equal to ``f`` on ``[-1 + 2 delta, 1 - 2 delta]``; beyond that it is the
    second-order Taylor polynomial of ``f`` at ``1 - 2 delta`` plus
    ``C t^3 / (delta - t)``, ``t = |r| - (1 - 2 delta)``.
    """
    r = _arr(r)
    _require(np.abs(r) < 1 - delta, r, "f_delta needs |r| < 1 - delta")
    ar, sg, t, outer = _fd_pieces(r, delta)
    s0 = 1 - 2 * delta
    inner = f(np.where(outer, 0.0, r))
    ext = (
        float(f(s0)) + float(a(s0)) * t + float(a_prime(s0)) * t**2 / 2
        + _fd_coef(delta) * t**3 / (delta - t)
    )
    return np.where(outer, sg * ext, inner)


def f_delta_prime(r, delta):
    r = _arr(r)
    _require(np.abs(r) < 1 - delta, r, "f_delta' needs |r| < 1 - delta")
    ar, sg, t, outer = _fd_pieces(r, delta)
    s0 = 1 - 2 * delta
    inner = a(np.where(outer, 0.0, r))
    ext = (
        float(a(s0)) + float(a_prime(s0)) * t
        + _fd_coef(delta) * t**2 * (3 * delta - 2 * t) / (delta - t) ** 2
    )
    return np.where(outer, ext, inner)


def F_delta(r, delta):
    """Antiderivative of ``f_delta`` with ``F_delta(0) = 0``; equals ``F`` on the inner band."""
    r = _arr(r)
    _require(np.abs(r) < 1 - delta, r, "F_delta needs |r| < 1 - delta")
    ar, sg, t, outer = _fd_pieces(r, delta)
    s0 = 1 - 2 * delta
    inner = F(np.where(outer, 0.0, r))
    # int_0^t s^3 / (delta - s) ds
    tail = -(t**3) / 3 - delta * t**2 / 2 - delta**2 * t - delta**3 * np.log1p(-t / delta)
    ext = (
        float(F(s0)) + float(f(s0)) * t + float(a(s0)) * t**2 / 2
        + float(a_prime(s0)) * t**3 / 6 + _fd_coef(delta) * tail
    )
    return np.where(outer, ext, inner)


def default_K(delta):
    return float(a(1 - delta / 2))


def _hermite5(t):
    """Quintic Hermite basis on [0, 1] with derivatives, for value/slope/curvature at 0."""
    h0 = 1 - 10 * t**3 + 15 * t**4 - 6 * t**5
    h1 = t - 6 * t**3 + 8 * t**4 - 3 * t**5
    h2 = (t**2 - 3 * t**3 + 3 * t**4 - t**5) / 2
    d0 = -30 * t**2 + 60 * t**3 - 30 * t**4
    d1 = 1 - 18 * t**2 + 32 * t**3 - 15 * t**4
    d2 = (2 * t - 9 * t**2 + 12 * t**3 - 5 * t**4) / 2
    s0 = -60 * t + 180 * t**2 - 120 * t**3
    s1 = -36 * t + 96 * t**2 - 60 * t**3
    s2 = (2 - 18 * t + 36 * t**2 - 20 * t**3) / 2
    return (h0, h1, h2), (d0, d1, d2), (s0, s1, s2)


def a_delta_all(r, delta, K=None):
    """``(a_delta, a_delta', a_delta'')`` at ``r``.

    ``a`` on ``[-1 + delta, 1 - delta]``, constant ``K`` for ``|r| >= 1`` and a
    quintic Hermite blend in between (C^2 at both ends).
    """
    K = default_K(delta) if K is None else float(K)
    r = _arr(r)
    ar, sg = np.abs(r), np.sign(r)
    r0 = 1 - delta
    core = ar <= r0
    rc = np.where(core, r, 0.0)
    v, d1, d2 = a(rc), a_prime(rc), a_second(rc)

    t = np.clip((ar - r0) / delta, 0.0, 1.0)
    (h0, h1, h2), (e0, e1, e2), (s0, s1, s2) = _hermite5(t)
    y0, y1, y2 = float(a(r0)), float(a_prime(r0)) * delta, float(a_second(r0)) * delta**2
    bv = y0 * h0 + y1 * h1 + y2 * h2 + K * (1 - h0)
    bd = (y0 * e0 + y1 * e1 + y2 * e2 - K * e0) / delta
    bs = (y0 * s0 + y1 * s1 + y2 * s2 - K * s0) / delta**2

    val = np.where(core, v, bv)
    der = np.where(core, d1, sg * bd)
    sec = np.where(core, d2, bs)
    return val, der, sec


def a_delta(r, delta, K=None):
    return a_delta_all(r, delta, K)[0]


@dataclass(frozen=True)
class ModelParams:
    """Physical and regularisation parameters.

    ``lam`` is the interaction parameter, ``eps`` the viscosity, ``delta`` the
    truncation level and ``p`` the entropy-weight exponent.
    """

    lam: float = 0.0
    eps: float = 0.0
    delta: float = 0.05
    p: float = 1.0
    K_delta: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not (np.isfinite(self.eps) and self.eps >= 0):
            raise ValueError(f"epsilon must be >= 0, got {self.eps}")
        if not 0 < self.delta < 1 / 6:
            raise ValueError(f"delta must lie in (0, 1/6), got {self.delta}")
        _check_p(self.p)
        if self.K_delta is None:
            object.__setattr__(self, "K_delta", default_K(self.delta))
        elif not self.K_delta >= max(1.0, float(a(1 - self.delta))):
            raise ValueError("K_delta must be at least a(1 - delta)")

    # bound truncated functions, handy in the stepper
    def f_d(self, r):
        return f_delta(r, self.delta)

    def f_d_prime(self, r):
        return f_delta_prime(r, self.delta)

    def F_d(self, r):
        return F_delta(r, self.delta)

    def a_d(self, r):
        return a_delta_all(r, self.delta, self.K_delta)


# -- chemical potential in three equivalent forms -----------------------------

SEPARATION_TOL = 1e-6


def _separated(u, limit=SEPARATION_TOL):
    u = _arr(u)
    bad = np.abs(u) > 1 - limit
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DomainError(f"separation violated at cell {idx}: u = {u[idx]!r}")
    return u


def _ut(u, u_t):
    return np.zeros_like(u) if u_t is None else _arr(u_t)


def mu_residual_u(grid, u, u_t, params):
    """``w = -a(u) Lap u - a'(u)/2 |grad u|^2 + f(u) - lam u + eps u_t``."""
    u = _separated(u)
    return (
        -a(u) * grid.laplacian(u) - a_prime(u) / 2 * grid.gradient_sq(u)
        + f(u) - params.lam * u + params.eps * _ut(u, u_t)
    )


def mu_residual_z(grid, u, z, u_t, params):
    """``w = -2 phi'(u) Lap z + f(u) - lam u + eps u_t`` with ``z = arcsin u``."""
    u = _separated(u)
    z = _arr(z)
    if np.max(np.abs(z - phi(u))) > 1e-10:
        raise ValueError("z is not consistent with arcsin(u)")
    return (
        -2 * phi_prime(u) * grid.laplacian(z) + f(u)
        - params.lam * u + params.eps * _ut(u, u_t)
    )


def mu_residual_v(grid, u, v, u_t, params):
    """``w = -Lap v + v + j(v)/2 |grad v|^2 - lam j(v) + eps u_t`` with ``v = f(u)``."""
    u, v = _arr(u), _arr(v)
    if np.any(np.abs(u) >= 1) or np.max(np.abs(v - f(u))) > 1e-10 * max(1.0, np.max(np.abs(v))):
        raise ValueError("v is not consistent with f(u)")
    ju = j(v)
    return (
        -grid.laplacian(v) + v + ju / 2 * grid.gradient_sq(v)
        - params.lam * ju + params.eps * _ut(u, u_t)
    )
