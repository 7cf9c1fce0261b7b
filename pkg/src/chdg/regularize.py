"""Smoothing of energy-class initial data into uniformly separated data.

Pipeline: clamp into ``[-1 + 3 delta, 1 - 3 delta]``, map through ``arcsin``,
solve ``z + delta A z = arcsin(clamped)`` and map back with ``sin``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import energy
from .model import ModelParams


def _check_delta(delta):
    if not 0 < delta < 1 / 6:
        raise ValueError(f"delta must lie in (0, 1/6), got {delta}")


def clamp_initial(u0, delta):
    _check_delta(delta)
    bound = 1 - 3 * delta
    return np.clip(np.asarray(u0, dtype=float), -bound, bound)


@dataclass
class InitialDatum:
    """An energy-class initial datum on a grid."""

    grid: object
    u0: np.ndarray

    def __post_init__(self):
        u0 = np.asarray(self.u0, dtype=float)
        if u0.shape != tuple(self.grid.shape):
            raise ValueError(f"u0 has shape {u0.shape}, grid has {self.grid.shape}")
        if not np.all(np.isfinite(u0)) or np.any(np.abs(u0) > 1):
            raise ValueError("initial datum must satisfy -1 <= u0 <= 1")
        m = u0.mean()
        if not -1 < m < 1:
            raise ValueError(f"mean of the initial datum must lie in (-1, 1), got {m}")
        self.u0 = u0

    @property
    def mean(self):
        return float(self.u0.mean())

    def energy(self, params=None):
        """Discrete energy; cells with ``|u0| = 1`` contribute only through ``F``."""
        params = params or ModelParams()
        return energy(self.grid, self.u0, params, allow_pure=True)


def helmholtz_stage(grid, z1, delta):
    """Smooth ``z1`` by ``(I + delta A)^{-1}``; the result stays within the range of ``z1``."""
    z = grid.solve_shifted_helmholtz(z1, delta)
    # discrete maximum principle; the clip only removes roundoff
    return np.clip(z, z1.min(), z1.max())


def regularize_initial(grid, u0, delta):
    """Return the smooth, separated approximation ``u0_delta`` of ``u0``."""
    datum = u0 if isinstance(u0, InitialDatum) else InitialDatum(grid, u0)
    _check_delta(delta)
    z1 = np.arcsin(clamp_initial(datum.u0, delta))
    return np.sin(helmholtz_stage(grid, z1, delta))


def separation_margin(u, delta):
    """Distance of ``u`` from the bounds ``+-(1 - 3 delta)``; nonnegative when they hold."""
    return float(1 - 3 * delta - np.max(np.abs(u)))
