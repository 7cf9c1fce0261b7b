"""Initial-condition families."""
from __future__ import annotations

import numpy as np


def constant(grid, mean):
    return grid.constant(mean)


def cosine(grid, mode=1, amplitude=0.1, mean=0.0):
    """``mean + amplitude * prod_k cos(mode_k pi x_k / L_k)``."""
    modes = np.broadcast_to(np.atleast_1d(mode), (grid.ndims,))
    coords = grid.coords()
    shape = np.ones(grid.shape)
    for q, x, L in zip(modes, coords, grid.length):
        shape = shape * np.cos(q * np.pi * x / L)
    return mean + amplitude * shape


def tanh_front(grid, steepness=5.0, mean=0.0, amplitude=0.999):
    """Front across the middle of the first axis, ``max|u| = |mean| + amplitude (1 - |mean|)``."""
    x = grid.coords()[0]
    L = grid.length[0]
    return mean + amplitude * (1 - abs(mean)) * np.tanh(steepness * (x - L / 2))


def smooth_noise(grid, amplitude, seed=0, modes=24):
    """Random cosine series with sup norm ``amplitude``.

    The series is fixed by ``seed`` alone, so the same continuous function is
    sampled on every grid resolution.
    """
    if amplitude == 0:
        return np.zeros(grid.shape)
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((modes,) * grid.ndims)

    def series(*xs):
        out = 0.0
        basis = [
            np.cos(np.multiply.outer(np.arange(1, modes + 1) * np.pi / L, x))
            for x, L in zip(xs, grid.length)
        ]
        if grid.ndims == 1:
            out = np.tensordot(coef, basis[0], axes=1)
        else:
            out = np.einsum("ij,i...,j...->...", coef, basis[0], basis[1])
        return out

    fine = [np.linspace(0, L, 2001 if grid.ndims == 1 else 201) for L in grid.length]
    peak = np.max(np.abs(series(*np.meshgrid(*fine, indexing="ij"))))
    return amplitude / peak * series(*grid.coords())
