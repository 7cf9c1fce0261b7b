"""Uniform cell-centred grids with homogeneous Neumann (no-flux) operators.

Fields are plain ``numpy`` arrays of shape ``grid.shape``.  All discrete
integrals are midpoint (cell) sums, so summation by parts holds exactly:

    inner(laplacian(f), g) == -sum over faces of (D f)(D g) * cell_volume

The difference operator ``D`` lives on interior faces only; boundary faces
carry zero flux, which is the ghost-cell reflection closure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy import fft


class SolverError(RuntimeError):
    """A linear solve missed its residual contract."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


def _check_finite(f):
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        bad = np.argwhere(~np.isfinite(f))[0]
        raise ValueError(f"non-finite field value at cell {tuple(int(i) for i in bad)}")
    return f


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on an interval or an axis-aligned rectangle.

    Parameters
    ----------
    n : tuple of int
        Cells per axis (each >= 3).  One or two axes.
    length : tuple of float
        Physical extent per axis.
    """

    n: tuple
    length: tuple
    tol: float = field(default=1e-12, compare=False)

    def __post_init__(self):
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        length = tuple(float(x) for x in np.atleast_1d(self.length))
        if len(n) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if len(length) != len(n):
            raise ValueError("n and length must have the same number of axes")
        if min(n) < 3:
            raise ValueError("need at least 3 cells per axis")
        if not all(np.isfinite(x) and x > 0 for x in length):
            raise ValueError("lengths must be positive and finite")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)

    @classmethod
    def interval(cls, n, length=1.0):
        return cls((n,), (length,))

    @classmethod
    def rectangle(cls, n, length=(1.0, 1.0)):
        n = (n, n) if np.isscalar(n) else n
        return cls(tuple(n), tuple(length))

    @property
    def ndims(self):
        return len(self.n)

    @property
    def shape(self):
        return self.n

    @property
    def size(self):
        return int(np.prod(self.n))

    @property
    def h(self):
        return tuple(L / k for L, k in zip(self.length, self.n))

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    @property
    def volume(self):
        return float(np.prod(self.length))

    def coords(self):
        """Cell-centre coordinate arrays, one per axis, broadcast to ``shape``."""
        axes = [(np.arange(k) + 0.5) * hk for k, hk in zip(self.n, self.h)]
        return np.meshgrid(*axes, indexing="ij")

    def sample(self, func):
        """Evaluate ``func(*coords)`` at the cell centres."""
        return np.asarray(func(*self.coords()), dtype=float) * np.ones(self.shape)

    def constant(self, c):
        return np.full(self.shape, float(c))

    # -- sparse building blocks -------------------------------------------

    @cached_property
    def _face_ops(self):
        """Face difference ``D`` and face average ``M``, stacked over axes."""
        diffs, avgs = [], []
        for axis, (k, hk) in enumerate(zip(self.n, self.h)):
            d1 = sp.diags([-np.ones(k - 1), np.ones(k - 1)], [0, 1], shape=(k - 1, k))
            m1 = 0.5 * abs(d1)
            eyes = [sp.identity(kk) for kk in self.n]
            dk, mk = list(eyes), list(eyes)
            dk[axis], mk[axis] = d1 / hk, m1
            D, M = dk[0], mk[0]
            for a, b in zip(dk[1:], mk[1:]):
                D, M = sp.kron(D, a), sp.kron(M, b)
            diffs.append(D)
            avgs.append(M)
        return sp.vstack(diffs).tocsr(), sp.vstack(avgs).tocsr()

    @property
    def D(self):
        return self._face_ops[0]

    @property
    def M(self):
        return self._face_ops[1]

    @cached_property
    def L(self):
        """Neumann Laplacian as a sparse matrix acting on raveled fields."""
        return (-(self.D.T @ self.D)).tocsr()

    @cached_property
    def _neg_lap_eigs(self):
        """Eigenvalues of -L in the DCT-II basis."""
        parts = [
            (2.0 / hk * np.sin(np.pi * np.arange(k) / (2 * k))) ** 2
            for k, hk in zip(self.n, self.h)
        ]
        return sum(np.meshgrid(*parts, indexing="ij"))

    # -- operators ------------------------------------------------------------

    def laplacian(self, f):
        f = _check_finite(f)
        return (self.L @ f.ravel()).reshape(self.shape)

    def face_grad(self, f):
        """Face differences of ``f``; one entry per interior face."""
        return self.D @ _check_finite(f).ravel()

    def faces_to_cells(self, q):
        """Average a face quantity onto cells (each axis contributes its mean)."""
        return (self.M.T @ q).reshape(self.shape)

    def gradient_sq(self, f):
        return self.faces_to_cells(self.face_grad(f) ** 2)

    def solve_shifted_helmholtz(self, rhs, delta):
        """Solve ``z + delta * A z = rhs`` with ``A = -laplacian``."""
        if not delta > 0:
            raise ValueError("delta must be positive")
        rhs = _check_finite(rhs)
        coef = fft.dctn(rhs, type=2, norm="ortho")
        z = fft.idctn(coef / (1.0 + delta * self._neg_lap_eigs), type=2, norm="ortho")
        self._check_residual(z - delta * self.laplacian(z), rhs)
        return z

    def solve_poisson_zero_mean(self, rhs):
        """Zero-mean ``y`` with ``laplacian(y) == rhs``; ``rhs`` must have zero mean."""
        rhs = _check_finite(rhs)
        scale = np.linalg.norm(rhs.ravel()) / np.sqrt(rhs.size)
        if abs(rhs.mean()) > 1e-10 * max(scale, np.finfo(float).tiny):
            raise ValueError(f"right-hand side has nonzero mean {rhs.mean():.3e}")
        coef = fft.dctn(rhs, type=2, norm="ortho")
        eig = self._neg_lap_eigs.copy()
        eig.flat[0] = 1.0
        coef = -coef / eig
        coef.flat[0] = 0.0
        y = fft.idctn(coef, type=2, norm="ortho")
        self._check_residual(self.laplacian(y), rhs - rhs.mean())
        return y

    def _check_residual(self, lhs, rhs):
        denom = max(np.linalg.norm(rhs.ravel()), 1e-300)
        res = np.linalg.norm((lhs - rhs).ravel()) / denom
        # transform solves are exact up to roundoff amplified by cond(A)
        allowed = max(self.tol, 1e3 * np.finfo(float).eps * self.size)
        if np.linalg.norm(rhs.ravel()) > 0 and res > allowed:
            raise SolverError("linear solve did not meet tolerance", res)

    # -- quadrature -------------------------------------------------------------

    def mean(self, f):
        return float(np.mean(f))

    def integrate(self, f):
        return float(np.sum(f)) * self.cell_volume

    def inner(self, f, g):
        return float(np.sum(np.asarray(f) * np.asarray(g))) * self.cell_volume

    def norm_L2(self, f):
        return np.sqrt(self.inner(f, f))

    def seminorm_H1(self, f):
        return float(np.sqrt(np.sum(self.face_grad(f) ** 2) * self.cell_volume))

    def norm_Vprime_zero_mean(self, f):
        """Dual norm ``sqrt((A^{-1} f, f))`` on zero-mean fields."""
        y = self.solve_poisson_zero_mean(f)
        return float(np.sqrt(max(-self.inner(y, f), 0.0)))
