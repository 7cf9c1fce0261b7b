"""Independent oracles for the solver and the model algebra.

Linearised growth rate
----------------------
Write ``u = m + A cos(k x)`` with ``A`` small and ``k = q pi / L``.  Since
``a = f'``, the chemical potential linearises to
``w = f(m) - lam m + A cos(k x) [a(m) k^2 + a(m) - lam + eps d/dt]``
(the ``|grad u|^2`` term is quadratic in ``A``).  Inserting into
``u_t = Lap w`` gives ``dA/dt = -k^2 [a(m)(k^2 + 1) - lam] A - eps k^2 dA/dt``,
so ``A ~ exp(sigma t)`` with

    sigma = -k^2 (a(m) (k^2 + 1) - lam) / (1 + eps k^2).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy
from scipy import integrate, linalg

from . import model
from .grid_ops import Grid
from .regularize import regularize_initial
from .stepper import StepError, StepperConfig, chemical_potential, run


@dataclass
class OracleReport:
    name: str
    inputs: dict
    measured: object
    reference: object
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: measured={_fmt(self.measured)} reference={_fmt(self.reference)} tol={self.tolerance:g}"

    def as_dict(self):
        return {
            "name": self.name, "inputs": self.inputs, "measured": _plain(self.measured),
            "reference": _plain(self.reference), "tolerance": self.tolerance,
            "passed": bool(self.passed), "details": _plain(self.details),
        }


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _fmt(x):
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    if isinstance(x, (float, np.floating)):
        return f"{x:.6g}"
    return str(x)


def observed_orders(errors, ratio=2.0):
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(ratio)


# -- linear stability ------------------------------------------------------------

def dispersion_oracle(m, params, q_mode, L):
    """Continuum growth rate of the mode ``cos(q pi x / L)`` about ``u = m``."""
    k2 = (q_mode * np.pi / L) ** 2
    return float(-k2 * (model.a(m) * (k2 + 1) - params.lam) / (1 + params.eps * k2))


def measure_growth_rate(m, params, q_mode, L, n=128, amplitude=1e-6, dt=None,
                        t_end=None, scheme="convex_splitting"):
    """Fit the modal growth rate of a stepper run started at ``m + A cos(q pi x/L)``.

    Uses the projection onto the mode at the start and end of the run.
    """
    grid = Grid.interval(n, L)
    sigma = dispersion_oracle(m, params, q_mode, L)
    if dt is None:
        dt = 2e-4 / max(abs(sigma), 1e-3)
    if t_end is None:
        t_end = 200 * dt
    mode = grid.sample(lambda x: np.cos(q_mode * np.pi * x / L))
    u0 = m + amplitude * mode
    cfg = StepperConfig(dt=dt, scheme=scheme, newton_tol=1e-13)
    state = run(grid, u0, params, cfg, t_end)
    amp0 = grid.inner(u0 - m, mode)
    amp1 = grid.inner(state.u - m, mode)
    return float(np.log(amp1 / amp0) / t_end)


# -- formulation equivalence ----------------------------------------------------------

def formulation_discrepancies(grid, u, params, u_t=None):
    """Pairwise sup-norm differences of the three chemical-potential evaluators."""
    wu = model.mu_residual_u(grid, u, u_t, params)
    wz = model.mu_residual_z(grid, u, model.phi(u), u_t, params)
    wv = model.mu_residual_v(grid, u, model.f(u), u_t, params)
    sup = lambda d: float(np.max(np.abs(d)))
    return {"u-z": sup(wu - wz), "u-v": sup(wu - wv), "z-v": sup(wz - wv)}


def formulation_equivalence_suite(profile, params, ns=(64, 128, 256), length=1.0,
                                  ndims=1, order=2.0, order_tol=0.2, name=None):
    """Refinement study of the three formulations on ``profile(*coords)``."""
    disc = []
    for n in ns:
        grid = Grid((n,) * ndims, (length,) * ndims)
        u = grid.sample(profile)
        if np.max(np.abs(u)) > 1 - 1e-3:
            raise ValueError("profile is not separated from +-1")
        disc.append(formulation_discrepancies(grid, u, params))
    keys = ("u-z", "u-v", "z-v")
    if all(d[k] == 0 for d in disc for k in keys):
        orders = {k: [] for k in keys}
        ok = True
    else:
        orders = {k: observed_orders([d[k] for d in disc]).tolist() for k in keys}
        ok = all(abs(o - order) <= order_tol for k in keys for o in orders[k])
    return OracleReport(
        name=name or "formulation equivalence",
        inputs={"ns": list(ns), "ndims": ndims},
        measured={k: orders[k] for k in keys},
        reference=order, tolerance=order_tol, passed=ok,
        details={"discrepancies": disc},
    )


# -- integration-by-parts identity for the entropy estimate ------------------------------

_x, _y, _s = sympy.symbols("x y s", real=True)


@dataclass
class Profile:
    """Analytic test profile ``z(x[, y])`` on ``[0, L]^d`` and weight ``h(s)``."""

    z: sympy.Expr
    h: sympy.Expr
    ndims: int = 1
    length: float = 1.0

    def __post_init__(self):
        vars_ = (_x, _y)[: self.ndims]
        self.vars = vars_
        z = sympy.sympify(self.z)
        grad = [sympy.diff(z, v) for v in vars_]
        hess = [[sympy.diff(g, v) for v in vars_] for g in grad]
        self._z = sympy.lambdify(vars_, z, "numpy")
        self._grad = [sympy.lambdify(vars_, g, "numpy") for g in grad]
        self._hess = [[sympy.lambdify(vars_, e, "numpy") for e in row] for row in hess]
        h = sympy.sympify(self.h)
        self._h = [sympy.lambdify(_s, sympy.diff(h, _s, k), "numpy") for k in range(3)]
        self._check_neumann()

    def _call(self, fn, *pts):
        return np.broadcast_to(fn(*pts), np.broadcast(*pts).shape).astype(float)

    def _check_neumann(self):
        t = np.linspace(0, self.length, 41)
        for axis in range(self.ndims):
            for side in (0.0, self.length):
                if self.ndims == 1:
                    pts = (np.array([side]),)
                else:
                    pts = (np.full_like(t, side), t) if axis == 0 else (t, np.full_like(t, side))
                dn = self._call(self._grad[axis], *pts)
                if np.max(np.abs(dn)) > 1e-10:
                    raise ValueError("profile does not satisfy the no-flux condition")

    def integrands(self, *pts):
        """Pointwise (lhs, quartic, hessian) integrands of the identity."""
        z = self._call(self._z, *pts)
        g = [self._call(fn, *pts) for fn in self._grad]
        H = [[self._call(fn, *pts) for fn in row] for row in self._hess]
        g2 = sum(gi * gi for gi in g)
        lap = sum(H[i][i] for i in range(self.ndims))
        hess2 = sum(H[i][k] ** 2 for i in range(self.ndims) for k in range(self.ndims))
        h0, h1, h2 = (self._call(fn, z) for fn in self._h)
        return h1 * g2 * lap, h2 * g2 * g2, h0 * (hess2 - lap * lap)


def _quadrature_sides(profile, npts=400):
    L = profile.length
    if profile.ndims == 1:
        opts = dict(limit=500, epsabs=1e-12, epsrel=1e-12)
        parts = [
            integrate.quad(lambda x, k=k: float(profile.integrands(np.array([x]))[k][0]), 0, L, **opts)[0]
            for k in range(3)
        ]
    else:
        xg, wg = np.polynomial.legendre.leggauss(npts)
        xg, wg = (xg + 1) * L / 2, wg * L / 2
        X, Y = np.meshgrid(xg, xg, indexing="ij")
        W = np.outer(wg, wg)
        parts = [float(np.sum(W * c)) for c in profile.integrands(X, Y)]
    lhs = parts[0]
    rhs = -parts[1] / 3 + 2 * parts[2] / 3
    return lhs, rhs


def discrete_hessian(grid, z):
    """Centred second differences with even reflection at the boundary."""
    zp = np.pad(z, 1, mode="symmetric")
    h = grid.h
    nd = grid.ndims
    core = tuple(slice(1, -1) for _ in range(nd))
    H = [[None] * nd for _ in range(nd)]

    def shifted(offsets):
        return zp[tuple(slice(1 + o, zp.shape[i] - 1 + o) for i, o in enumerate(offsets))]

    for i in range(nd):
        e = [0] * nd
        e[i] = 1
        H[i][i] = (shifted(e) - 2 * zp[core] + shifted([-v for v in e])) / h[i] ** 2
        for k in range(i + 1, nd):
            pp, pm, mp, mm = ([0] * nd for _ in range(4))
            pp[i], pp[k] = 1, 1
            pm[i], pm[k] = 1, -1
            mp[i], mp[k] = -1, 1
            mm[i], mm[k] = -1, -1
            H[i][k] = H[k][i] = (shifted(pp) - shifted(pm) - shifted(mp) + shifted(mm)) / (4 * h[i] * h[k])
    return H


def discrete_dpgg_sides(grid, profile):
    z = grid.sample(profile._z)
    g2 = grid.gradient_sq(z)
    lap = grid.laplacian(z)
    H = discrete_hessian(grid, z)
    hess2 = sum(H[i][k] ** 2 for i in range(grid.ndims) for k in range(grid.ndims))
    h0, h1, h2 = (profile._call(fn, z) for fn in profile._h)
    lhs = grid.integrate(h1 * g2 * lap)
    rhs = -grid.integrate(h2 * g2 * g2) / 3 + 2 * grid.integrate(h0 * (hess2 - lap * lap)) / 3
    return lhs, rhs


def dpgg_identity_check(profile, ns=(32, 64, 128, 256), tolerance=None, name=None):
    """Check the integration-by-parts identity by quadrature and by the grid stencils."""
    if tolerance is None:
        tolerance = 1e-8 if profile.ndims == 1 else 1e-6
    lhs, rhs = _quadrature_sides(profile)
    disc = []
    for n in ns:
        grid = Grid((n,) * profile.ndims, (profile.length,) * profile.ndims)
        disc.append(discrete_dpgg_sides(grid, profile))
    errs = [max(abs(dl - lhs), abs(dr - lhs)) for dl, dr in disc]
    scale = 1.0 + abs(lhs)
    if max(errs) < 1e-10 * scale:
        orders, converging = [], True
    else:
        orders = observed_orders(errs).tolist()
        converging = all(o >= 1.0 for o in orders) and errs[-1] <= errs[0]
    gap = abs(lhs - rhs)
    return OracleReport(
        name=name or f"DPGG identity ({profile.ndims}D)",
        inputs={"z": str(profile.z), "h": str(profile.h), "ns": list(ns)},
        measured=gap, reference=0.0, tolerance=tolerance,
        passed=gap <= tolerance and converging,
        details={"lhs": lhs, "rhs": rhs, "discrete": disc, "discrete_errors": errs,
                 "discrete_orders": orders},
    )


# -- reference integration -----------------------------------------------------------

class ReferenceError(RuntimeError):
    pass


def reference_integrate(grid, u0, params, t_end, rtol=1e-10, atol=1e-12):
    """Integrate the semi-discrete system with an adaptive explicit Runge-Kutta method.

    Uses the same spatial operators as the stepper but no time splitting.
    """
    if grid.size > 32 ** grid.ndims:
        raise ValueError("reference integration is meant for tiny grids (n <= 32)")
    L = grid.L.toarray()
    bound = 1 - params.delta
    lu = linalg.lu_factor(np.eye(grid.size) - params.eps * L) if params.eps > 0 else None

    def rhs(t, u):
        if not np.all(np.abs(u) < bound):
            # rejected trial stage: a NaN forces the integrator to shrink the step
            return np.full_like(u, np.nan)
        w = chemical_potential(grid, u, params).ravel() - params.lam * u
        du = L @ w
        return linalg.lu_solve(lu, du) if lu is not None else du

    u0 = np.asarray(u0, dtype=float)
    sol = integrate.solve_ivp(rhs, (0.0, t_end), u0.ravel(), method="DOP853",
                              rtol=rtol, atol=atol)
    if not sol.success:
        raise ReferenceError(sol.message)
    if np.max(np.abs(sol.y)) >= bound:
        raise ReferenceError("reference trajectory lost separation")
    return sol.y[:, -1].reshape(grid.shape)


# -- delta continuation ------------------------------------------------------------

def delta_continuation_study(grid, u0, params, deltas, t_end, dt, tau=0.01,
                             floor_tol=0.2, name="delta continuation"):
    """Run regularise + integrate for each ``delta`` and compare the end states."""
    finals, floors, failures = [], [], {}
    for d in deltas:
        p = model.ModelParams(lam=params.lam, eps=params.eps, delta=d, p=params.p)
        gaps = []

        def emit(rec, gaps=gaps):
            if rec.t >= tau - 1e-12:
                gaps.append(rec.separation_gap)

        try:
            start = regularize_initial(grid, u0, d)
            state = run(grid, start, p, StepperConfig(dt=dt), t_end, emit=emit)
        except (StepError, ValueError) as exc:  # report names the failing member
            failures[d] = str(exc)
            continue
        finals.append(state.u)
        floors.append(min(gaps))
    cauchy = [grid.norm_L2(a - b) for a, b in zip(finals, finals[1:])]
    decreasing = all(c1 <= c0 for c0, c1 in zip(cauchy, cauchy[1:]))
    positive = bool(floors) and min(floors) > 0
    spread = (max(floors) - min(floors)) / max(floors) if floors else np.inf
    ok = not failures and decreasing and positive and spread <= floor_tol
    return OracleReport(
        name=name, inputs={"deltas": list(deltas), "t_end": t_end, "dt": dt, "tau": tau},
        measured={"cauchy": cauchy, "floors": floors}, reference="decreasing, positive floor",
        tolerance=floor_tol, passed=ok, details={"failures": failures, "floor_spread": spread},
    )
