"""Two consistency checks that need no time stepping.

First, the chemical potential can be written in the order parameter u, in
z = arcsin u or in v = f(u).  On the grid the three forms differ only by
truncation error, which shrinks at second order.

Second, for a profile z with no-flux boundary conditions and a weight h,
an integration by parts gives

    int h'(z) |grad z|^2 Lap z
        = -1/3 int h''(z) |grad z|^4 + 2/3 int h(z) (|D^2 z|^2 - (Lap z)^2).

Both sides are computed by adaptive quadrature and by the grid stencils.
"""
import numpy as np
import sympy

from chdg.model import ModelParams
from chdg.verification import Profile, dpgg_identity_check, formulation_equivalence_suite

rep = formulation_equivalence_suite(lambda x: 0.3 + 0.4 * np.cos(2 * np.pi * x), ModelParams(lam=2.0))
for n, d in zip(rep.inputs["ns"], rep.details["discrepancies"]):
    print(f"n={n:4d}  " + "  ".join(f"{k}: {v:.3e}" for k, v in d.items()))
print("observed orders:", {k: [round(o, 3) for o in v] for k, v in rep.measured.items()})

x, s = sympy.symbols("x s", real=True)
prof = Profile(sympy.cos(sympy.pi * x), s**2)
rep = dpgg_identity_check(prof)
print(f"\nquadrature: lhs = {rep.details['lhs']:.12f}, rhs = {rep.details['rhs']:.12f}"
      f" (-pi^4/4 = {-np.pi**4 / 4:.12f})")
for n, (dl, dr) in zip(rep.inputs["ns"], rep.details["discrete"]):
    print(f"grid n={n:4d}: lhs = {dl:.8f}, rhs = {dr:.8f}")
