"""Tour of the constitutive functions and their truncations.

The potential F(u) = (1-u) log(1-u) + (1+u) log(1+u) has derivative
f = log((1+u)/(1-u)), and the diffusion coefficient a(u) = 2/(1-u^2) is f'.
Near the pure phases both blow up; the solver uses truncated versions
that agree with the originals away from +-1.
"""
import numpy as np

from chdg import model

print("u       F(u)      f(u)       a(u)      a - 2a'^2/a''   2/(1+3u^2)")
for u in (0.0, 0.25, 0.5, 0.75, 0.9, 0.99):
    a, ap, app = model.a(u), model.a_prime(u), model.a_second(u)
    print(f"{u:<6} {float(model.F(u)):9.6f} {float(model.f(u)):9.5f} {float(a):10.4f}"
          f"   {float(a - 2 * ap**2 / app):12.9f}   {2 / (1 + 3 * u * u):.9f}")

# the entropy variable v = f(u) has the explicit inverse j(v) = tanh(v/2)
v = np.linspace(-8, 8, 5)
print("\nj(v) =", model.j(v))
print("f(j(v)) - v =", model.f(model.j(v)) - v)

delta = 0.05
print(f"\ntruncation at delta = {delta}: f_delta follows f up to 1 - 2 delta = {1 - 2 * delta}")
for u in (0.8, 0.9, 0.92, 0.94, 0.949):
    print(f"  u={u:<6} f={float(model.f(u)):8.4f}  f_delta={float(model.f_delta(u, delta)):10.4f}"
          f"  a={float(model.a(u)):8.3f}  a_delta={float(model.a_delta(u, delta)):8.3f}")
print(f"a_delta saturates at K = a(1 - delta/2) = {model.default_K(delta):.4f}")
