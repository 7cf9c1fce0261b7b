"""Growth rates of small cosine perturbations.

Linearising about u = m, the mode cos(k x) with k = q pi / L grows at

    sigma = -k^2 (a(m)(k^2 + 1) - lambda) / (1 + eps k^2).

Short runs of the implicit stepper reproduce this rate.
"""
import numpy as np

from chdg.model import ModelParams
from chdg.verification import dispersion_oracle, measure_growth_rate

cases = [
    (0.0, 3.0, 0.0, 1, 2 * np.pi),
    (0.0, 1.0, 0.0, 1, 2 * np.pi),
    (0.3, 3.0, 0.0, 1, 2 * np.pi),
    (0.0, 3.0, 0.5, 1, 2 * np.pi),
]
print("   m   lambda  eps  q     oracle      measured    rel.err")
for m, lam, eps, q, L in cases:
    p = ModelParams(lam=lam, eps=eps)
    s0 = dispersion_oracle(m, p, q, L)
    s1 = measure_growth_rate(m, p, q, L, n=64)
    print(f"{m:5.2f} {lam:6.1f} {eps:5.2f} {q:2d}  {s0:+.6f}  {s1:+.6f}  {abs(s1 - s0) / abs(s0):.2e}")

# the band of unstable wavenumbers at m = 0, lambda = 3: a(0) = 2, so k^2 < lambda/2 - 1
k = np.linspace(0, 1, 6)
print("\nk    sigma(m=0, lambda=3)")
for kk in k:
    print(f"{kk:.1f}  {dispersion_oracle(0.0, ModelParams(lam=3.0), kk, np.pi):+.4f}")
