"""Integrate the canonical profile and look at what the solver produced.

Run with ``python3 demos/solve_and_diagnose.py``.
"""

import numpy as np

from pharmonic import (
    ModelParameters,
    SolverConfig,
    integrate,
    make_domain_warp,
    make_target_warp,
    monotone_quantity,
    validate_parameters,
)

params = ModelParameters(n=2, p=2.5, delta=3.0, sigma=0.5, alpha=1.0)
print(validate_parameters(params).render())

g = make_domain_warp(params.delta)
j = make_target_warp(params.sigma)
sol = integrate(params, g, j, SolverConfig(s_max=1e4))
print(f"\n{sol.steps} accepted steps, {sol.rejections} rejected, max residual {sol.max_residual:.2e}")

# The profile saturates: f tends to a finite limit while f' decays like a power.
for s in (1e-3, 1.0, 10.0, 1e2, 1e3, 1e4):
    k = np.searchsorted(sol.s, s)
    k = min(k, sol.s.size - 1)
    print(f"s={sol.s[k]:10.4g}  f={sol.f[k]:.10f}  f'={sol.fp[k]:.4e}")

q = monotone_quantity(sol)
print(f"\nmonotone quantity: Q(1)={np.interp(1.0, sol.s, q):.6f}  Q(s_max)={q[-1]:.6f}")
print("Q never decreases:", bool(np.all(np.diff(q) >= -1e-8 * np.abs(q[:-1]))))
