"""Certify radii where the p-Laplacian of a convex function of the map is negative.

With p = 2 the same scan finds nothing: harmonic maps pull convex functions
back to subharmonic ones.
"""

import numpy as np

from pharmonic import (
    ModelParameters,
    SolverConfig,
    analyze_terms,
    integrate,
    linear_profile,
    make_domain_warp,
    make_target_warp,
    scan_sign,
)

g, j = make_domain_warp(3.0), make_target_warp(0.5)
grid = np.logspace(-6, 3, 400)
h = linear_profile().certify(j, grid)

sol = integrate(ModelParameters(2, 2.5, 3.0, 0.5), g, j, SolverConfig(s_max=1e4))
cert = scan_sign(sol, h, 1.0, 1e4)
print(cert.render())

terms = analyze_terms(sol, h, (1e2, 1e4))
print(f"\nA2 dominates the tail: {terms.A2_dominates}")

control = integrate(ModelParameters(2, 2.0, 3.0, 0.5), g, j, SolverConfig(s_max=1e4), check_params=False)
print(f"p = 2 control: {len(scan_sign(control, h, 1.0, 1e4).points)} certified radii")
