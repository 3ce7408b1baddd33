"""
Disjoint coupling and damping: a mode that never decays
========================================================

Coupling lives on (0, pi), damping on (pi, 2 pi).  The closed-form
solution keeps y_t = 0 wherever the damping acts, so nothing is ever
dissipated.  We check the formula, run the simulator next to it and look
at the eigenvalue it produces.
"""

import numpy as np

from coupled_waves import counterexample as ce
from coupled_waves import frequency as fq
from coupled_waves.discretization import build_generator

# the formula solves the PDE pointwise away from x = 0, pi, 2 pi
x = np.linspace(0.1, 2 * np.pi - 0.1, 7)
ry, rz = ce.residual(1.7, x[np.abs(x - np.pi) > 1e-6])
print("max residual:", max(abs(ry).max(), abs(rz).max()))
print("exact energy: 386 pi =", ce.EXACT_ENERGY)

# simulator vs closed form: second order in h with dt = h
for n in (99, 199, 399):
    g = ce.grid(n)
    rep = ce.compare_with_simulation(g, g.h, 10.0)
    print(f"n = {n:4d}  rel. error {rep.max_rel_error:.2e}  energy drift {rep.energy_drift:.1e}")

# on the grid the undamped pair becomes +-5i plus an O(h^4) real part
for n in (99, 199, 399):
    g = ce.grid(n)
    A = build_generator(g, ce.coefficients(g))
    lam = fq.spectrum(A, targets=[5j], k=2).closest(5j)
    print(f"n = {n:4d}  eigenvalue near 5i: {lam.real:.2e} {lam.imag:+.6f}i")

# so the resolvent along i R blows up at sigma = 5 as the grid is refined
for n in (199, 399):
    g = ce.grid(n)
    A = build_generator(g, ce.coefficients(g))
    sweep = fq.resolvent_sweep(A, 4.9, 5.1, 21)
    print(f"n = {n:4d}  peak of ||(A - i sigma)^-1||: %.3e at sigma = %.6f" % sweep.peak()[::-1])
