"""Independent reference values shared by several test modules."""
import numpy as np
from scipy.integrate import trapezoid

from bornq.radial import _radial_density, charge_pairing

# Born-Infeld point charge Q = 4 pi: phi(t) = int_t^inf ds / sqrt(1 + s^4),
# 40-digit adaptive quadrature (mpmath)
PHI_ORACLE = {1e-3: 1.8530746773013720184, 0.1: 1.7540756772597076499,
              1.0: 0.92703733865068595922, 3.0: 0.33292391263147050652}


def sphere_fraction_in_cube(tau, half_width, n=4000):
    """Fraction of the sphere of radius tau lying in [-L, L]^3 (Fibonacci points)."""
    k = np.arange(n) + 0.5
    th = np.arccos(1 - 2 * k / n)
    ph = np.pi * (1 + 5 ** 0.5) * k
    m = np.max(np.abs(np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1)), axis=1)
    return np.array([np.mean(t * m <= half_width) for t in np.atleast_1d(tau)])


def radial_energy_in_box(sol, half_width):
    """Radial energy with the field part restricted to the cube [-L, L]^3."""
    t = sol.grid
    e = _radial_density(sol)
    w = sphere_fraction_in_cube(t, half_width)
    field = 4 * np.pi * (e[0] * t[0] ** 3 / 3 + trapezoid(e * t * t * w, t))
    return field - charge_pairing(sol.charge, sol.phi, sol.phi_at_origin())
