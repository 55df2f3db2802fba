"""Magnetostatics of a current ring through the toroidal potential.

Minimizes the reduced energy, checks it is negative (so the minimizer is
not zero), probes the growth of the energy along a ray and lifts the
result to 3D to test the weak equation.
"""
import numpy as np

from bornq import magneto as mg
from bornq import symmetry as sy
from bornq.grid import GridSpec


def main():
    grid = mg.HalfPlaneGrid.uniform(8.0, 8.0, 129, 257)
    j = mg.ring_current(grid, amplitude=1.0, r0=1.0, width=0.25)
    for q in (1.3, 1.5, 1.8):
        u, rep = mg.minimize_J(j, q)
        big = mg.coercivity_probe(u, q, np.geomspace(1e3, 1e5, 9))
        small = mg.coercivity_probe(u, q, np.geomspace(1e-5, 1e-4, 5))
        print(f"q={q}: energy {rep.energy_final:.6e} after {rep.iterations} Newton steps, "
              f"growth exponents {small:.3f} (small) / {big:.3f} (large)")

    u, _ = mg.minimize_J(j, 1.5)
    spec = GridSpec.centered(2.0, 81)
    A, J = mg.lift_to_3d(u, spec), mg.lift_current(j, spec)
    B = sy.equivariant_field(spec, alpha=lambda r, z: np.exp(-((r - 1) ** 2 + z ** 2) / 0.09))
    res = mg.weak_residual_magneto(A, J, B, 1.5)
    print(f"weak residual against a toroidal test field: {res:.3e} (O(h^2), h = {spec.h:.3f})")


if __name__ == "__main__":
    main()
