"""Cylindrical splitting of an equivariant field and the identities it obeys."""
import numpy as np

from bornq import magneto as mg
from bornq import symmetry as sy
from bornq.grid import GridSpec


def main():
    rng = np.random.default_rng(0)
    print("  n   pythagoras   curl-orth (rho,tau)   curl-orth (tau,zeta)   |grad A|^2")
    for n in (33, 65, 129):
        spec = GridSpec.centered(2.0, n)
        A = sy.random_equivariant_field(spec, np.random.default_rng(1))
        c = sy.decompose(A)
        e = sy.curl_orthogonality_check(c)
        print(f"{n:4d}   {sy.pythagoras_defect(A, c):.1e}      {e.e1:.3e}             "
              f"{e.e2:.3e}              {sy.nabla_pythagoras_check(c):.3e}")

    # a radial gradient field has no curl, so it cannot balance a ring current
    spec = GridSpec.centered(2.0, 65)
    J = mg.lift_current(mg.ring_current(mg.HalfPlaneGrid.uniform(4.0, 4.0, 129, 257)), spec)
    rep = sy.symmetry_nullity_check(None, J, [J], 1.5, dpsi=lambda t: -2 * t * np.exp(-t * t))
    print(f"<J, J> = {rep.pairings[0]:.4e}, curl term = {rep.curl_terms[0]:.2e}, "
          f"radial solution possible: {rep.radial_solution_possible}")

    field = sy.random_equivariant_field(spec, rng)
    best, t = sy.best_split_norm(field, 1.5, np.geomspace(0.05, 5, 12))
    print(f"sum-space surrogate norm {best:.4f} at threshold {t:.3f}")


if __name__ == "__main__":
    main()
