"""Interpolated Born-Infeld electrostatics and magnetostatics: pointwise model,
radial and 3D electrostatic solvers, an axisymmetric magnetostatic solver and
checks of the cylindrical symmetry identities."""
from .densities import (DomainError, admissible, electro_density, electro_flux, fundest_check,
                        growth_bounds, growth_constant, magneto_density, magneto_field, q_star, slack)
from .grid import GridField, GridSpec
from .radial import (RadialChargeSpec, RadialMagneticProfile, RadialSolution, active_set_fraction,
                     cumulative_flux, invert_flux, radial_energy, radial_weak_residual, solve_radial)
from .electro import (ElectroGridProblem, energy_IB_grid, minimize_IB, project_ellipsoid,
                      variational_inequality_check, weak_residual_grid)
from .magneto import (CurrentProfile, HalfPlaneGrid, ToroidalPotential, coercivity_probe, energy_J,
                      lift_to_3d, minimize_J, reduced_curl, weak_residual_magneto)
from .symmetry import (CylComponents, curl_orthogonality_check, decompose, g_action,
                       nabla_pythagoras_check, radial_gradient_field, sum_space_split,
                       symmetry_nullity_check)
from .report import SolveReport

__version__ = "0.1.0"
