import warnings

import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given, settings, strategies as st

from bornq import densities as dn
from bornq.radial import (RadialChargeSpec, RadialMagneticProfile, active_set_fraction,
                          cumulative_flux, geometric_grid, invert_flux, radial_weak_residual,
                          solve_radial)

from oracles import PHI_ORACLE

FOUR_PI = 4 * np.pi

# 40-digit bisection values computed with mpmath
INVERT_ORACLE = [
    ((5.0, 0.0, 1.5), 0.99920223158843685662),
    ((2.0, 3.0, 1.5), 1.8203594422489093652),
]


def point_charge_solution(n=20000, q=1.0, t0=1e-4, t1=1e3):
    tau = geometric_grid(t0, t1, n)
    return solve_radial(RadialChargeSpec(tau, point_charge=FOUR_PI), q=q)


def test_cumulative_flux_examples():
    tau = np.array([0.5, 1.0, 2.0])
    np.testing.assert_array_equal(cumulative_flux(RadialChargeSpec(tau)), 0.0)
    d = cumulative_flux(RadialChargeSpec(tau, point_charge=FOUR_PI))
    np.testing.assert_allclose(d[1:], [-1.0, -0.25], rtol=1e-15)


def test_cumulative_flux_uniform_ball():
    # rho = 1: Q_enc = 4 pi t^3 / 3, d = -t / 3 up to the trapezoid error
    tau = np.linspace(0.01, 1, 2000)
    d = cumulative_flux(RadialChargeSpec(tau, density=np.ones_like(tau)))
    np.testing.assert_allclose(d, -tau / 3, rtol=1e-3)


@pytest.mark.parametrize("m", [0.0, 0.7, 3.0])
@pytest.mark.parametrize("q", [1.0, 1.4, 1.9])
def test_invert_flux_zero(m, q):
    assert invert_flux(0.0, m, q) == 0.0


def test_invert_flux_closed_form_q1():
    sigma = np.logspace(-6, 6, 100)
    np.testing.assert_allclose(invert_flux(sigma, 0.0, 1.0), sigma / np.sqrt(1 + sigma ** 2), rtol=1e-12)
    assert invert_flux(1.0, 0.0, 1.0) == pytest.approx(1 / np.sqrt(2), rel=1e-15)


@pytest.mark.parametrize("args,expected", INVERT_ORACLE)
def test_invert_flux_oracle(args, expected):
    assert invert_flux(*args) == pytest.approx(expected, rel=1e-14)


def test_invert_flux_q2():
    assert invert_flux(0.3, 1.0, 2.0) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        invert_flux(1.5, 1.0, 2.0)


def test_invert_flux_rejects_bad_input():
    with pytest.raises(ValueError):
        invert_flux(1.0, -0.1, 1.5)
    with pytest.raises(ValueError):
        invert_flux(np.nan, 0.0, 1.5)


def test_invert_flux_monotone_and_odd(rng):
    sig = np.sort(rng.normal(size=2000) * 10 ** rng.uniform(-4, 4, size=2000))
    for q, m in [(1.0, 0.0), (1.5, 2.0), (1.9, 0.3)]:
        y = invert_flux(sig, m, q)
        # strict away from the bound; there y rounds to sqrt(1 + m)
        assert np.all(np.diff(y) >= 0)
        inner = np.abs(y[:-1]) < 0.99 * np.sqrt(1 + m)
        assert np.all(np.diff(y)[inner & (np.diff(sig) > 0)] > 0)
        np.testing.assert_array_equal(invert_flux(-sig, m, q), -y)
        assert np.all(np.abs(y) <= np.sqrt(1 + m))


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e4, 1e4), st.floats(0, 5), st.floats(1.0, 1.9))
def test_invert_flux_residual(sigma, m, q):
    y, s = invert_flux(sigma, m, q, return_slack=True)
    assert abs(y * s ** (q / 2 - 1) - sigma) <= 1e-12 * (1 + abs(sigma))


def test_constitutive_roundtrip_with_flux(rng):
    # radial g and cylindrical B are orthogonal: the radial flux component is the sigma
    for _ in range(200):
        x = rng.normal(size=3)
        xh = x / np.linalg.norm(x)
        b = rng.uniform(0, 2)
        Bdir = np.array([-x[1], x[0], 0.0])
        B = b * Bdir / np.linalg.norm(Bdir)
        q = rng.uniform(1, 1.95)
        y = rng.uniform(-0.99, 0.99) * np.sqrt(1 + b * b)
        D = dn.electro_flux(y * xh, B, q)
        sigma = D @ xh
        assert invert_flux(sigma, b * b, q) == pytest.approx(y, rel=1e-10, abs=1e-14)


def test_solve_radial_zero_charge():
    tau = geometric_grid(1e-3, 50, 500)
    b = np.exp(-tau ** 2)
    sol = solve_radial(RadialChargeSpec(tau), RadialMagneticProfile(b), q=1.5)
    np.testing.assert_array_equal(sol.phi, 0.0)
    e = (1 - (1 + b * b) ** 0.75) / 1.5
    expected = FOUR_PI * (e[0] * tau[0] ** 3 / 3 + trapezoid(e * tau ** 2, tau))
    assert sol.energy == pytest.approx(expected, rel=1e-12)
    assert radial_weak_residual(sol, np.exp(-tau)) == 0.0
    assert active_set_fraction(sol, 0.5) == 0.0


def test_point_charge_derivative_and_potential():
    sol = point_charge_solution()
    assert np.interp(1.0, sol.grid, sol.dphi) == pytest.approx(-1 / np.sqrt(2), rel=1e-6)
    for t, ref in PHI_ORACLE.items():
        assert sol.interpolate(t) == pytest.approx(ref, rel=1e-6)


def test_point_charge_weak_residual():
    tau = geometric_grid(1e-4, 40, 4000)
    sol = solve_radial(RadialChargeSpec(tau, point_charge=FOUR_PI), q=1.0)
    psi = np.exp(-tau)
    assert abs(radial_weak_residual(sol, psi)) <= 1e-4 * np.max(np.abs(psi))
    # constant test function only sees the charge
    assert radial_weak_residual(sol, np.full_like(tau, 2.0)) == pytest.approx(-2 * FOUR_PI, rel=1e-12)


def test_density_weak_residual_compact_psi():
    tau = geometric_grid(1e-3, 20, 4000)
    rho = np.exp(-tau ** 2)
    sol = solve_radial(RadialChargeSpec(tau, density=rho), RadialMagneticProfile(0.5 * np.exp(-tau)), q=1.3)
    psi = np.exp(-tau) - np.exp(-tau[-1])
    assert abs(radial_weak_residual(sol, psi)) <= 1e-4


@pytest.mark.parametrize("q", [1.0, 1.5, 1.9])
def test_solution_admissible(q):
    tau = geometric_grid(1e-4, 100, 3000)
    b = 0.8 * np.exp(-tau)
    sol = solve_radial(RadialChargeSpec(tau, point_charge=50.0), RadialMagneticProfile(b), q=q)
    # the slack comes from the inversion itself and stays positive even where
    # phi' equals sqrt(1 + b^2) to double precision
    assert np.all(sol.slack > 0)
    assert np.all(sol.dphi ** 2 <= (1 + b ** 2) * (1 + 1e-15))
    assert np.all(np.diff(sol.phi) <= 0)


def test_coarse_grid_warning():
    tau = geometric_grid(1e-3, 10, 8)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        sol = solve_radial(RadialChargeSpec(tau, point_charge=FOUR_PI), q=1.5)
    assert sol.warnings and any("refine" in str(w.message) for w in rec)


def test_active_set_fraction_bounds_and_limits():
    sol = point_charge_solution(4000)
    assert 0 <= active_set_fraction(sol, 1.0) <= 1
    fr = [active_set_fraction(sol, d) for d in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(a > b for a, b in zip(fr, fr[1:]))
    with pytest.raises(ValueError):
        active_set_fraction(sol, 0.0)


def test_active_set_fraction_stable_under_inner_cutoff():
    # the near-tight region is a ball of fixed radius, so its tau^2-weighted
    # fraction converges (to a small positive number) as the cutoff shrinks
    vals = []
    for t0 in (1e-2, 1e-3, 1e-4):
        tau = geometric_grid(t0, 10, 4000)
        vals.append(active_set_fraction(solve_radial(RadialChargeSpec(tau, point_charge=FOUR_PI)), 1e-3))
    assert max(vals) - min(vals) < 1e-2 * max(vals)
    assert max(vals) < 1e-4


@pytest.mark.parametrize("q", [1.0, 1.5, 1.9])
def test_point_charge_energy_finite(q):
    energies = []
    for eps in (1e-3, 5e-4):
        tau = geometric_grid(eps, 10, 6000)
        energies.append(solve_radial(RadialChargeSpec(tau, point_charge=FOUR_PI), q=q).energy)
    assert abs(energies[1] - energies[0]) < 1e-4 * abs(energies[0])


def test_spec_validation():
    with pytest.raises(ValueError):
        RadialChargeSpec(np.array([0.0, 1.0, 2.0]))
    with pytest.raises(ValueError):
        RadialChargeSpec(np.array([1.0, 0.5, 2.0]))
    with pytest.raises(ValueError):
        solve_radial(RadialChargeSpec(np.array([1.0, 2.0, 3.0])), q=2.0)


def test_phi_oracle_reproducible():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    for t, v in PHI_ORACLE.items():
        exact = mp.quad(lambda s: 1 / mp.sqrt(1 + s ** 4), [t, 1, mp.inf])
        assert abs(float(exact) - v) < 1e-18
