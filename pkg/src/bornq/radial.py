"""Semi-analytic solver for radially symmetric electrostatics.

With a radial charge and a magnetic field ``B = b(|x|)/r (-x2, x1, 0)`` the
potential is radial, ``grad(phi) . B = 0`` and the field equation collapses
to a flux balance on spheres:

    4 pi t^2 d(t) = -Q_enc(t),      phi'(t) / (1 + b^2 - phi'^2)**(1 - q/2) = d(t).

The second relation is inverted node by node (:func:`invert_flux`), then
``phi`` is integrated inward from the outer node.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .densities import check_q

FOUR_PI = 4.0 * np.pi


@dataclass
class RadialChargeSpec:
    """Point charge at the origin plus a density sampled on ``grid``."""

    grid: np.ndarray
    density: np.ndarray = None
    point_charge: float = 0.0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        t = self.grid
        if t.ndim != 1 or t.size < 3:
            raise ValueError("radial grid needs at least 3 nodes")
        if t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise ValueError("radial grid must be positive and strictly increasing")
        if self.density is None:
            self.density = np.zeros_like(t)
        self.density = np.broadcast_to(np.asarray(self.density, dtype=float), t.shape).copy()
        if not np.all(np.isfinite(self.density)):
            raise ValueError("charge density must be finite on the grid")
        self.point_charge = float(self.point_charge)

    def enclosed(self):
        """Charge inside each sphere; the core ``[0, t0]`` uses rho(t0) t0^3 / 3."""
        t, rho = self.grid, self.density
        core = rho[0] * t[0] ** 3 / 3.0
        return self.point_charge + FOUR_PI * (core + cumulative_trapezoid(rho * t * t, t, initial=0.0))

    def total(self):
        return float(self.enclosed()[-1])


@dataclass
class RadialMagneticProfile:
    """Amplitude ``b(t)`` of the cylindrical magnetic field on the radial grid."""

    b: np.ndarray

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if not np.all(np.isfinite(self.b)):
            raise ValueError("magnetic profile must be finite")

    @classmethod
    def zero(cls, grid):
        return cls(np.zeros_like(np.asarray(grid, dtype=float)))


@dataclass
class RadialSolution:
    grid: np.ndarray
    dphi: np.ndarray
    phi: np.ndarray
    flux: np.ndarray
    slack: np.ndarray
    b: np.ndarray
    q: float
    charge: RadialChargeSpec
    energy: float = 0.0
    warnings: list = field(default_factory=list)

    def displacement(self):
        """Radial displacement recomputed from ``dphi`` through the constitutive law."""
        return self.dphi * self.slack ** (0.5 * self.q - 1.0)

    def phi_at_origin(self):
        """phi(0+) by linear extrapolation from the two innermost nodes."""
        t, p = self.grid, self.phi
        return float(p[0] - t[0] * (p[1] - p[0]) / (t[1] - t[0]))

    def interpolate(self, radius):
        """phi at arbitrary radii: linear inside the grid, extrapolated core,
        and the ``phi(tN) tN / t`` far-field law beyond the outer node."""
        radius = np.asarray(radius, dtype=float)
        t, p = self.grid, self.phi
        inner = self.phi_at_origin() + (p[0] - self.phi_at_origin()) * radius / t[0]
        out = np.interp(radius, t, p)
        out = np.where(radius < t[0], inner, out)
        with np.errstate(divide="ignore"):
            far = p[-1] * t[-1] / radius
        return np.where(radius > t[-1], far, out)


def cumulative_flux(spec: RadialChargeSpec):
    """Radial displacement ``d(t) = -Q_enc(t) / (4 pi t^2)``."""
    t = spec.grid
    return -spec.enclosed() / (FOUR_PI * t * t)


# -- constitutive inversion -----------------------------------------------

_NEWTON_MAX = 80


def _solve_increasing(fun, x, lo, hi, tol, floor=1e-300):
    """Vectorized safeguarded Newton for increasing ``fun`` on brackets [lo, hi].

    Stops once every step is below ``tol * max(|x|, floor)``."""
    for _ in range(_NEWTON_MAX):
        val, der = fun(x)
        lo = np.where(val < 0, x, lo)
        hi = np.where(val > 0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = val / der
        cand = x - step
        small = np.abs(step) <= tol * np.maximum(np.abs(x), floor)
        bad = ~np.isfinite(cand) | (cand < lo) | (cand > hi)
        cand = np.where(bad & ~small, 0.5 * (lo + hi), np.clip(cand, lo, hi))
        hit = val == 0
        x = np.where(hit, x, cand)
        if np.all(small | hit):
            break
    return x


def invert_flux(sigma, m, q, return_slack=False):
    """Solve ``y / (1 + m - y^2)**(1 - q/2) = sigma`` for ``|y| < sqrt(1 + m)``.

    The left side is odd, strictly increasing and onto R for q < 2, so the
    root is unique.  Weak fluxes are solved for ``y`` directly, strong fluxes
    for the slack ``s = 1 + m - y^2`` in log variables, which keeps full
    precision when ``y`` is within rounding of the bound.  With
    ``return_slack`` the accurately computed slack is returned as well.

    At q = 2 the law is ``y = sigma`` and only ``|sigma| < sqrt(1 + m)`` is
    solvable; anything else raises ``ValueError``.
    """
    q = check_q(q)
    sigma = np.asarray(sigma, dtype=float)
    m = np.broadcast_to(np.asarray(m, dtype=float), sigma.shape)
    if np.any(m < 0) or not np.all(np.isfinite(sigma)) or not np.all(np.isfinite(m)):
        raise ValueError("invert_flux needs finite sigma and m >= 0")
    a2 = 1.0 + m
    mag = np.abs(sigma)
    p = 1.0 - 0.5 * q  # exponent of the slack in the denominator

    if p == 0.0:
        if np.any(mag * mag >= a2):
            raise ValueError("q = 2 constitutive law has no admissible solution for |sigma| >= sqrt(1+m)")
        y, s = mag, a2 - mag * mag
    else:
        # crossover at y^2 = a2/2, where sigma_c = sqrt(a2/2) (a2/2)^(-p)
        sig_c = np.sqrt(0.5 * a2) * (0.5 * a2) ** (-p)
        weak = mag <= sig_c
        y = np.zeros_like(mag)
        s = np.array(a2, dtype=float, copy=True)

        if np.any(weak):
            sw, aw = mag[weak], a2[weak]

            def fy(v):
                s_ = aw - v * v
                f = v * s_ ** (-p) - sw
                d = s_ ** (-p - 1.0) * (s_ + 2.0 * p * v * v)
                return f, d

            y0 = np.minimum(sw * aw ** p, np.sqrt(0.5 * aw))
            yw = _solve_increasing(fy, y0, np.zeros_like(sw), np.sqrt(0.5 * aw) * (1 + 1e-15), 1e-15)
            y[weak] = yw
            s[weak] = aw - yw * yw

        strong = ~weak
        if np.any(strong):
            ss, as_ = mag[strong], a2[strong]
            ls = np.log(ss)

            # in u = log s: 0.5 log(a2 - e^u) - p u - log sigma = 0, decreasing in u
            def fu(u):
                e = np.exp(u)
                f = -(0.5 * np.log(as_ - e) - p * u - ls)
                d = 0.5 * e / (as_ - e) + p
                return f, d

            hi = np.log(0.5 * as_)
            u0 = np.minimum((0.5 * np.log(as_) - ls) / p, hi)
            lo = np.minimum(u0, hi) - 1.0
            # lower bracket: fu(lo) < 0 required; widen until it holds
            for _ in range(60):
                f_lo, _d = fu(lo)
                if np.all(f_lo < 0):
                    break
                lo = np.where(f_lo < 0, lo, lo - 2.0 * np.abs(lo) - 1.0)
            u = _solve_increasing(fu, np.clip(u0, lo, hi), lo, hi, 1e-15, floor=1.0)
            st = np.exp(u)
            s[strong] = st
            y[strong] = np.sqrt(as_ - st)

    y = np.sign(sigma) * y
    if np.ndim(y) == 0:
        y, s = float(y), float(s)
    return (y, s) if return_slack else y


# -- solver ---------------------------------------------------------------

def solve_radial(charge: RadialChargeSpec, bprof: RadialMagneticProfile = None, q=1.0):
    """Radial minimizer of the electrostatic energy.

    ``phi`` vanishes at infinity; beyond the last node ``phi'`` is taken to
    follow the far-field ``1/t^2`` decay, so ``phi(tN) = -phi'(tN) tN``.
    The reported energy covers the grid ``[t0, tN]`` plus the core ``[0, t0]``
    and includes the pairing ``<rho, phi>``.
    """
    q = check_q(q, hi_open=True)
    t = charge.grid
    if bprof is None:
        bprof = RadialMagneticProfile.zero(t)
    b = np.broadcast_to(bprof.b, t.shape).astype(float)
    d = cumulative_flux(charge)
    dphi, s = invert_flux(d, b * b, q, return_slack=True)
    tail = -dphi[-1] * t[-1]
    running = cumulative_trapezoid(dphi, t, initial=0.0)
    phi = tail - (running[-1] - running)

    notes = []
    jump = np.max(np.abs(np.diff(dphi))) if t.size > 1 else 0.0
    if jump > 0.5:
        msg = f"radial grid too coarse: adjacent phi' jump {jump:.3f} > 0.5, refine the grid"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    sol = RadialSolution(grid=t.copy(), dphi=dphi, phi=phi, flux=d, slack=s, b=b.copy(),
                         q=q, charge=charge, warnings=notes)
    sol.energy = radial_energy(sol)
    return sol


def _radial_density(sol):
    # electro_density with g radial and B azimuthal, via the accurate slack
    with np.errstate(divide="ignore"):
        return -np.expm1(0.5 * sol.q * np.log(sol.slack)) / sol.q


def charge_pairing(charge: RadialChargeSpec, values, phi0):
    """``<rho, psi>`` for ``psi`` sampled on the charge grid, ``phi0 = psi(0+)``."""
    t = charge.grid
    core = charge.density[0] * values[0] * t[0] ** 3 / 3.0
    return charge.point_charge * phi0 + FOUR_PI * (core + trapezoid(charge.density * values * t * t, t))


def radial_energy(sol: RadialSolution):
    t = sol.grid
    e = _radial_density(sol)
    field_part = FOUR_PI * (e[0] * t[0] ** 3 / 3.0 + trapezoid(e * t * t, t))
    return float(field_part - charge_pairing(sol.charge, sol.phi, sol.phi_at_origin()))


def radial_weak_residual(sol: RadialSolution, psi):
    """``4 pi int D psi' t^2 dt - <rho, psi>`` for a radial test function.

    ``psi`` is sampled on ``sol.grid`` (or a callable of the radius) and
    treated as piecewise linear, so the flux integral is
    ``sum avg(D t^2) * (psi[i+1] - psi[i])`` over grid intervals.  ``D`` is
    recomputed from ``phi'`` through the constitutive law, so the value
    measures how well the inversion balances the charge.  The core
    ``[0, t0]`` enters through the extrapolated ``psi(0+)``.
    """
    t = sol.grid
    psi = np.asarray(psi(t) if callable(psi) else psi, dtype=float)
    psi0 = float(psi[0] - t[0] * (psi[1] - psi[0]) / (t[1] - t[0]))
    Dt2 = sol.displacement() * t * t
    core = Dt2[0] * (psi[0] - psi0)
    lhs = FOUR_PI * (core + np.sum(0.5 * (Dt2[1:] + Dt2[:-1]) * np.diff(psi)))
    return float(lhs - charge_pairing(sol.charge, psi, psi0))


def active_set_fraction(sol: RadialSolution, delta):
    """Volume-weighted fraction of the grid where ``phi'^2 - b^2 >= 1 - delta``,
    i.e. where the slack is at most ``delta``."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    t = sol.grid
    w = np.empty_like(t)
    dt = np.diff(t)
    w[0], w[-1] = dt[0] / 2, dt[-1] / 2
    w[1:-1] = (dt[:-1] + dt[1:]) / 2
    w *= t * t
    hit = sol.slack <= delta
    return float(np.sum(w[hit]) / np.sum(w))


def geometric_grid(t0, t1, n):
    return np.geomspace(t0, t1, n)
