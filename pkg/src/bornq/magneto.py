"""Axisymmetric magnetostatics through a toroidal vector potential.

The potential is ``A(x) = (u(r, z) / r) (-x2, x1, 0)`` with ``r = |(x1, x2)|``.
Writing ``alpha = u / r``, the curl is

    curl A = (-x1 d_z alpha, -x2 d_z alpha, 2 alpha + r d_r alpha),

so ``|curl A|^2 = cz^2 + cm^2`` with ``cz = d_z u`` and
``cm = d_r u + u / r = (1/r) d_r (r u)``.  A toroidal current
``J = (j / r)(-x2, x1, 0)`` satisfies ``J . A = j u``, and the energy

    J(u) = 2 pi \\int [ m(cz, cm) - j u ] r dr dz

is a smooth strictly convex functional of ``u`` with ``u = 0`` on the axis
and on the outer edges of the truncated half plane.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import splu

from . import grid as gr
from .densities import check_q, magneto_field
from .grid import GridField, GridSpec
from .report import SolveReport

Q_MIN = 6.0 / 5.0
_ROUNDOFF = 16 * np.finfo(float).eps


@dataclass(frozen=True)
class HalfPlaneGrid:
    """Nodes ``r[0] = 0 < r[1] < ... < r[M] = R`` times a uniform ``z`` axis."""

    r: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if r.ndim != 1 or len(r) < 4 or r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise ValueError("r nodes must start at 0 and increase strictly (at least 4 nodes)")
        dz = np.diff(z)
        if z.ndim != 1 or len(z) < 4 or np.any(dz <= 0) or not np.allclose(dz, dz[0], rtol=1e-9):
            raise ValueError("z nodes must be uniform and increasing (at least 4 nodes)")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "z", z)

    @classmethod
    def uniform(cls, R, Z, nr, nz):
        """``nr`` nodes on ``[0, R]`` and ``nz`` nodes on ``[-Z, Z]``."""
        return cls(np.linspace(0.0, R, nr), np.linspace(-Z, Z, nz))

    @property
    def shape(self):
        return (len(self.r), len(self.z))

    @property
    def dz(self):
        return float(self.z[1] - self.z[0])

    def mesh(self):
        return np.meshgrid(self.r, self.z, indexing="ij")

    def free_mask(self):
        """Nodes carrying unknowns (everything except the axis and the outer edges)."""
        m = np.zeros(self.shape, dtype=bool)
        m[1:-1, 1:-1] = True
        return m

    def node_weights(self):
        """Trapezoid weights of ``\\int f r dr dz`` at the nodes."""
        dr = np.diff(self.r)
        wr = np.zeros_like(self.r)
        wr[:-1] += 0.5 * dr
        wr[1:] += 0.5 * dr
        wz = np.full(len(self.z), self.dz)
        wz[[0, -1]] *= 0.5
        return (self.r * wr)[:, None] * wz[None, :]


@dataclass
class ToroidalPotential:
    """Nodal values ``u(r_i, z_j)``; axis and outer-edge values are zero."""

    grid: HalfPlaneGrid
    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.shape != self.grid.shape:
            raise ValueError(f"u has shape {u.shape}, grid is {self.grid.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("u must be finite")
        u[0, :] = 0.0
        self.u = u

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    def scaled(self, t):
        return ToroidalPotential(self.grid, t * self.u)

    def l2_norm(self):
        return float(np.sqrt(2 * np.pi * np.sum(self.grid.node_weights() * self.u ** 2)))


@dataclass
class CurrentProfile:
    """Nodal ``j(r_i, z_j)`` of the toroidal current ``J = (j / r)(-x2, x1, 0)``."""

    grid: HalfPlaneGrid
    j: np.ndarray
    name: str = field(default="current")

    def __post_init__(self):
        j = np.asarray(self.j, dtype=float)
        if j.shape != self.grid.shape or not np.all(np.isfinite(j)):
            raise ValueError("current must be finite with the grid shape")
        self.j = j

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))


def ring_current(grid, amplitude=1.0, r0=1.0, z0=0.0, width=0.25):
    """Gaussian current bump around the circle ``(r, z) = (r0, z0)``."""
    R, Zm = grid.mesh()
    return CurrentProfile(grid, amplitude * np.exp(-((R - r0) ** 2 + (Zm - z0) ** 2) / width ** 2), "ring")


def solenoid_slab(grid, amplitude=1.0, r_in=0.8, r_out=1.2, half_height=1.0, edge=0.05):
    """Smoothed uniform current in the annular slab ``r_in < r < r_out, |z| < half_height``."""
    R, Zm = grid.mesh()
    s = lambda x: 0.5 * (1 + np.tanh(x / edge))
    j = amplitude * s(R - r_in) * s(r_out - R) * s(half_height - np.abs(Zm))
    return CurrentProfile(grid, j, "solenoid")


# -- reduced curl ---------------------------------------------------------------

def reduced_curl(u: ToroidalPotential):
    """Nodal ``(cz, cm)`` by centered differences.

    On the axis ``cz = 0`` and ``cm = 2 d_r u`` (the limit of ``u/r`` is ``d_r u``).
    """
    g = u.grid
    U = u.u
    dudr = np.gradient(U, g.r, axis=0, edge_order=2)
    cz = np.gradient(U, g.dz, axis=1, edge_order=2)
    cm = np.empty_like(U)
    cm[1:] = dudr[1:] + U[1:] / g.r[1:, None]
    cm[0] = 2.0 * dudr[0]
    cz[0] = 0.0
    return cz, cm


# -- discrete energy -----------------------------------------------------------
#
# Cell (i, j) is [r_i, r_{i+1}] x [z_j, z_{j+1}].  Its curl is evaluated in
# four variants: cm from the z-row j + b and cz from the r-column i + a,
# a, b in {0, 1}; the energy averages the density over the variants.  Each
# difference is exact for the corresponding 1D linear interpolant, and the
# average over the variants has no zero-energy checkerboard mode.

class _Operators:
    def __init__(self, grid: HalfPlaneGrid):
        self.grid = grid
        r, dz = grid.r, grid.dz
        nr, nz = grid.shape
        dr = np.diff(r)
        rmid = 0.5 * (r[1:] + r[:-1])
        self.cell_w = (rmid * dr)[:, None] * np.full(nz - 1, dz)[None, :]
        n = nr * nz
        idx = np.arange(n).reshape(nr, nz)
        self.cm, self.cz = [], []
        for b in (0, 1):
            rows = np.arange((nr - 1) * (nz - 1)).reshape(nr - 1, nz - 1)
            cols_hi = idx[1:, b:nz - 1 + b]
            cols_lo = idx[:-1, b:nz - 1 + b]
            c_hi = np.broadcast_to((r[1:] / (rmid * dr))[:, None], rows.shape)
            c_lo = np.broadcast_to((-r[:-1] / (rmid * dr))[:, None], rows.shape)
            self.cm.append(sparse.csr_matrix(
                (np.concatenate([c_hi.ravel(), c_lo.ravel()]),
                 (np.concatenate([rows.ravel(), rows.ravel()]),
                  np.concatenate([cols_hi.ravel(), cols_lo.ravel()]))),
                shape=(rows.size, n)))
        for a in (0, 1):
            rows = np.arange((nr - 1) * (nz - 1)).reshape(nr - 1, nz - 1)
            cols_hi = idx[a:nr - 1 + a, 1:]
            cols_lo = idx[a:nr - 1 + a, :-1]
            val = np.full(rows.size, 1.0 / dz)
            self.cz.append(sparse.csr_matrix(
                (np.concatenate([val, -val]),
                 (np.concatenate([rows.ravel(), rows.ravel()]),
                  np.concatenate([cols_hi.ravel(), cols_lo.ravel()]))),
                shape=(rows.size, n)))
        self.w = 2 * np.pi * 0.25 * self.cell_w.ravel()
        self.pair_w = 2 * np.pi * grid.node_weights().ravel()
        self.free = np.flatnonzero(grid.free_mask().ravel())

    def variants(self, x):
        cz = [C @ x for C in self.cz]
        cm = [C @ x for C in self.cm]
        for a in (0, 1):
            for b in (0, 1):
                yield a, b, cz[a], cm[b]


def _density(t, q):
    return np.expm1(0.5 * q * np.log1p(t)) / q


def _energy_flat(ops, x, jflat, q):
    total = 0.0
    for _, _, cz, cm in ops.variants(x):
        total += np.sum(ops.w * _density(cz * cz + cm * cm, q))
    return total - np.sum(ops.pair_w * jflat * x)


def _gradient_flat(ops, x, jflat, q):
    g = -ops.pair_w * jflat
    for a, b, cz, cm in ops.variants(x):
        f = ops.w * (1.0 + cz * cz + cm * cm) ** (0.5 * q - 1.0)
        g = g + ops.cz[a].T @ (f * cz) + ops.cm[b].T @ (f * cm)
    return g


def _hessian_flat(ops, x, q):
    H = None
    for a, b, cz, cm in ops.variants(x):
        t = 1.0 + cz * cz + cm * cm
        f = ops.w * t ** (0.5 * q - 1.0)
        k = (q - 2.0) / t
        Dzz = sparse.diags(f * (1 + k * cz * cz))
        Dmm = sparse.diags(f * (1 + k * cm * cm))
        Dzm = sparse.diags(f * k * cz * cm)
        Cz, Cm = ops.cz[a], ops.cm[b]
        term = Cz.T @ Dzz @ Cz + Cm.T @ Dmm @ Cm + Cz.T @ Dzm @ Cm + Cm.T @ Dzm @ Cz
        H = term if H is None else H + term
    return H.tocsc()


def energy_J(u: ToroidalPotential, j: CurrentProfile, q):
    """Discrete energy ``2 pi sum [m(cz, cm) r dr dz] - 2 pi sum j u r dr dz``."""
    q = check_q(q)
    if j is None:
        j = CurrentProfile.zeros(u.grid)
    ops = _Operators(u.grid)
    return float(_energy_flat(ops, u.u.ravel(), j.j.ravel(), q))


def energy_J_gradient(u: ToroidalPotential, j: CurrentProfile, q):
    """Nodal gradient of :func:`energy_J` (all nodes)."""
    q = check_q(q)
    ops = _Operators(u.grid)
    return _gradient_flat(ops, u.u.ravel(), j.j.ravel(), q).reshape(u.grid.shape)


def minimize_J(j: CurrentProfile, q, init: ToroidalPotential = None, tol_G=1e-9,
               max_iter=100, armijo=1e-4):
    """Damped Newton minimization of :func:`energy_J`.

    The sparse Hessian is factored once per step; backtracking enforces
    monotone decrease.  The gradient is measured in the dual norm of the
    q-independent Hessian at ``u = 0`` (a weighted curl-curl operator), so
    ``tol_G`` has the same meaning on every grid.  When the energy can no
    longer register progress, full Newton steps continue while the gradient
    shrinks; a gradient stalled at this round-off floor also counts as
    converged (``extra["stop"]`` says so).
    Returns ``(u, report)``.
    """
    q = check_q(q, lo=Q_MIN, lo_open=True, hi_open=True)
    t0 = time.perf_counter()
    grid = j.grid
    ops = _Operators(grid)
    free = ops.free
    jf = j.j.ravel()
    x = np.zeros(np.prod(grid.shape)) if init is None else init.u.ravel().copy()
    mask = np.zeros_like(x, dtype=bool)
    mask[free] = True
    x[~mask] = 0.0
    H0 = splu(_hessian_flat(ops, np.zeros_like(x), 2.0)[free][:, free].tocsc())

    def dual(g):
        return float(np.sqrt(max(g @ H0.solve(g), 0.0)))

    energy = _energy_flat(ops, x, jf, q)
    report = SolveReport(mode="magneto", energy_initial=float(energy))
    history = [float(energy)]
    converged, decrease, gnorm, prev_gnorm = False, np.inf, np.inf, np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = _gradient_flat(ops, x, jf, q)[free]
        gnorm = dual(g)
        if gnorm < tol_G:
            converged = True
            it -= 1
            break
        H = _hessian_flat(ops, x, q)[free][:, free].tocsc()
        d = -splu(H).solve(g)
        slope = float(g @ d)
        # once the Newton decrement -slope/2 is at the round-off level of the
        # energy, Armijo cannot see progress: take full steps while the
        # gradient keeps shrinking and stop when it stalls
        floor = -0.5 * slope <= _ROUNDOFF * max(abs(energy), 1e-300)
        if floor:
            trial = x.copy()
            trial[free] += d
            e_new = _energy_flat(ops, trial, jf, q)
            if gnorm > 0.5 * prev_gnorm or e_new > energy + _ROUNDOFF * abs(energy):
                converged = True
                report.extra["stop"] = "gradient at round-off floor"
                it -= 1
                break
        else:
            alpha = 1.0
            while alpha > 1e-12:
                trial = x.copy()
                trial[free] += alpha * d
                e_new = _energy_flat(ops, trial, jf, q)
                if e_new <= energy + armijo * alpha * slope:
                    break
                alpha *= 0.5
            else:
                report.warnings.append(f"line search failed at iteration {it}")
                break
        prev_gnorm = gnorm
        decrease = energy - e_new
        x, energy = trial, e_new
        history.append(float(energy))
    report.energy_final = float(energy)
    report.iterations = int(it)
    report.converged = bool(converged)
    report.grad_norm = float(gnorm)
    report.energy_decrease = float(decrease) if np.isfinite(decrease) else 0.0
    report.energy_history = history
    report.extra.update(q=q, tol_G=float(tol_G), grid=[len(grid.r), len(grid.z)],
                        R=float(grid.r[-1]), Z=float(grid.z[-1]))
    report.timing["solve_seconds"] = time.perf_counter() - t0
    if not converged:
        report.warnings.append("iteration cap reached before convergence")
    return ToroidalPotential(grid, x.reshape(grid.shape)), report


# -- lifting to 3D -----------------------------------------------------------------

def _alpha(grid, values):
    """``values / r`` on the nodes, extrapolated to the axis as an even function of r."""
    r = grid.r
    a = np.zeros_like(values)
    a[1:] = values[1:] / r[1:, None]
    # alpha is even in r: alpha(r) = a0 + c r^2 + ...
    r1, r2 = r[1], r[2]
    a[0] = (r2 ** 2 * a[1] - r1 ** 2 * a[2]) / (r2 ** 2 - r1 ** 2)
    return a


def _half_plane_spline(grid, values):
    r = grid.r
    rr = np.concatenate([-r[:0:-1], r])
    vv = np.concatenate([values[:0:-1], values])
    return RectBivariateSpline(rr, grid.z, vv, kx=3, ky=3)


def lift_coefficient(grid, values, grid3: GridSpec):
    """Sample an even-in-r half-plane function at the 3D nodes (zero outside)."""
    pts = grid3.points()
    r = np.hypot(pts[..., 0], pts[..., 1])
    z = pts[..., 2]
    spl = _half_plane_spline(grid, values)
    vals = spl.ev(r.ravel(), z.ravel()).reshape(r.shape)
    outside = (r > grid.r[-1]) | (z < grid.z[0]) | (z > grid.z[-1])
    return np.where(outside, 0.0, vals)


def toroidal_field(grid3: GridSpec, coef):
    """``coef(x) (-x2, x1, 0)`` for a nodal coefficient array."""
    pts = grid3.points()
    return np.stack([-pts[..., 1] * coef, pts[..., 0] * coef, np.zeros_like(coef)], axis=-1)


def lift_to_3d(u: ToroidalPotential, grid3: GridSpec):
    """Vector potential ``A = (u / r)(-x2, x1, 0)`` sampled on a 3D grid."""
    alpha = lift_coefficient(u.grid, _alpha(u.grid, u.u), grid3)
    return GridField(grid3, toroidal_field(grid3, alpha), "A")


def lift_current(j: CurrentProfile, grid3: GridSpec):
    """``J = (j / r)(-x2, x1, 0)`` on a 3D grid."""
    alpha = lift_coefficient(j.grid, _alpha(j.grid, j.j), grid3)
    return GridField(grid3, toroidal_field(grid3, alpha), "J")


# -- residuals and probes ----------------------------------------------------------------

def weak_residual_magneto(A: GridField, J: GridField, Btest: GridField, q):
    """``sum H(curl A) . curl Btest h^3 - sum J . Btest h^3`` (centered differences)."""
    q = check_q(q)
    spec = A.spec
    if J.spec != spec or Btest.spec != spec:
        raise ValueError("fields must share one grid")
    H = magneto_field(gr.curl(A.values, spec.h), q)
    cb = gr.curl(Btest.values, spec.h)
    vol = spec.cell_volume
    return float(np.sum(H * cb) * vol - np.sum(J.values * Btest.values) * vol)


def hcurl_norm(B: GridField):
    """Discrete ``(|B|_2^2 + |curl B|_2^2)^{1/2}``."""
    c = gr.curl(B.values, B.spec.h)
    return float(np.sqrt((np.sum(B.values ** 2) + np.sum(c ** 2)) * B.spec.cell_volume))


def coercivity_probe(u: ToroidalPotential, q, t_list):
    """Slope of ``log energy_J(t u)`` against ``log t`` (no current term),
    fitted by least squares over the points in the largest decade of ``t_list``."""
    q = check_q(q)
    t = np.sort(np.asarray(t_list, dtype=float))
    if len(t) < 4:
        raise ValueError("coercivity_probe needs at least 4 values of t")
    if np.any(t <= 0):
        raise ValueError("t values must be positive")
    if not np.any(u.u):
        raise ValueError("coercivity_probe needs a nonzero u")
    sel = t >= t[-1] / 10.0
    if np.count_nonzero(sel) < 2:
        sel = slice(-2, None)
    ts = t[sel]
    zero = CurrentProfile.zeros(u.grid)
    e = np.array([energy_J(u.scaled(s), zero, q) for s in ts])
    slope, _ = np.polyfit(np.log(ts), np.log(e), 1)
    return float(slope)
