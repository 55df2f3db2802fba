"""Constrained minimization of the electrostatic energy on a 3D box.

The discrete energy of a nodal potential ``phi`` is

    E(phi) = h^3 * sum_cells e(G phi, B) - h^3 * sum_nodes rho * phi,

where ``G`` is the staggered edge-difference gradient (one vector per cell,
see :mod:`bornq.grid`) and ``e`` the electrostatic density.  ``E`` is convex
in the nodal values and finite exactly on the discrete constraint set
``{|G phi|^2 + (G phi . B)^2 <= 1 + |B|^2 on every cell}``.  Dirichlet data
fix ``phi`` on the box faces.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import grid as gr
from .densities import FLUX_MIN_SLACK, SLACK_CLAMP, DomainError, check_q
from .grid import GridField, GridSpec
from .report import SolveReport


_ROUNDOFF = 16 * np.finfo(float).eps


# -- ellipsoid projection ---------------------------------------------------

def project_ellipsoid(g, B, bound=None, tol=1e-12, max_iter=100):
    """Euclidean projection of ``g`` onto ``{x : |x|^2 + (x.B)^2 <= bound}``.

    ``bound`` defaults to ``1 + |B|^2``.  In the eigenbasis of ``I + B B^T``
    the stationarity condition ``g - x = lam (I + B B^T) x`` leaves one
    scalar secular equation in ``lam >= 0``; it is solved by Newton's method
    on ``1/sqrt(f(lam)) - 1/sqrt(bound)``, which is concave and increasing,
    so the iterates approach the root monotonically from the left.
    Admissible inputs are returned unchanged.  Broadcasts over leading axes.
    """
    g = np.asarray(g, dtype=float)
    B = np.broadcast_to(np.asarray(B, dtype=float), g.shape)
    beta = np.einsum("...i,...i->...", B, B)
    if bound is None:
        bound = 1.0 + beta
    bound = np.broadcast_to(np.asarray(bound, dtype=float), beta.shape)
    # rescale before normalizing so subnormal |B|^2 does not spoil the unit vector
    bmax = np.max(np.abs(B), axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        Bs = np.where(bmax > 0, B / bmax, 0.0)
        ns = np.sqrt(np.einsum("...i,...i->...", Bs, Bs))[..., None]
        bhat = np.where(ns > 0, Bs / ns, 0.0)
    gpar = np.einsum("...i,...i->...", g, bhat)
    gperp = g - gpar[..., None] * bhat
    a2 = gpar ** 2                       # weight 1 + beta along B
    c2 = np.einsum("...i,...i->...", gperp, gperp)
    k = 1.0 + beta

    f0 = k * a2 + c2
    outside = f0 > bound
    x = g.copy()
    if np.any(outside):
        # solve only for the points that actually move
        a2o, c2o, ko = a2[outside], c2[outside], k[outside]
        target = 1.0 / np.sqrt(bound[outside])
        lam = np.zeros_like(a2o)
        for _ in range(max_iter):
            f = ko * a2o / (1.0 + lam * ko) ** 2 + c2o / (1.0 + lam) ** 2
            df = -2.0 * (ko * ko * a2o / (1.0 + lam * ko) ** 3 + c2o / (1.0 + lam) ** 3)
            h = 1.0 / np.sqrt(f)
            step = (target - h) / (-0.5 * df * h ** 3)
            lam = lam + step
            if np.all(np.abs(step) <= tol * np.maximum(lam, 1.0)):
                break
        bo = bhat[outside]
        xo = gperp[outside] / (1.0 + lam)[:, None] + (gpar[outside] / (1.0 + lam * ko))[:, None] * bo
        # rounding can leave the projected point a hair outside
        over = _quad(xo, B[outside]) / bound[outside]
        xo = np.where((over > 1.0)[:, None], xo / np.sqrt(np.maximum(over, 1.0))[:, None], xo)
        x[outside] = xo
    return x


def _quad(x, B):
    xB = np.einsum("...i,...i->...", x, B)
    return np.einsum("...i,...i->...", x, x) + xB * xB


# -- problem definition -----------------------------------------------------

@dataclass
class ElectroGridProblem:
    """Electrostatic problem on a box.

    ``B`` is a nodal vector field; cell values are its 8-corner averages
    unless ``B_cells`` (shape ``cells + (3,)``) is given directly.
    ``boundary`` is ``"zero"``, ``"monopole"`` (the far-field
    ``Q / (4 pi |x|)`` of the total discrete charge) or a nodal array whose
    face values are used.
    """

    rho: GridField
    B: GridField = None
    q: float = 1.5
    boundary: object = "zero"
    B_cells: np.ndarray = None
    stencil: str = "forward"

    def __post_init__(self):
        self.q = check_q(self.q, hi_open=True)
        spec = self.rho.spec
        if self.rho.is_vector:
            raise ValueError("rho must be a scalar field")
        if self.B_cells is None:
            if self.B is None:
                self.B_cells = np.zeros(tuple(n - 1 for n in spec.dims) + (3,))
            else:
                if self.B.spec != spec or not self.B.is_vector:
                    raise ValueError("B must be a vector field on the charge grid")
                self.B_cells = gr.cell_average(self.B.values)
        self.B_cells = np.asarray(self.B_cells, dtype=float)
        if self.B_cells.shape != tuple(n - 1 for n in spec.dims) + (3,):
            raise ValueError("B_cells has the wrong shape")
        if not np.all(np.isfinite(self.B_cells)):
            raise ValueError("B must be finite")
        self.corners = gr.stencil_corners(self.stencil)
        self.bc_values = self._boundary_values()

    @property
    def spec(self) -> GridSpec:
        return self.rho.spec

    def total_charge(self):
        return float(np.sum(self.rho.values) * self.spec.cell_volume)

    def _boundary_values(self):
        spec = self.spec
        mask = spec.boundary_mask()
        out = np.zeros(spec.dims)
        if isinstance(self.boundary, str):
            if self.boundary == "zero":
                return out
            if self.boundary == "monopole":
                r = np.linalg.norm(spec.points(), axis=-1)
                out[mask] = self.total_charge() / (4 * np.pi * r[mask])
                return out
            raise ValueError(f"unknown boundary {self.boundary!r}")
        vals = np.asarray(self.boundary, dtype=float)
        if vals.shape != spec.dims:
            raise ValueError("boundary array must have the grid shape")
        out[mask] = vals[mask]
        return out

    def embed(self, interior):
        full = self.bc_values.copy()
        full[1:-1, 1:-1, 1:-1] = interior
        return full

    def reference_feasible(self):
        """Discrete harmonic extension of the boundary data (used as a safe point)."""
        return gr.harmonic_extension(self.bc_values, self.spec.h)


# -- energy, gradient, Hessian ---------------------------------------------

def _slack_cells(g, Bc):
    gB = np.einsum("...i,...i->...", g, Bc)
    return (1.0 + np.einsum("...i,...i->...", Bc, Bc)
            - np.einsum("...i,...i->...", g, g) - gB * gB), gB


class _Energy:
    """Energy, gradient and Hessian products of one problem (nodal arrays)."""

    def __init__(self, prob: ElectroGridProblem):
        self.prob = prob
        self.h = prob.spec.h
        self.vol = prob.spec.cell_volume
        self.q = prob.q
        self.p = 1.0 - 0.5 * prob.q
        self.w = 1.0 / len(prob.corners)
        self.Bc = prob.B_cells

    def grads(self, phi):
        return [gr.cell_gradient(phi, self.h, c) for c in self.prob.corners]

    def value(self, phi, strict=False):
        """Energy, or ``inf`` outside the constraint set (``strict`` raises)."""
        total = 0.0
        for c, g in zip(self.prob.corners, self.grads(phi)):
            s, _ = _slack_cells(g, self.Bc)
            # strict evaluation tolerates rounding below zero; the solver keeps a margin
            bad = s <= -SLACK_CLAMP if strict else s < FLUX_MIN_SLACK
            if np.any(bad):
                if strict:
                    idx = tuple(int(i) for i in np.argwhere(bad)[0])
                    raise DomainError(f"inadmissible gradient in cell {idx} (corner {c}): "
                                      f"slack={s[idx]:.3e}")
                return np.inf
            s = np.maximum(s, 0.0)
            with np.errstate(divide="ignore"):
                total += self.w * np.sum(-np.expm1(0.5 * self.q * np.log(s))) / self.q
        return self.vol * (total - np.sum(self.prob.rho.values * phi))

    def flux_terms(self, phi):
        """Per-corner ``(g, s, gB, D)`` with ``D`` the displacement."""
        out = []
        for g in self.grads(phi):
            s, gB = _slack_cells(g, self.Bc)
            D = (g + gB[..., None] * self.Bc) * (s ** (-self.p))[..., None]
            out.append((g, s, gB, D))
        return out

    def gradient(self, phi, terms=None):
        """Full nodal gradient of the energy (boundary rows included)."""
        terms = self.flux_terms(phi) if terms is None else terms
        acc = np.zeros_like(phi)
        for c, (_, _, _, D) in zip(self.prob.corners, terms):
            acc += self.w * gr.cell_gradient_adjoint(D, self.h, c)
        return self.vol * (acc - self.prob.rho.values)

    def hessp(self, terms, v_full):
        acc = np.zeros_like(v_full)
        Bc, p = self.Bc, self.p
        for c, (g, s, gB, D) in zip(self.prob.corners, terms):
            u = gr.cell_gradient(v_full, self.h, c)
            uB = np.einsum("...i,...i->...", u, Bc)
            Mu = u + uB[..., None] * Bc
            Mg = g + gB[..., None] * Bc
            coef = 2.0 * p * np.einsum("...i,...i->...", Mg, u) / s
            Ku = (Mu + coef[..., None] * Mg) * (s ** (-p))[..., None]
            acc += self.w * gr.cell_gradient_adjoint(Ku, self.h, c)
        return self.vol * acc


def energy_IB_grid(phi: GridField, prob: ElectroGridProblem):
    """Discrete electrostatic energy; raises DomainError on an inadmissible cell."""
    if phi.spec != prob.spec:
        raise ValueError("phi and problem live on different grids")
    return float(_Energy(prob).value(phi.values, strict=True))


def energy_gradient(phi: GridField, prob: ElectroGridProblem):
    """Nodal gradient of :func:`energy_IB_grid` (all nodes, boundary included)."""
    return _Energy(prob).gradient(phi.values)


# -- minimizers ---------------------------------------------------------------

class _Precond:
    def __init__(self, prob):
        self.lap = gr.DirichletLaplacian(prob.spec.dims, prob.spec.h)
        self.vol = prob.spec.cell_volume

    def __call__(self, r):
        return self.lap.solve(r) / self.vol


def _pcg(apply_H, b, M, rtol, max_iter):
    x = np.zeros_like(b)
    r = b.copy()
    z = M(r)
    d = z.copy()
    rz = np.vdot(r, z)
    r0 = np.sqrt(abs(rz))
    it = 0
    for it in range(1, max_iter + 1):
        Hd = apply_H(d)
        dHd = np.vdot(d, Hd)
        if dHd <= 0:
            break
        a = rz / dHd
        x += a * d
        r -= a * Hd
        z = M(r)
        rz_new = np.vdot(r, z)
        if np.sqrt(abs(rz_new)) <= rtol * r0:
            break
        d = z + (rz_new / rz) * d
        rz = rz_new
    return x, it


def restore_feasibility(phi, prob, margin=1e-3, rounds=20):
    """Move a nodal potential into the discrete constraint set.

    Each round projects the cell gradients onto the shrunk ellipsoid
    ``(1 - margin)(1 + |B|^2)`` (the margin doubles every round, up to 1/2)
    and reconstructs the least-squares potential
    by a Dirichlet Poisson solve.  If that does not land inside, the result
    is blended toward the harmonic extension of the boundary data, which is
    feasible for any sane boundary data.
    """
    E = _Energy(prob)
    lap = gr.DirichletLaplacian(prob.spec.dims, prob.spec.h)
    h = prob.spec.h
    Bc = prob.B_cells
    full_bound = 1.0 + np.einsum("...i,...i->...", Bc, Bc)
    cur = prob.embed(phi[1:-1, 1:-1, 1:-1])
    for _ in range(rounds):
        if np.isfinite(E.value(cur)):
            return cur
        bound = (1.0 - margin) * full_bound
        margin = min(2.0 * margin, 0.5)
        acc = np.zeros_like(cur)
        for c in prob.corners:
            g = gr.cell_gradient(cur, h, c)
            acc += gr.cell_gradient_adjoint(project_ellipsoid(g, Bc, bound), h, c)
        acc /= len(prob.corners)
        # least squares: L x = G^T g_proj - (G^T G) bc on the interior
        bc_part = np.zeros_like(cur)
        for c in prob.corners:
            bc_part += gr.cell_gradient_adjoint(gr.cell_gradient(prob.bc_values, h, c), h, c)
        bc_part /= len(prob.corners)
        rhs = (acc - bc_part)[1:-1, 1:-1, 1:-1]
        cur = prob.embed(lap.solve(rhs))
    ref = prob.reference_feasible()
    if not np.isfinite(E.value(ref)):
        raise DomainError("boundary data admit no feasible potential")
    theta = 1.0
    while theta > 1e-12:
        theta *= 0.5
        trial = ref + theta * (cur - ref)
        if np.isfinite(E.value(trial)):
            return trial
    return ref


def _dual_norm(r_int, precond):
    return float(np.sqrt(max(np.vdot(r_int, precond(r_int)), 0.0)))


def minimize_IB(prob: ElectroGridProblem, init: GridField = None, tol_E=None, tol_G=1e-6,
                max_iter=100, method="newton", armijo=1e-4, verbose=False):
    """Minimize the discrete electrostatic energy.

    ``method="newton"`` takes inexact Newton steps (preconditioned CG with
    the exact Dirichlet Laplacian as preconditioner) with backtracking that
    keeps every iterate strictly inside the constraint set.
    ``method="gradient"`` is Laplacian-preconditioned gradient descent in
    which infeasible trial points are repaired by gradient projection and
    least-squares reconstruction (:func:`restore_feasibility`).

    Stops when the last energy decrease is below ``tol_E`` (default
    ``1e-10 * max(|E0|, 1e-300)``) and the gradient's dual norm is below
    ``tol_G``.  The dual norm is ``sqrt(r . (h^3 L)^{-1} r)``, the H^{-1}
    size of the residual functional.  When the energy can no longer
    register progress, Newton takes full steps while the gradient shrinks
    and stops as converged once it stalls at that round-off floor.
    Returns ``(phi, report)``; on hitting
    ``max_iter`` the best iterate is returned with ``converged=False``.
    """
    if method not in ("newton", "gradient"):
        raise ValueError(f"unknown method {method!r}")
    t0 = time.perf_counter()
    E = _Energy(prob)
    P = _Precond(prob)
    if init is None:
        phi = prob.reference_feasible()
    else:
        if init.spec != prob.spec:
            raise ValueError("init lives on a different grid")
        phi = prob.embed(init.values[1:-1, 1:-1, 1:-1])
    if not np.isfinite(E.value(phi)):
        phi = restore_feasibility(phi, prob)

    energy = E.value(phi)
    report = SolveReport(mode="electro-grid", energy_initial=float(energy))
    if tol_E is None:
        tol_E = 1e-10 * max(abs(energy), 1e-300)
    history = [float(energy)]
    decrease = np.inf
    gnorm = np.inf
    converged = False
    step_scale = 1.0
    prev_gnorm = np.inf
    inner_total = 0
    it = 0
    for it in range(1, max_iter + 1):
        terms = E.flux_terms(phi)
        r = E.gradient(phi, terms)[1:-1, 1:-1, 1:-1]
        gnorm = _dual_norm(r, P)
        if gnorm < tol_G and (decrease <= tol_E or gnorm < 1e-3 * tol_G):
            converged = True
            it -= 1
            break
        if method == "newton":
            def apply_H(v):
                full = np.zeros_like(phi)
                full[1:-1, 1:-1, 1:-1] = v
                return E.hessp(terms, full)[1:-1, 1:-1, 1:-1]
            forcing = min(0.5, np.sqrt(gnorm))
            d, nin = _pcg(apply_H, -r, P, forcing, 200)
            inner_total += nin
            alpha = 1.0
        else:
            d = -P(r)
            alpha = min(1.0, 2.0 * step_scale)
        slope = float(np.vdot(r, d))
        if slope >= 0:
            d = -P(r)
            slope = float(np.vdot(r, d))
        accepted = False
        # once the Newton decrement -slope/2 is at the round-off level of the
        # energy, Armijo cannot see progress: take full steps while the
        # gradient keeps shrinking and stop when it stalls
        if method == "newton" and slope < 0 and -0.5 * slope <= _ROUNDOFF * max(abs(energy), 1e-300):
            trial = prob.embed(phi[1:-1, 1:-1, 1:-1] + d)
            e_new = E.value(trial)
            if gnorm > 0.5 * prev_gnorm or not e_new <= energy + _ROUNDOFF * abs(energy):
                converged = True
                report.extra["stop"] = "gradient at round-off floor"
                it -= 1
                break
            accepted = True
        while not accepted and alpha > 1e-14:
            trial = prob.embed(phi[1:-1, 1:-1, 1:-1] + alpha * d)
            e_new = E.value(trial)
            if not np.isfinite(e_new) and method == "gradient":
                trial = restore_feasibility(trial, prob)
                e_new = E.value(trial)
            if np.isfinite(e_new) and e_new <= energy + armijo * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            report.warnings.append(f"line search failed at iteration {it}")
            break
        step_scale = alpha
        prev_gnorm = gnorm
        decrease = energy - e_new
        phi, energy = trial, e_new
        history.append(float(energy))
        if verbose:
            print(f"it {it:3d}  E={energy:.15e}  |g|*={gnorm:.3e}  alpha={alpha:.3g}")
    else:
        terms = E.flux_terms(phi)
        r = E.gradient(phi, terms)[1:-1, 1:-1, 1:-1]
        gnorm = _dual_norm(r, P)
        converged = gnorm < tol_G and decrease <= tol_E

    report.energy_final = float(energy)
    report.iterations = int(it)
    report.converged = bool(converged)
    report.grad_norm = float(gnorm)
    report.energy_decrease = float(decrease) if np.isfinite(decrease) else 0.0
    report.energy_history = history
    s_min = min(float(np.min(_slack_cells(g, prob.B_cells)[0])) for g in E.grads(phi))
    report.extra.update(method=method, tol_E=float(tol_E), tol_G=float(tol_G),
                        inner_iterations=int(inner_total), min_slack=s_min,
                        box=[list(prob.spec.origin), prob.spec.h, list(prob.spec.dims)],
                        boundary=prob.boundary if isinstance(prob.boundary, str) else "array",
                        stencil=prob.stencil)
    report.timing["solve_seconds"] = time.perf_counter() - t0
    if not converged:
        report.warnings.append("iteration cap reached before convergence")
    return GridField(prob.spec, phi, "phi"), report


# -- optimality diagnostics ------------------------------------------------------

class WeakResidual(NamedTuple):
    value: float
    excluded: int


class VICheck(NamedTuple):
    lhs: float
    rhs: float
    ok: bool
    excluded: int


def _pairing(prob, psi):
    return float(np.sum(prob.rho.values * psi) * prob.spec.cell_volume)


def _flux_pairs(phi, psi, prob):
    """Sum of ``D(G phi) . G psi`` over admissible cells (times h^3)."""
    E = _Energy(prob)
    total, excluded = 0.0, 0
    for c, (g, s, gB, D) in zip(prob.corners, _safe_terms(E, phi)):
        ok = s >= FLUX_MIN_SLACK
        excluded += int(np.count_nonzero(~ok))
        gpsi = gr.cell_gradient(psi, prob.spec.h, c)
        total += E.w * np.sum(np.einsum("...i,...i->...", D, gpsi)[ok])
    return total * prob.spec.cell_volume, excluded


def _safe_terms(E, phi):
    out = []
    for g in E.grads(phi):
        s, gB = _slack_cells(g, E.Bc)
        sp = np.where(s >= FLUX_MIN_SLACK, s, 1.0)
        D = (g + gB[..., None] * E.Bc) * (sp ** (-E.p))[..., None]
        out.append((g, s, gB, D))
    return out


def weak_residual_grid(phi: GridField, psi: GridField, prob: ElectroGridProblem):
    """``sum D(grad phi) . grad psi h^3 - sum rho psi h^3``.

    Cells with zero slack are left out and counted in ``excluded``.
    """
    flux, excluded = _flux_pairs(phi.values, psi.values, prob)
    return WeakResidual(float(flux - _pairing(prob, psi.values)), excluded)


def variational_inequality_check(phi: GridField, psi: GridField, prob: ElectroGridProblem, tol_V=None):
    """Evaluate both sides of the first-order optimality inequality

        sum D(grad phi) . (grad phi - grad psi) h^3  <=  <rho, phi> - <rho, psi>.

    ``tol_V`` defaults to ``1e-3`` times the problem scale ``|<rho, phi>| + h^3 sum |rho|``.
    """
    diff = phi.values - psi.values
    lhs, excluded = _flux_pairs(phi.values, diff, prob)
    rhs = _pairing(prob, phi.values) - _pairing(prob, psi.values)
    if tol_V is None:
        tol_V = 1e-3 * (abs(_pairing(prob, phi.values))
                        + float(np.sum(np.abs(prob.rho.values)) * prob.spec.cell_volume))
    return VICheck(float(lhs), float(rhs), bool(lhs <= rhs + tol_V), excluded)


def angular_spread(phi: GridField, center=(0.0, 0.0, 0.0), r_max=None, min_nodes=24):
    """Shell-wise angular variation of a nodal field.

    Nodes are binned in spherical shells of width ``h``; within each shell
    the radial trend is removed by a least-squares line in ``|x|`` and the
    standard deviation of what remains is divided by the shell mean.
    Returns ``(shell_radii, relative_std)`` for shells with at least
    ``min_nodes`` nodes inside radius ``r_max`` (default: the inscribed ball).
    """
    spec = phi.spec
    x = spec.points() - np.asarray(center)
    r = np.linalg.norm(x, axis=-1).ravel()
    v = phi.values.ravel()
    if r_max is None:
        r_max = min(min(-o + c, o + (n - 1) * spec.h - c)
                    for o, n, c in zip(spec.origin, spec.dims, center))
    edges = np.arange(0.0, r_max + spec.h, spec.h)
    idx = np.digitize(r, edges) - 1
    radii, spread = [], []
    for k in range(len(edges) - 1):
        sel = idx == k
        if np.count_nonzero(sel) < min_nodes:
            continue
        rr, vv = r[sel], v[sel]
        A = np.stack([np.ones_like(rr), rr - rr.mean()], axis=1)
        coef, *_ = np.linalg.lstsq(A, vv, rcond=None)
        resid = vv - A @ coef
        radii.append(rr.mean())
        spread.append(np.std(resid) / abs(vv.mean()))
    return np.array(radii), np.array(spread)


# -- generators ------------------------------------------------------------------

def gaussian_charge(spec: GridSpec, total=1.0, width=1.0, center=(0.0, 0.0, 0.0)):
    """Radial Gaussian ``rho = Q exp(-|x|^2/w^2) / (pi^{3/2} w^3)``."""
    x = spec.points() - np.asarray(center)
    r2 = np.einsum("...i,...i->...", x, x)
    return GridField(spec, total * np.exp(-r2 / width ** 2) / (np.pi ** 1.5 * width ** 3), "rho")


def gaussian_density(total, width):
    """Radial profile matching :func:`gaussian_charge`, as a callable of |x|."""
    return lambda t: total * np.exp(-np.asarray(t) ** 2 / width ** 2) / (np.pi ** 1.5 * width ** 3)


def cylindrical_field(points, bfun):
    """``B(x) = b(|x|) / r * (-x2, x1, 0)`` evaluated at ``points`` (zero on the axis)."""
    x1, x2 = points[..., 0], points[..., 1]
    r = np.hypot(x1, x2)
    amp = bfun(np.linalg.norm(points, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(r > 0, amp / r, 0.0)
    return np.stack([-x2 * f, x1 * f, np.zeros_like(f)], axis=-1)


def cylindrical_problem(spec, rho: GridField, bfun=None, q=1.5, boundary="zero", stencil="forward"):
    """Problem with the cylindrical magnetic field sampled exactly at cell centers."""
    if bfun is None:
        Bc = None
        Bn = None
    else:
        Bc = cylindrical_field(spec.cell_centers(), bfun)
        Bn = GridField(spec, cylindrical_field(spec.points(), bfun), "B")
    return ElectroGridProblem(rho=rho, B=Bn, q=q, boundary=boundary, B_cells=Bc, stencil=stencil)


def random_feasible(prob: ElectroGridProblem, rng, modes=4, amplitude=0.5):
    """Random smooth potential with the problem's boundary data and
    cell gradients inside the constraint set.

    Built from a few low sine modes vanishing on the faces, added to the
    harmonic extension and scaled until every cell is admissible.
    """
    spec = prob.spec
    ax = [np.linspace(0, 1, n) for n in spec.dims]
    X = np.meshgrid(*ax, indexing="ij")
    bump = np.zeros(spec.dims)
    for _ in range(modes):
        k = rng.integers(1, 4, size=3)
        bump += rng.normal() * np.sin(np.pi * k[0] * X[0]) * np.sin(np.pi * k[1] * X[1]) * np.sin(np.pi * k[2] * X[2])
    ref = prob.reference_feasible()
    g = gr.cell_gradient(bump, spec.h)
    gmax = np.max(np.linalg.norm(g, axis=-1))
    bump *= amplitude / max(gmax, 1e-300)
    E = _Energy(prob)
    cand = ref + bump
    while not np.isfinite(E.value(cand)):
        bump *= 0.5
        cand = ref + bump
    return GridField(spec, cand, "psi")
