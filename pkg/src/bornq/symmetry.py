"""Rotations about the x3 axis, the cylindrical splitting of vector fields
and the numerical identities attached to it.

Off the axis every vector splits along the orthogonal directions

    e_tau = (-x2, x1, 0),   e_rho = (x1, x2, 0),   e_zeta = (0, 0, 1),

so ``A = A_tau + A_rho + A_zeta`` with ``A_tau = alpha e_tau``,
``A_rho = beta e_rho`` and ``A_zeta = gamma e_zeta``.  On the axis the
first two directions degenerate; there ``A_tau = A_rho = 0`` and
``A_zeta = (0, 0, A3)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from . import grid as gr
from .densities import check_q, magneto_field, q_star
from .grid import GridField, GridSpec


@dataclass
class CylComponents:
    a_tau: GridField
    a_rho: GridField
    a_zeta: GridField

    def total(self):
        return self.a_tau.values + self.a_rho.values + self.a_zeta.values

    def as_tuple(self):
        return self.a_tau, self.a_rho, self.a_zeta


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def g_action(field: GridField, angle):
    """Rotate a field about the x3 axis: ``(g A)(x) = g A(g^-1 x)``.

    Values at ``g^-1 x`` are obtained by trilinear interpolation (zero
    outside the box); scalar fields are simply transported.
    """
    Rm = _rotation(angle)
    pts = field.spec.points() @ Rm          # row vectors: x @ R = R^T x = g^-1 x
    vals = gr.sample(field, pts, order=1)
    if field.is_vector:
        vals = vals @ Rm.T
    return GridField(field.spec, vals, field.name)


def equivariance_defect(field: GridField, angles=(0.7, 2.1, np.pi / 2), margin=0.1):
    """Largest relative change of a vector field under a few rotations.

    Only nodes whose rotated preimages stay inside the box by ``margin``
    (as a fraction of the half width) are compared.
    """
    spec = field.spec
    pts = spec.points()
    r = np.hypot(pts[..., 0], pts[..., 1])
    lim = min(min(abs(o), abs(o + (n - 1) * spec.h)) for o, n in zip(spec.origin[:2], spec.dims[:2]))
    keep = r <= (1 - margin) * lim
    scale = max(np.max(np.abs(field.values[keep])), 1e-300)
    return max(float(np.max(np.abs(g_action(field, a).values - field.values)[keep])) / scale
               for a in angles)


def _frames(spec):
    pts = spec.points()
    x1, x2 = pts[..., 0], pts[..., 1]
    r = np.hypot(x1, x2)
    on_axis = r == 0.0
    rs = np.where(on_axis, 1.0, r)
    t_hat = np.stack([-x2 / rs, x1 / rs, np.zeros_like(r)], axis=-1)
    r_hat = np.stack([x1 / rs, x2 / rs, np.zeros_like(r)], axis=-1)
    return t_hat, r_hat, on_axis


def decompose(field: GridField):
    """Pointwise orthogonal projections onto the tau, rho and zeta directions."""
    if not field.is_vector:
        raise ValueError("decompose needs a vector field")
    spec = field.spec
    A = field.values
    t_hat, r_hat, on_axis = _frames(spec)
    at = np.einsum("...i,...i->...", A, t_hat)[..., None] * t_hat
    ar = np.einsum("...i,...i->...", A, r_hat)[..., None] * r_hat
    az = np.zeros_like(A)
    az[..., 2] = A[..., 2]
    at[on_axis] = 0.0
    ar[on_axis] = 0.0
    return CylComponents(GridField(spec, at, "a_tau"), GridField(spec, ar, "a_rho"),
                         GridField(spec, az, "a_zeta"))


def s_involution(c: CylComponents):
    """``A_tau - A_rho - A_zeta``."""
    return GridField(c.a_tau.spec, c.a_tau.values - c.a_rho.values - c.a_zeta.values, "S(A)")


def pythagoras_defect(field: GridField, c: CylComponents):
    """Max of ``| |A|^2 - sum |A_.|^2 |`` off the axis, relative to ``max |A|^2``."""
    _, _, on_axis = _frames(field.spec)
    A2 = np.sum(field.values ** 2, axis=-1)
    parts = sum(np.sum(f.values ** 2, axis=-1) for f in c.as_tuple())
    d = np.abs(A2 - parts)[~on_axis]
    return float(np.max(d) / max(np.max(A2), 1e-300))


class CurlOrthogonality(NamedTuple):
    e1: float     # curl A_rho . curl A_tau
    e2: float     # curl A_tau . curl A_zeta


def curl_orthogonality_check(c: CylComponents, margin=1):
    """Max over interior nodes of ``|curl A_rho . curl A_tau|`` and
    ``|curl A_tau . curl A_zeta|``, both divided by ``max |curl A|^2``.

    The identities need a rotation-equivariant field; for other inputs the
    numbers carry no meaning (see :func:`equivariance_defect`).
    """
    h = c.a_tau.spec.h
    inner = gr.interior_mask(c.a_tau.spec, margin)
    ct, cr, cz = (gr.curl(f.values, h) for f in c.as_tuple())
    scale = max(float(np.max(np.sum((ct + cr + cz) ** 2, axis=-1)[inner])), 1e-300)
    e1 = np.max(np.abs(np.sum(cr * ct, axis=-1))[inner]) / scale
    e2 = np.max(np.abs(np.sum(ct * cz, axis=-1))[inner]) / scale
    return CurlOrthogonality(float(e1), float(e2))


def nabla_pythagoras_check(c: CylComponents, margin=1):
    """Max over interior nodes of ``| |DA|^2 - sum |DA_.|^2 |`` divided by ``max |DA|^2``,
    with ``A`` reassembled from the components."""
    spec = c.a_tau.spec
    inner = gr.interior_mask(spec, margin)
    full = gr.jacobian_sq(c.total(), spec.h)
    parts = sum(gr.jacobian_sq(f.values, spec.h) for f in c.as_tuple())
    scale = max(float(np.max(full[inner])), 1e-300)
    return float(np.max(np.abs(full - parts)[inner]) / scale)


def gradient_energy(c: CylComponents):
    """Pointwise ``sum |DA_.|^2`` over the three components."""
    h = c.a_tau.spec.h
    return sum(gr.jacobian_sq(f.values, h) for f in c.as_tuple())


# -- fields with prescribed symmetry --------------------------------------------

def equivariant_field(spec: GridSpec, alpha=None, beta=None, gamma=None):
    """``alpha e_tau + beta e_rho + gamma e_zeta`` with coefficient callables of ``(r, x3)``."""
    pts = spec.points()
    x1, x2, x3 = pts[..., 0], pts[..., 1], pts[..., 2]
    r = np.hypot(x1, x2)
    out = np.zeros(spec.dims + (3,))
    if alpha is not None:
        a = alpha(r, x3)
        out[..., 0] -= a * x2
        out[..., 1] += a * x1
    if beta is not None:
        b = beta(r, x3)
        out[..., 0] += b * x1
        out[..., 1] += b * x2
    if gamma is not None:
        out[..., 2] += gamma(r, x3)
    return GridField(spec, out, "A")


def random_equivariant_field(spec: GridSpec, rng, bumps=3, width=None, extent=None):
    """Smooth rotation-equivariant field from random Gaussian coefficients in ``(r^2, x3)``.

    Bump centers lie within ``extent`` of the origin and widths are drawn
    from ``width``; both default to fractions of the box half width.
    """
    half = 0.5 * (spec.dims[2] - 1) * spec.h
    extent = 0.5 * half if extent is None else extent
    width = (0.25 * half, 0.5 * half) if width is None else width

    def coef():
        c = rng.uniform(-extent, extent, size=(bumps, 2))
        c[:, 0] = np.abs(c[:, 0])
        w = rng.uniform(*width, size=bumps)
        a = rng.normal(size=bumps)
        return lambda r, z: sum(ai * np.exp(-(r ** 2 - ci[0] ** 2) ** 2 / wi ** 4 - (z - ci[1]) ** 2 / wi ** 2)
                                for ai, ci, wi in zip(a, c, w))
    return equivariant_field(spec, coef(), coef(), coef())


def radial_gradient_field(psi, grid3: GridSpec, dpsi=None):
    """``A(x) = psi'(|x|) x / |x|``, zero at the origin node.

    ``psi`` is a sampled profile ``(tau, values)`` differentiated through a
    cubic spline; alternatively pass ``psi=None`` and the derivative itself
    as the callable ``dpsi``.
    """
    if dpsi is None:
        tau, vals = (np.asarray(a, dtype=float) for a in psi)
        dpsi = CubicSpline(tau, vals).derivative()
    pts = grid3.points()
    t = np.linalg.norm(pts, axis=-1)
    ts = np.where(t > 0, t, 1.0)
    f = np.where(t > 0, dpsi(t) / ts, 0.0)
    return GridField(grid3, pts * f[..., None], "grad psi")


@dataclass
class NullityReport:
    """Weak residuals of a radial potential against a set of test fields.

    ``curl_terms`` collect the constitutive part, ``pairings`` the current
    part ``<J, B>``; ``dominance`` is ``max |pairing| / max |curl term|``.
    """

    residuals: np.ndarray
    curl_terms: np.ndarray
    pairings: np.ndarray
    tol: float

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residuals)))

    @property
    def dominance(self):
        return float(np.max(np.abs(self.pairings)) / max(np.max(np.abs(self.curl_terms)), 1e-300))

    @property
    def radial_solution_possible(self):
        """True when every residual is within ``tol``: only then can the radial field solve the problem."""
        return bool(self.max_residual <= self.tol)


def symmetry_nullity_check(psi, J: GridField, btests, q, dpsi=None, tol=None):
    """Test whether a curl-free radial potential can be a weak magnetostatic solution.

    The curl of a radial gradient field vanishes up to discretization, so
    each residual reduces to ``-<J, B>``; any nonzero pairing rules the
    radial field out.  ``tol`` defaults to ``1e-6 * (1 + |J|_2^2)``.
    """
    q = check_q(q)
    A = radial_gradient_field(psi, J.spec, dpsi=dpsi)
    h, vol = J.spec.h, J.spec.cell_volume
    H = magneto_field(gr.curl(A.values, h), q)
    curl_terms, pairings = [], []
    for B in btests:
        curl_terms.append(float(np.sum(H * gr.curl(B.values, h)) * vol))
        pairings.append(float(np.sum(J.values * B.values) * vol))
    curl_terms, pairings = np.array(curl_terms), np.array(pairings)
    if tol is None:
        tol = 1e-6 * (1.0 + float(np.sum(J.values ** 2) * vol))
    return NullityReport(curl_terms - pairings, curl_terms, pairings, float(tol))


# -- sum-space surrogate ---------------------------------------------------------------

def _lp(values, p, vol):
    mag = np.linalg.norm(values, axis=-1) if values.ndim == 4 else np.abs(values)
    return float((np.sum(mag ** p) * vol) ** (1.0 / p))


def sum_space_split(field: GridField, q, threshold=1.0):
    """Split at ``|field| = threshold`` into a bounded part (measured in L^6) and
    a peak part (measured in L^{q*}); the sum of the two norms bounds the
    infimal sum-space norm from above."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    qs = q_star(q)
    v = field.values
    mag = np.linalg.norm(v, axis=-1) if field.is_vector else np.abs(v)
    low = mag <= threshold
    sel = low[..., None] if field.is_vector else low
    part6 = np.where(sel, v, 0.0)
    partq = np.where(sel, 0.0, v)
    vol = field.spec.cell_volume
    norm = _lp(part6, 6.0, vol) + _lp(partq, qs, vol)
    return (GridField(field.spec, part6, "part6"), GridField(field.spec, partq, "partq*"), norm)


def best_split_norm(field: GridField, q, thresholds):
    """Smallest surrogate norm over a list of thresholds and the threshold attaining it."""
    vals = [sum_space_split(field, q, t)[2] for t in thresholds]
    k = int(np.argmin(vals))
    return vals[k], float(thresholds[k])
