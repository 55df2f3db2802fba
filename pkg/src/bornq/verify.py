"""Randomized invariant suite behind ``bornq verify``.

Each ``check_*`` function draws its own samples from the generator it is
given and records one or more :class:`~bornq.report.Check` entries.
"""
from __future__ import annotations

import numpy as np

from . import densities as dn
from . import grid as gr
from . import symmetry as sy
from .electro import project_ellipsoid
from .grid import GridSpec
from .radial import invert_flux
from .report import SolveReport


def random_admissible(rng, n, b_scale=2.0, q_range=(1.0, 2.0)):
    """``n`` states ``(g, B, q)`` spread over the whole constraint ellipsoid,
    boundary included."""
    B = rng.normal(size=(n, 3)) * rng.uniform(0, b_scale, size=(n, 1))
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    quad = 1.0 + np.einsum("ij,ij->i", d, B) ** 2
    rmax = np.sqrt((1.0 + np.einsum("ij,ij->i", B, B)) / quad)
    frac = np.sqrt(rng.uniform(0, 1, size=n))
    frac[: n // 100] = 1.0                   # a slice exactly on the boundary (up to rounding)
    g = d * (frac * rmax)[:, None] * (1 - 1e-15)
    q = rng.uniform(*q_range, size=n)
    return g, B, q


def kkt_defects(g, B, p):
    """Slack and angle defects of projected points ``p = P(g)``.

    Moved points must lie on the ellipsoid with ``g - p`` parallel to
    ``(I + B B^T) p``; the angle between the two is returned (0 for
    unmoved points).  Displacements at rounding level (inputs already on the
    boundary) have no meaningful direction and count as unmoved.
    """
    moved = np.linalg.norm(g - p, axis=-1) > 1e-12 * (1.0 + np.linalg.norm(g, axis=-1))
    s = dn.slack(p, B)
    v1 = g - p
    pB = np.einsum("...i,...i->...", p, B)
    v2 = p + pB[..., None] * B
    cross = np.linalg.norm(np.cross(v1, v2), axis=-1)
    dot = np.einsum("...i,...i->...", v1, v2)
    angle = np.where(moved, np.arctan2(cross, dot), 0.0)
    shifted = np.any(p != g, axis=-1)
    return moved, np.where(shifted, np.abs(s), 0.0), angle


def check_fundest(report, rng, n):
    g, B, q = random_admissible(rng, n)
    lower, upper = dn.fundest_check(g, B, q)
    bad = int(np.count_nonzero(~lower) + np.count_nonzero(~upper))
    report.add_check("fundamental_inequalities_violations", bad, 0, note=f"{n} samples")
    return bad


def check_growth(report, rng, n):
    t = np.concatenate([[0.0], 10 ** rng.uniform(-6, 6, size=n - 1)])
    q = rng.choice([1.0, 1.2, 1.5, 1.9, 2.0], size=n)
    bad = 0
    for qq in np.unique(q):
        sel = q == qq
        f, lo, hi, _ = dn.growth_bounds(t[sel], qq)
        tol = 1e-13 * np.maximum(hi, 1e-300)
        bad += np.count_nonzero(lo > f + tol) + np.count_nonzero(f > hi + tol)
    report.add_check("growth_envelope_violations", bad, 0, note=f"{n} samples")
    return bad


def check_projection(report, rng, n):
    B = rng.normal(size=(n, 3)) * rng.uniform(0, 3, size=(n, 1))
    g = rng.normal(size=(n, 3)) * rng.uniform(0, 4, size=(n, 1))
    p = project_ellipsoid(g, B)
    moved, sdef, angle = kkt_defects(g, B, p)
    ok_in = np.all(dn.slack(p, B) >= -1e-10)
    report.add_check("projection_feasible", 0 if ok_in else 1, 0)
    report.add_check("projection_slack_defect", float(np.max(sdef)), 1e-10, note=f"{int(moved.sum())} moved of {n}")
    report.add_check("projection_angle_defect_rad", float(np.max(angle)), 1e-6)
    pp = project_ellipsoid(p, B)
    report.add_check("projection_idempotent", float(np.max(np.abs(pp - p))), 1e-12)
    return float(np.max(angle))


def check_inversion(report, rng, n):
    sigma = rng.normal(size=n) * 10 ** rng.uniform(-3, 3, size=n)
    m = rng.uniform(0, 4, size=n)
    # q <= 1.9 keeps the slack above the double underflow limit for |sigma| <= 1e3
    q = rng.uniform(1.0, 1.9, size=n)
    y, sl = np.array([invert_flux(s, mm, qq, return_slack=True) for s, mm, qq in zip(sigma, m, q)]).T
    # forward law evaluated with the accurately computed slack
    back = y * sl ** (0.5 * q - 1.0)
    err = np.max(np.abs(back - sigma) / (1 + np.abs(sigma)))
    report.add_check("flux_inversion_roundtrip", float(err), 1e-10)
    return err


def check_decomposition(report, rng, n=33):
    spec = GridSpec.centered(2.0, n)
    A = sy.random_equivariant_field(spec, rng)
    c = sy.decompose(A)
    report.add_check("pythagoras_pointwise", sy.pythagoras_defect(A, c), 1e-12)
    c2 = sy.decompose(sy.s_involution(sy.decompose(sy.s_involution(c))))
    back = c2.total()
    _, _, axis = sy._frames(spec)
    report.add_check("s_involution_squared", float(np.max(np.abs(back - A.values)[~axis])), 1e-12)
    cs = sy.decompose(sy.s_involution(c))
    e0, e1 = sy.gradient_energy(c), sy.gradient_energy(cs)
    report.add_check("s_involution_isometry", float(np.max(np.abs(e0 - e1)) / max(np.max(e0), 1e-300)), 1e-12)
    e = sy.curl_orthogonality_check(c)
    report.add_check("curl_orthogonality", max(e), 2e-2, note=f"{n}^3 grid, discretization level")
    report.add_check("gradient_pythagoras", sy.nabla_pythagoras_check(c), 2e-2, note=f"{n}^3 grid")


def check_radial_curl(report, n=33):
    spec = GridSpec.centered(2.0, n)
    A = sy.radial_gradient_field(None, spec, dpsi=lambda t: -2 * t * np.exp(-t * t))
    c = gr.curl(A.values, spec.h)
    report.add_check("radial_field_curl", float(np.max(np.abs(c)[gr.interior_mask(spec, 1)])), 5 * spec.h ** 2)


def run_suite(seed=0, samples=100000, report=None):
    """Run every check and return the report (``extra`` holds pass counts)."""
    rng = np.random.default_rng(seed)
    report = SolveReport(mode="verify") if report is None else report
    check_fundest(report, rng, samples)
    check_growth(report, rng, samples)
    check_projection(report, rng, samples)
    check_inversion(report, rng, min(samples, 2000))
    check_decomposition(report, rng)
    check_radial_curl(report)
    report.extra["passed"] = sum(c.passed for c in report.checks)
    report.extra["total"] = len(report.checks)
    report.converged = report.all_passed
    return report
