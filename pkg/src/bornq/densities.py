"""Pointwise algebra of the interpolated Born-Infeld model.

All quantities are dimensionless (the field-strength constant is normalized
to one).  Every function broadcasts over leading axes: vectors are arrays
whose last axis has length 3, scalars are arrays of the leading shape.

The electrostatic density in the presence of a fixed magnetic field is

    e(g, B) = (1 - s**(q/2)) / q,    s = 1 + |B|^2 - |g|^2 - (g.B)^2,

defined on the ellipsoid ``s >= 0``; its gradient in ``g`` is the
displacement ``D = (g + (g.B) B) / s**(1 - q/2)``.  The magnetostatic
density is ``m(c) = ((1 + |c|^2)**(q/2) - 1) / q`` with gradient
``H = c / (1 + |c|^2)**(1 - q/2)``.
"""
from __future__ import annotations

import numpy as np

#: slack values in (-SLACK_CLAMP, 0) are treated as exactly 0 (rounding)
SLACK_CLAMP = 1e-12
#: displacement evaluation needs at least this much slack
FLUX_MIN_SLACK = 1e-12


class DomainError(ValueError):
    """A state lies outside the admissible set of the model."""


def check_q(q, lo=1.0, hi=2.0, lo_open=False, hi_open=False):
    """Validate the interpolation exponent and return it as a float."""
    q = float(q)
    bad_lo = q <= lo if lo_open else q < lo
    bad_hi = q >= hi if hi_open else q > hi
    if not np.isfinite(q) or bad_lo or bad_hi:
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        raise ValueError(f"q={q!r} outside {lb}{lo:g}, {hi:g}{rb}")
    return q


def q_star(q):
    """Critical Sobolev exponent 3q/(3-q) attached to L^q gradients in R^3."""
    q = check_q(q)
    return 3.0 * q / (3.0 - q)


def _as_vec(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1:] != (3,):
        raise ValueError(f"expected trailing axis of length 3, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite vector component")
    return v


def _excess(g, B):
    # |B|^2 - |g|^2 - (g.B)^2, so that slack = 1 + excess
    gB = np.einsum("...i,...i->...", g, B)
    return (np.einsum("...i,...i->...", B, B)
            - np.einsum("...i,...i->...", g, g) - gB * gB)


def slack(g, B):
    """Raw slack ``1 + |B|^2 - |g|^2 - (g.B)^2`` (no clamping)."""
    return 1.0 + _excess(_as_vec(g), _as_vec(B))


def _first_bad(mask):
    idx = np.argwhere(np.atleast_1d(mask))[0]
    return tuple(int(i) for i in idx)


def _clamped_excess(g, B):
    w = _excess(g, B)
    s = 1.0 + w
    bad = s <= -SLACK_CLAMP
    if np.any(bad):
        i = _first_bad(bad)
        raise DomainError(
            f"inadmissible state at index {i}: slack={np.atleast_1d(s)[i]:.3e} < 0 "
            f"(g={np.broadcast_to(g, s.shape + (3,))[i].tolist()}, "
            f"B={np.broadcast_to(B, s.shape + (3,))[i].tolist()})")
    return np.maximum(w, -1.0)


def admissible(g, B):
    """Return ``(ok, slack)`` where ``ok`` means |g|^2 + (g.B)^2 <= 1 + |B|^2."""
    s = slack(g, B)
    s = np.where((s < 0) & (s > -SLACK_CLAMP), 0.0, s)
    ok = s >= 0
    if np.ndim(s) == 0:
        return bool(ok), float(s)
    return ok, s


def electro_density(g, B, q):
    """Electrostatic energy density ``(1 - slack**(q/2)) / q``.

    Evaluated as ``-expm1(q/2 * log1p(excess)) / q`` so that weak fields keep
    full relative precision.
    """
    q = check_q(q)
    g, B = _as_vec(g), _as_vec(B)
    w = _clamped_excess(g, B)
    with np.errstate(divide="ignore"):
        out = -np.expm1(0.5 * q * np.log1p(w)) / q
    return out if np.ndim(out) else float(out)


def electro_flux(g, B, q):
    """Displacement ``D = (g + (g.B) B) / slack**(1 - q/2)``, the g-gradient of
    :func:`electro_density`.  Requires slack >= ``FLUX_MIN_SLACK``."""
    q = check_q(q)
    g, B = _as_vec(g), _as_vec(B)
    s = 1.0 + _excess(g, B)
    bad = s < FLUX_MIN_SLACK
    if np.any(bad):
        i = _first_bad(bad)
        raise DomainError(f"flux is singular at index {i}: slack={np.atleast_1d(s)[i]:.3e}")
    gB = np.einsum("...i,...i->...", g, B)
    num = g + gB[..., None] * B
    return num * (s ** (0.5 * q - 1.0))[..., None]


def magneto_density(c, q):
    """Magnetostatic energy density ``((1 + |c|^2)**(q/2) - 1) / q``."""
    q = check_q(q)
    c = _as_vec(c)
    out = np.expm1(0.5 * q * np.log1p(np.einsum("...i,...i->...", c, c))) / q
    return out if np.ndim(out) else float(out)


def magneto_field(c, q):
    """Field ``H = c / (1 + |c|^2)**(1 - q/2)``, gradient of :func:`magneto_density`."""
    q = check_q(q)
    c = _as_vec(c)
    return c * ((1.0 + np.einsum("...i,...i->...", c, c)) ** (0.5 * q - 1.0))[..., None]


def growth_constant(q):
    """Explicit lower-envelope constant ``2**(q/2 - 1) * min(1, q/2)``.

    For q in [1, 2) it lies in (0, 1); it equals 1 at q = 2 where the
    envelope is attained exactly.
    """
    q = check_q(q)
    return 2.0 ** (0.5 * q - 1.0) * min(1.0, 0.5 * q)


def growth_bounds(t, q):
    """Return ``(f, lo, hi, c)`` with ``f = (1+t^2)^(q/2) - 1`` and the envelope
    ``c*min(t^2, t^q) <= f <= min(t^2, t^q)``."""
    q = check_q(q)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("growth_bounds needs finite t >= 0")
    c = growth_constant(q)
    f = np.expm1(0.5 * q * np.log1p(t * t))
    hi = np.minimum(t * t, t ** q)
    lo = c * hi
    if np.ndim(f) == 0:
        return float(f), float(lo), float(hi), c
    return f, lo, hi, c


def fundest_check(g, B, q, rtol=1e-12):
    """Check the two-sided estimate

        1 - |g|^2  <=  slack**(q/2)  <=  1 + q/2 (|B|^2 - |g|^2)

    for admissible states.  Returns ``(lower_ok, upper_ok)``; comparisons
    carry a rounding allowance of ``rtol`` times the magnitude of the terms.
    ``q`` may be an array broadcasting against the leading shape.
    """
    q = np.asarray(q, dtype=float)
    if q.size == 0 or not (np.all(np.isfinite(q)) and q.min() >= 1.0 and q.max() <= 2.0):
        raise ValueError("q must lie in [1, 2]")
    g, B = _as_vec(g), _as_vec(B)
    w = _clamped_excess(g, B)
    with np.errstate(divide="ignore"):
        mid = np.exp(0.5 * q * np.log1p(w))
    g2 = np.einsum("...i,...i->...", g, g)
    B2 = np.einsum("...i,...i->...", B, B)
    left = 1.0 - g2
    right = 1.0 + 0.5 * q * (B2 - g2)
    scale = 1.0 + g2 + B2
    lower_ok = left <= mid + rtol * scale
    upper_ok = mid <= right + rtol * scale
    if np.ndim(lower_ok) == 0:
        return bool(lower_ok), bool(upper_ok)
    return lower_ok, upper_ok
