import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bornq import densities as dn
from bornq.verify import random_admissible

E1 = np.array([1.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
ZERO = np.zeros(3)

vec = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)
qs = st.floats(1.0, 2.0)


def test_electro_density_examples():
    assert dn.electro_density(ZERO, ZERO, 1.0) == 0.0
    assert dn.electro_density(ZERO, E1, 1.0) == pytest.approx(1 - np.sqrt(2), abs=1e-15)
    g = np.array([0.0, 0.6, 0.0])
    assert dn.electro_density(g, ZERO, 1.0) == pytest.approx(0.2, abs=1e-15)


def test_electro_density_rejects_inadmissible():
    with pytest.raises(dn.DomainError, match="slack"):
        dn.electro_density(np.array([1.2, 0, 0]), ZERO, 1.5)


def test_electro_density_reports_offending_index():
    g = np.zeros((4, 3))
    g[2] = [2.0, 0, 0]
    with pytest.raises(dn.DomainError, match=r"\(2,\)"):
        dn.electro_density(g, np.zeros((4, 3)), 1.0)


def test_slack_rounding_is_clamped():
    g = np.array([1.0 + 1e-14, 0, 0])
    assert dn.electro_density(g, ZERO, 1.0) == pytest.approx(1.0)
    ok, s = dn.admissible(g, ZERO)
    assert ok and s == 0.0


@pytest.mark.parametrize("g,B,q,expected", [
    (ZERO, E1, 1.3, ZERO),
    (np.array([0.6, 0, 0]), ZERO, 1.0, np.array([0.75, 0, 0])),
    (np.array([0.5, 0, 0]), E3, 2.0, np.array([0.5, 0, 0])),
])
def test_electro_flux_examples(g, B, q, expected):
    np.testing.assert_allclose(dn.electro_flux(g, B, q), expected, atol=1e-15)


def test_electro_flux_singular_on_boundary():
    with pytest.raises(dn.DomainError):
        dn.electro_flux(E1, ZERO, 1.0)


@pytest.mark.parametrize("g,B,expected", [
    (ZERO, ZERO, (True, 1.0)),
    (E1, ZERO, (True, 0.0)),
    (E1, E1, (True, 0.0)),
    (np.array([1.1, 0, 0]), ZERO, (False, 1 - 1.21)),
])
def test_admissible_examples(g, B, expected):
    ok, s = dn.admissible(g, B)
    assert ok == expected[0]
    assert s == pytest.approx(expected[1], abs=1e-15)


@pytest.mark.parametrize("c,q,expected", [
    (ZERO, 1.4, 0.0),
    (E1, 2.0, 0.5),
    (np.sqrt(3) * E3, 1.0, 1.0),
])
def test_magneto_density_examples(c, q, expected):
    assert dn.magneto_density(c, q) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("c,q,expected", [
    (ZERO, 1.5, ZERO),
    (E1, 1.0, E1 / np.sqrt(2)),
    (2 * E1, 2.0, 2 * E1),
])
def test_magneto_field_examples(c, q, expected):
    np.testing.assert_allclose(dn.magneto_field(c, q), expected, atol=1e-15)


def test_nonfinite_inputs_rejected():
    with pytest.raises(ValueError):
        dn.magneto_density(np.array([np.nan, 0, 0]), 1.5)
    with pytest.raises(ValueError):
        dn.electro_density(ZERO, np.array([np.inf, 0, 0]), 1.5)


@pytest.mark.parametrize("q", [0.9, 2.1, np.nan])
def test_q_out_of_range(q):
    with pytest.raises(ValueError):
        dn.magneto_density(ZERO, q)


def test_q_star():
    assert dn.q_star(1.5) == pytest.approx(3.0)
    assert dn.q_star(2.0) == pytest.approx(6.0)


def test_weak_field_precision():
    # (1 - (1 - eps)^(1/2)) / 1 = eps/2 to full relative precision
    g = np.array([1e-9, 0, 0])
    assert dn.electro_density(g, ZERO, 1.0) == pytest.approx(0.5e-18, rel=1e-12)
    assert dn.magneto_density(g, 1.5) == pytest.approx(0.5e-18, rel=1e-12)


def _fd_grad(f, x, h=1e-5):
    out = np.zeros(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        out[k] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def test_electro_flux_matches_finite_differences(rng):
    checked = 0
    g, B, q = random_admissible(rng, 400)
    for gi, Bi, qi in zip(g, B, q):
        if dn.slack(gi, Bi) < 0.05:
            continue
        fd = _fd_grad(lambda x: dn.electro_density(x, Bi, qi), gi)
        an = dn.electro_flux(gi, Bi, qi)
        assert np.linalg.norm(fd - an) <= 1e-6 * max(np.linalg.norm(an), 1e-3)
        checked += 1
    assert checked > 100


def test_magneto_field_matches_finite_differences(rng):
    for _ in range(200):
        c = rng.normal(size=3) * rng.uniform(0, 5)
        q = rng.uniform(1, 2)
        fd = _fd_grad(lambda x: dn.magneto_density(x, q), c)
        an = dn.magneto_field(c, q)
        assert np.linalg.norm(fd - an) <= 1e-6 * max(np.linalg.norm(an), 1e-3)


@settings(max_examples=300, deadline=None)
@given(vec, vec, qs, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_slack_power_midpoint_concave(d1, B, q, a1, a2):
    # build two distinct admissible gradients along random directions
    d2 = np.roll(d1, 1) + np.array([0.3, -0.2, 0.1])
    pts = []
    for d, a in ((d1, a1), (d2, a2)):
        n = np.linalg.norm(d)
        if n < 1e-6:
            return
        u = d / n
        rmax = np.sqrt((1 + B @ B) / (1 + (u @ B) ** 2))
        pts.append(0.95 * a * rmax * u)
    g1, g2 = pts
    if np.linalg.norm(g1 - g2) < 1e-3:
        return
    f = lambda g: dn.slack(g, B) ** (q / 2)
    assert f(0.5 * (g1 + g2)) > 0.5 * (f(g1) + f(g2))


@pytest.mark.parametrize("q", [1.0, 1.2, 1.5, 1.9, 2.0])
def test_growth_envelope_sweep(q):
    t = np.concatenate([[0.0], np.logspace(-8, 6, 20001)])
    f, lo, hi, c = dn.growth_bounds(t, q)
    assert 0 < c <= 1
    assert np.all(lo <= f * (1 + 1e-13))
    assert np.all(f <= hi * (1 + 1e-13))


@pytest.mark.parametrize("t,q,f,hi", [
    (0.0, 1.5, 0.0, 0.0),
    (1.0, 1.0, np.sqrt(2) - 1, 1.0),
    (10.0, 2.0, 100.0, 100.0),
])
def test_growth_bounds_examples(t, q, f, hi):
    ff, lo, hh, c = dn.growth_bounds(t, q)
    assert ff == pytest.approx(f, rel=1e-14, abs=1e-300)
    assert hh == pytest.approx(hi)
    assert lo == pytest.approx(c * hi)


def test_growth_constant_values():
    assert dn.growth_constant(2.0) == 1.0
    assert dn.growth_constant(1.0) == pytest.approx(0.5 / np.sqrt(2))


def test_growth_bounds_rejects_negative():
    with pytest.raises(ValueError):
        dn.growth_bounds(-1.0, 1.5)


def test_fundest_examples():
    assert dn.fundest_check(ZERO, ZERO, 1.3) == (True, True)
    with pytest.raises(dn.DomainError):
        dn.fundest_check(np.array([1.2, 0, 0]), ZERO, 1.0)


def test_fundest_random_sweep(rng):
    g, B, q = random_admissible(rng, 200000)
    lo, up = dn.fundest_check(g, B, q)
    assert lo.all() and up.all()


@settings(max_examples=300, deadline=None)
@given(vec, vec, qs)
def test_fundest_property(d, B, q):
    n = np.linalg.norm(d)
    if n == 0:
        return
    u = d / n
    rmax = np.sqrt((1 + B @ B) / (1 + (u @ B) ** 2))
    g = u * min(n, rmax) * (1 - 1e-12)
    assert dn.fundest_check(g, B, q) == (True, True)
