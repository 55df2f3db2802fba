import numpy as np
import pytest

from bornq import grid as gr
from bornq.grid import GridField, GridSpec


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec((0, 0, 0), 0.0, (5, 5, 5))
    with pytest.raises(ValueError):
        GridSpec((0, 0, 0), 0.1, (3, 5, 5))
    with pytest.raises(ValueError):
        GridSpec((0, 0), 0.1, (5, 5, 5))


def test_centered_grid_geometry():
    s = GridSpec.centered(1.0, 5)
    assert s.h == 0.5
    np.testing.assert_allclose(s.axes()[0], [-1, -0.5, 0, 0.5, 1])
    assert s.points().shape == (5, 5, 5, 3)
    assert s.cell_centers().shape == (4, 4, 4, 3)
    assert s.boundary_mask().sum() == 125 - 27


def test_gridfield_checks():
    s = GridSpec.centered(1.0, 4)
    with pytest.raises(ValueError):
        GridField(s, np.zeros((4, 4, 5)))
    bad = np.zeros((4, 4, 4))
    bad[1, 1, 1] = np.nan
    with pytest.raises(ValueError):
        GridField(s, bad)
    f = GridField(s, np.ones((4, 4, 4, 3)))
    assert f.is_vector
    assert f.l2_norm() == pytest.approx(np.sqrt(3 * 64 * s.h ** 3))


@pytest.mark.parametrize("corner", gr.SYMMETRIC)
def test_cell_gradient_adjoint(rng, corner):
    phi = rng.normal(size=(6, 7, 5))
    w = rng.normal(size=(5, 6, 4, 3))
    lhs = np.sum(gr.cell_gradient(phi, 0.3, corner) * w)
    rhs = np.sum(phi * gr.cell_gradient_adjoint(w, 0.3, corner))
    assert lhs == pytest.approx(rhs, rel=1e-12)


@pytest.mark.parametrize("corner", gr.SYMMETRIC)
def test_cell_gradient_exact_on_linear(corner):
    s = GridSpec.centered(1.0, 6)
    x = s.points()
    phi = x @ np.array([0.3, -1.2, 2.0])
    g = gr.cell_gradient(phi, s.h, corner)
    np.testing.assert_allclose(g, np.broadcast_to([0.3, -1.2, 2.0], g.shape), atol=1e-12)


def test_stencil_names():
    assert gr.stencil_corners("forward") == ((0, 0, 0),)
    assert len(gr.stencil_corners("symmetric")) == 8
    with pytest.raises(ValueError):
        gr.stencil_corners("central")


def test_laplacian_solve_inverts_apply(rng):
    lap = gr.DirichletLaplacian((9, 8, 10), 0.2)
    v = rng.normal(size=(7, 6, 8))
    np.testing.assert_allclose(lap.solve(lap.apply(v)), v, atol=1e-11)


def test_gradient_normal_matrix_is_laplacian(rng):
    # G^T G restricted to interior nodes is the 7-point Laplacian
    h = 0.25
    lap = gr.DirichletLaplacian((7, 7, 7), h)
    v = np.zeros((7, 7, 7))
    v[1:-1, 1:-1, 1:-1] = rng.normal(size=(5, 5, 5))
    gtg = gr.cell_gradient_adjoint(gr.cell_gradient(v, h), h)
    np.testing.assert_allclose(gtg[1:-1, 1:-1, 1:-1], lap.apply(v[1:-1, 1:-1, 1:-1]), atol=1e-10)


def test_harmonic_extension_linear_exact():
    s = GridSpec.centered(1.0, 9)
    lin = s.points() @ np.array([1.0, 2.0, -0.5]) + 3.0
    ext = gr.harmonic_extension(lin, s.h)
    np.testing.assert_allclose(ext, lin, atol=1e-12)


def test_centered_operators_on_polynomials():
    s = GridSpec.centered(1.0, 9)
    x, y, z = s.mesh()
    f = x * x + x * y - z
    np.testing.assert_allclose(gr.gradient(f, s.h), np.stack([2 * x + y, x, -np.ones_like(z)], -1), atol=1e-12)
    A = np.stack([y * z, x * x, x + y], axis=-1)
    np.testing.assert_allclose(gr.curl(A, s.h), np.stack([np.ones_like(x), y - 1, 2 * x - z], -1), atol=1e-12)
    assert np.abs(gr.divergence(A, s.h)).max() < 1e-12
    J = gr.jacobian_sq(np.stack([x, 2 * y, 3 * z], -1), s.h)
    np.testing.assert_allclose(J, 14.0)


def test_sample_trilinear_exact_on_linear():
    s = GridSpec.centered(1.0, 6)
    f = GridField(s, s.points() @ np.array([1.0, -2.0, 0.5]))
    pts = np.array([[0.1, 0.2, -0.3], [0.77, -0.5, 0.0]])
    np.testing.assert_allclose(gr.sample(f, pts), pts @ np.array([1.0, -2.0, 0.5]), atol=1e-12)
    assert gr.sample(f, np.array([[5.0, 0, 0]]))[0] == 0.0
