"""Uniform rectangular grids, nodal fields and the finite-difference operators
shared by the 3D solvers and checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft
from scipy.ndimage import map_coordinates


@dataclass(frozen=True)
class GridSpec:
    """Node lattice ``origin + h * (i, j, k)`` with ``dims`` nodes per axis."""

    origin: tuple
    h: float
    dims: tuple

    def __post_init__(self):
        origin = tuple(float(o) for o in self.origin)
        dims = tuple(int(n) for n in self.dims)
        if len(origin) != 3 or len(dims) != 3:
            raise ValueError("GridSpec needs 3 origin coordinates and 3 dims")
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"grid spacing must be positive, got {self.h!r}")
        if min(dims) < 4:
            raise ValueError(f"need at least 4 nodes per axis, got {dims}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def centered(cls, half_width, n):
        """Cube ``[-half_width, half_width]^3`` with ``n`` nodes per axis."""
        h = 2.0 * half_width / (n - 1)
        return cls((-half_width,) * 3, h, (n, n, n))

    @property
    def shape(self):
        return self.dims

    @property
    def cell_volume(self):
        return self.h ** 3

    def axes(self):
        return tuple(o + self.h * np.arange(n) for o, n in zip(self.origin, self.dims))

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self):
        """Node coordinates, shape ``dims + (3,)``."""
        return np.stack(self.mesh(), axis=-1)

    def cell_centers(self):
        ax = [a[:-1] + 0.5 * self.h for a in self.axes()]
        return np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)

    def boundary_mask(self):
        m = np.zeros(self.dims, dtype=bool)
        m[0, :, :] = m[-1, :, :] = True
        m[:, 0, :] = m[:, -1, :] = True
        m[:, :, 0] = m[:, :, -1] = True
        return m


@dataclass
class GridField:
    """Scalar (``dims``) or vector (``dims + (3,)``) nodal values on a grid."""

    spec: GridSpec
    values: np.ndarray
    name: str = "field"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape not in (self.spec.dims, self.spec.dims + (3,)):
            raise ValueError(f"values of shape {v.shape} do not match grid {self.spec.dims}")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"field {self.name!r} has non-finite values")
        self.values = v

    @property
    def is_vector(self):
        return self.values.ndim == 4

    def l2_norm(self):
        return float(np.sqrt(np.sum(self.values ** 2) * self.spec.cell_volume))

    def copy(self, values=None, name=None):
        return GridField(self.spec, self.values.copy() if values is None else values,
                         self.name if name is None else name)


# -- staggered forward differences ----------------------------------------
#
# A cell is indexed by its lowest corner (i, j, k).  The "forward" stencil
# takes the three edge differences leaving that corner; the "symmetric"
# stencil averages the energy over the eight corners of the cell, which
# removes the O(h) directional bias at eight times the cost.

FORWARD = ((0, 0, 0),)
SYMMETRIC = tuple((a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1))


def stencil_corners(stencil):
    if stencil == "forward":
        return FORWARD
    if stencil == "symmetric":
        return SYMMETRIC
    raise ValueError(f"unknown stencil {stencil!r}; expected 'forward' or 'symmetric'")


def _edge_slices(corner):
    a, b, c = corner
    sx = (slice(None), slice(b, b - 1 or None), slice(c, c - 1 or None))
    sy = (slice(a, a - 1 or None), slice(None), slice(c, c - 1 or None))
    sz = (slice(a, a - 1 or None), slice(b, b - 1 or None), slice(None))
    return sx, sy, sz


def cell_gradient(phi, h, corner=(0, 0, 0)):
    """Edge-difference gradient of a nodal field, one 3-vector per cell."""
    sx, sy, sz = _edge_slices(corner)
    px, py, pz = phi[sx], phi[sy], phi[sz]
    return np.stack([(px[1:] - px[:-1]) / h,
                     (py[:, 1:] - py[:, :-1]) / h,
                     (pz[:, :, 1:] - pz[:, :, :-1]) / h], axis=-1)


def cell_gradient_adjoint(w, h, corner=(0, 0, 0)):
    """Transpose of :func:`cell_gradient`: cell vectors -> nodal values."""
    n1, n2, n3 = (s + 1 for s in w.shape[:3])
    out = np.zeros((n1, n2, n3))
    sx, sy, sz = _edge_slices(corner)
    ox, oy, oz = out[sx], out[sy], out[sz]
    ox[1:] += w[..., 0] / h
    ox[:-1] -= w[..., 0] / h
    oy[:, 1:] += w[..., 1] / h
    oy[:, :-1] -= w[..., 1] / h
    oz[:, :, 1:] += w[..., 2] / h
    oz[:, :, :-1] -= w[..., 2] / h
    return out


def cell_average(f):
    """Average of a nodal scalar or vector field over the 8 corners of each cell."""
    return 0.125 * (f[:-1, :-1, :-1] + f[1:, :-1, :-1] + f[:-1, 1:, :-1] + f[:-1, :-1, 1:]
                    + f[1:, 1:, :-1] + f[1:, :-1, 1:] + f[:-1, 1:, 1:] + f[1:, 1:, 1:])


# -- Dirichlet Poisson solve ----------------------------------------------

class DirichletLaplacian:
    """Exact inverse of the 7-point ``-Laplacian`` on interior nodes with
    homogeneous Dirichlet data, by type-I sine transforms."""

    def __init__(self, dims, h):
        m = [n - 2 for n in dims]
        lam = [4.0 / h ** 2 * np.sin(0.5 * np.pi * np.arange(1, k + 1) / (k + 1)) ** 2 for k in m]
        self.eig = lam[0][:, None, None] + lam[1][None, :, None] + lam[2][None, None, :]
        self.h = h

    def solve(self, f):
        return fft.idstn(fft.dstn(f, type=1, norm="ortho") / self.eig, type=1, norm="ortho")

    def apply(self, v):
        """Apply ``-Laplacian`` to an interior array (zero outside)."""
        p = np.pad(v, 1)
        out = 6.0 * v
        out -= p[2:, 1:-1, 1:-1] + p[:-2, 1:-1, 1:-1]
        out -= p[1:-1, 2:, 1:-1] + p[1:-1, :-2, 1:-1]
        out -= p[1:-1, 1:-1, 2:] + p[1:-1, 1:-1, :-2]
        return out / self.h ** 2


def harmonic_extension(boundary_values, h):
    """Discrete harmonic field matching the boundary nodes of ``boundary_values``."""
    full = np.array(boundary_values, dtype=float)
    full[1:-1, 1:-1, 1:-1] = 0.0
    lap = DirichletLaplacian(full.shape, h)
    # -Lap(full) restricted to the interior only sees the boundary ring
    rhs = np.zeros([n - 2 for n in full.shape])
    rhs += full[2:, 1:-1, 1:-1] + full[:-2, 1:-1, 1:-1]
    rhs += full[1:-1, 2:, 1:-1] + full[1:-1, :-2, 1:-1]
    rhs += full[1:-1, 1:-1, 2:] + full[1:-1, 1:-1, :-2]
    full[1:-1, 1:-1, 1:-1] = lap.solve(rhs / h ** 2)
    return full


# -- centered differences (second order, one-sided at the faces) -----------

def gradient(f, h):
    """Nodal gradient of a scalar field, shape ``f.shape + (3,)``."""
    return np.stack(np.gradient(f, h, edge_order=2), axis=-1)


def divergence(A, h):
    return sum(np.gradient(A[..., i], h, axis=i, edge_order=2) for i in range(3))


def curl(A, h):
    d = [[np.gradient(A[..., i], h, axis=j, edge_order=2) for j in range(3)] for i in range(3)]
    return np.stack([d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]], axis=-1)


def jacobian_sq(A, h):
    """Pointwise squared Frobenius norm of the Jacobian of a vector field."""
    return sum(np.gradient(A[..., i], h, axis=j, edge_order=2) ** 2
               for i in range(3) for j in range(3))


def sample(field, points, order=1, fill=0.0):
    """Interpolate a nodal field at arbitrary points (trilinear by default)."""
    spec = field.spec
    idx = (np.moveaxis(np.asarray(points, dtype=float), -1, 0)
           - np.asarray(spec.origin).reshape((3,) + (1,) * (np.ndim(points) - 1))) / spec.h
    # rotated node positions can land a rounding error outside the box
    top = (np.asarray(spec.dims) - 1).reshape((3,) + (1,) * (idx.ndim - 1))
    idx = np.where((idx < 0) & (idx > -1e-9), 0.0, idx)
    idx = np.where((idx > top) & (idx < top + 1e-9), top, idx)
    if field.is_vector:
        return np.stack([map_coordinates(field.values[..., i], idx, order=order,
                                         mode="constant", cval=fill) for i in range(3)], axis=-1)
    return map_coordinates(field.values, idx, order=order, mode="constant", cval=fill)


def interior_mask(spec, margin=1):
    m = np.zeros(spec.dims, dtype=bool)
    m[margin:-margin, margin:-margin, margin:-margin] = True
    return m
