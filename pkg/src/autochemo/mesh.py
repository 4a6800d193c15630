"""Uniform periodic triangular meshes of a rectangle.

Every rectangular cell is split along its lower-left to upper-right
diagonal, so the mesh is translation invariant: all even-indexed
("lower") triangles are congruent, as are all odd-indexed ("upper")
ones.  Node identification is fully periodic; there are no boundary
nodes, and point location works for any point in the plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Tolerance for edge/diagonal tie-breaking in point location, in cell-normalized
# coordinates.  Ties go to the lower triangle.
EPS_GEO = 1e-12


class InvalidDimensionError(ValueError):
    """Mesh constructed with non-positive sizes or fewer than 2 cells per axis."""


class NonFiniteCoordinateError(ValueError):
    """A query point contains NaN or infinity."""


@dataclass(eq=False)
class PeriodicMesh:
    """Structured periodic triangulation of [0, Lx) x [0, Ly).

    nx, ny      cells per axis
    Lx, Ly      domain lengths
    hx, hy      cell spacings Lx/nx, Ly/ny
    nodes       (nx*ny, 2) coordinates of the unique periodic nodes,
                row-major index i + nx*j
    elements    (2*nx*ny, 3) node indices, counterclockwise; cell (i, j)
                owns elements 2*(i + nx*j) (lower) and 2*(i + nx*j)+1 (upper)
    elem_coords (2*nx*ny, 3, 2) vertex coordinates unwrapped to the anchor
                cell, so each triangle spans at most one cell per axis
    """

    nx: int
    ny: int
    Lx: float
    Ly: float
    hx: float
    hy: float
    nodes: np.ndarray
    elements: np.ndarray
    elem_coords: np.ndarray
    _period: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self._period = np.array([self.Lx, self.Ly])

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def n_elements(self) -> int:
        return 2 * self.nx * self.ny

    @property
    def element_area(self) -> float:
        return 0.5 * self.hx * self.hy

    def wrap(self, q):
        return wrap_point(self, q)

    def locate(self, q):
        return locate_point(self, q)


def build_mesh(nx: int, ny: int, Lx: float, Ly: float) -> PeriodicMesh:
    """Build the uniform periodic triangulation with nx*ny cells."""
    if nx < 2 or ny < 2:
        raise InvalidDimensionError(f"need at least 2 cells per axis, got nx={nx}, ny={ny}")
    if not (Lx > 0 and Ly > 0):
        raise InvalidDimensionError(f"domain lengths must be positive, got Lx={Lx}, Ly={Ly}")

    hx, hy = Lx / nx, Ly / ny
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    nodes = np.column_stack([(ii * hx).ravel(), (jj * hy).ravel()])

    # periodic node index of cell corners
    i = np.tile(np.arange(nx), ny)
    j = np.repeat(np.arange(ny), nx)
    ip, jp = (i + 1) % nx, (j + 1) % ny
    n00 = i + nx * j
    n10 = ip + nx * j
    n11 = ip + nx * jp
    n01 = i + nx * jp

    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    elements = np.empty((2 * nx * ny, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    anchors = np.column_stack([i * hx, j * hy])
    offsets = np.array([
        [[0.0, 0.0], [hx, 0.0], [hx, hy]],   # lower
        [[0.0, 0.0], [hx, hy], [0.0, hy]],   # upper
    ])
    elem_coords = np.empty((2 * nx * ny, 3, 2))
    elem_coords[0::2] = anchors[:, None, :] + offsets[0]
    elem_coords[1::2] = anchors[:, None, :] + offsets[1]

    return PeriodicMesh(nx=nx, ny=ny, Lx=Lx, Ly=Ly, hx=hx, hy=hy,
                        nodes=nodes, elements=elements, elem_coords=elem_coords)


def wrap_point(mesh: PeriodicMesh, q) -> np.ndarray:
    """Map q (shape (..., 2)) into [0, Lx) x [0, Ly) modulo the period."""
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise NonFiniteCoordinateError("point has non-finite coordinates")
    out = np.mod(q, mesh._period)
    # float mod of a tiny negative can land exactly on the period
    return np.where(out >= mesh._period, out - mesh._period, out)


def locate_points(mesh: PeriodicMesh, q) -> tuple[np.ndarray, np.ndarray]:
    """Locate a batch of points; returns (element indices, barycentric coords).

    Wraps periodically first.  O(1) per point: the owning cell comes from
    floor division, the triangle from which side of the cell diagonal the
    point falls on (lower triangle wins ties within EPS_GEO).
    """
    qw = wrap_point(mesh, q)
    x, y = qw[..., 0], qw[..., 1]
    i = np.minimum(np.floor(x / mesh.hx).astype(np.int64), mesh.nx - 1)
    j = np.minimum(np.floor(y / mesh.hy).astype(np.int64), mesh.ny - 1)
    u = x / mesh.hx - i
    v = y / mesh.hy - j
    in_lower = v <= u + EPS_GEO

    lam = np.empty(qw.shape[:-1] + (3,))
    lam[..., 0] = np.where(in_lower, 1.0 - u, 1.0 - v)
    lam[..., 1] = np.where(in_lower, u - v, u)
    lam[..., 2] = np.where(in_lower, v, v - u)

    elems = 2 * (i + mesh.nx * j) + (~in_lower)
    return elems, lam


def locate_point(mesh: PeriodicMesh, q) -> tuple[int, np.ndarray]:
    """Single-point variant of locate_points."""
    elems, lam = locate_points(mesh, np.asarray(q, dtype=float))
    return int(elems), lam
