"""Snapshot and diagnostics writers.

Two snapshot formats:

* CSV, one row per mesh node in storage order, full double precision
  (%.16e), so identical states produce byte-identical files;
* legacy ASCII VTK structured grid for quick visualization.  The
  periodic wrap row and column are duplicated so the plotted surface
  closes, giving (nx+1) x (ny+1) points.
"""

from __future__ import annotations

import os

import numpy as np

from .mesh import PeriodicMesh
from .stepper import State, StepDiagnostics

CSV_HEADER = "x,y,rho,c,p1,p2"


class SnapshotFormatError(ValueError):
    """Unknown snapshot format tag."""


def write_snapshot_csv(state: State, mesh: PeriodicMesh, path: str) -> None:
    data = np.column_stack([mesh.nodes, state.rho, state.c, state.p])
    with open(path, "w", newline="\n") as f:
        f.write(CSV_HEADER + "\n")
        for row in data:
            f.write(",".join(f"{v:.16e}" for v in row) + "\n")


def _closed_grid(values: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Nodal vector -> (ny+1, nx+1) grid with periodic wrap duplicated."""
    grid = values.reshape(ny, nx)
    grid = np.concatenate([grid, grid[:1, :]], axis=0)
    return np.concatenate([grid, grid[:, :1]], axis=1)


def write_snapshot_vtk(state: State, mesh: PeriodicMesh, path: str) -> None:
    nx, ny = mesh.nx, mesh.ny
    xs = np.arange(nx + 1) * mesh.hx
    ys = np.arange(ny + 1) * mesh.hy
    n_points = (nx + 1) * (ny + 1)
    rho = _closed_grid(state.rho, nx, ny)
    c = _closed_grid(state.c, nx, ny)
    p1 = _closed_grid(state.p[:, 0], nx, ny)
    p2 = _closed_grid(state.p[:, 1], nx, ny)
    with open(path, "w", newline="\n") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"fields at t={state.t:.6f}\n")
        f.write("ASCII\n")
        f.write("DATASET STRUCTURED_GRID\n")
        f.write(f"DIMENSIONS {nx + 1} {ny + 1} 1\n")
        f.write(f"POINTS {n_points} double\n")
        for j in range(ny + 1):
            for i in range(nx + 1):
                f.write(f"{xs[i]:.16e} {ys[j]:.16e} 0.0\n")
        f.write(f"POINT_DATA {n_points}\n")
        for name, grid in (("rho", rho), ("c", c)):
            f.write(f"SCALARS {name} double 1\n")
            f.write("LOOKUP_TABLE default\n")
            for v in grid.ravel():
                f.write(f"{v:.16e}\n")
        f.write("VECTORS p double\n")
        for a, b in zip(p1.ravel(), p2.ravel()):
            f.write(f"{a:.16e} {b:.16e} 0.0\n")


def write_snapshot(state: State, mesh: PeriodicMesh, fmt: str, path: str) -> None:
    """Dispatch on format tag 'csv' or 'vtk'."""
    if fmt == "csv":
        write_snapshot_csv(state, mesh, path)
    elif fmt == "vtk":
        write_snapshot_vtk(state, mesh, path)
    else:
        raise SnapshotFormatError(f"unknown snapshot format '{fmt}'")


DIAGNOSTICS_HEADER = ("step,time,mass,mass_residual,rho_min,rho_max,"
                      "c_min,c_max,p_max,iters_rho,iters_c,iters_p,"
                      "degenerate_elements")


class DiagnosticsLog:
    """Incremental per-step CSV log of StepDiagnostics records."""

    def __init__(self, path: str):
        self.path = path
        self._f = open(path, "w", newline="\n")
        self._f.write(DIAGNOSTICS_HEADER + "\n")

    def append(self, step: int, diag: StepDiagnostics) -> None:
        self._f.write(
            f"{step},{diag.time:.10f},{diag.mass:.16e},"
            f"{diag.mass_residual:.16e},{diag.rho_min:.16e},"
            f"{diag.rho_max:.16e},{diag.c_min:.16e},{diag.c_max:.16e},"
            f"{diag.p_max:.16e},{diag.rho_solve.iterations},"
            f"{diag.c_solve.iterations},{diag.p_solve.iterations},"
            f"{diag.degenerate_elements}\n")

    def close(self) -> None:
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def snapshot_path(directory: str, stem: str, step: int, fmt: str) -> str:
    return os.path.join(directory, f"{stem}_{step:08d}.{fmt}")
