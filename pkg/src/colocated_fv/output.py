"""CSV diagnostics and legacy-VTK snapshot writers."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .mesh import Mesh

DIAGNOSTIC_COLUMNS = ("step", "time", "kinetic_energy", "tilde_h_norm", "div_inf",
                      "increment_rate", "pressure_p1nc_norm", "mom_iters", "pres_iters")

VTK_TRIANGLE = 5


def fmt(x) -> str:
    """Shortest round-trip representation, so output bytes are reproducible."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def diagnostic_row(d) -> list:
    return [fmt(d.step), fmt(d.time), fmt(d.kinetic_energy), fmt(d.tilde_h_norm),
            fmt(d.div_inf), fmt(d.increment), fmt(d.pressure_p1nc_norm),
            fmt(d.momentum.iterations), fmt(d.pressure.iterations)]


class DiagnosticsWriter:
    """Streams diagnostics rows to a CSV file; usable as a scheme sink."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(DIAGNOSTIC_COLUMNS)

    def __call__(self, state, diag):
        self._writer.writerow(diagnostic_row(diag))

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_vtk(path, m: Mesh, velocity, pressure, title: str = "colocated_fv snapshot"):
    """Legacy ASCII VTK unstructured grid with cell data ``velocity`` and ``pressure``."""
    velocity = np.asarray(velocity, dtype=float)
    pressure = np.asarray(pressure, dtype=float)
    nt = m.n_triangles
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {m.n_vertices} double"]
    lines += [f"{fmt(x)} {fmt(y)} 0.0" for x, y in m.vertices]
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in m.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += [str(VTK_TRIANGLE)] * nt
    lines.append(f"CELL_DATA {nt}")
    lines.append("VECTORS velocity double")
    lines += [f"{fmt(u)} {fmt(v)} 0.0" for u, v in velocity]
    lines.append("SCALARS pressure double 1")
    lines.append("LOOKUP_TABLE default")
    lines += [fmt(p) for p in pressure]
    Path(path).write_text("\n".join(lines) + "\n")


class VTKSnapshots:
    """Scheme sink writing ``snapshot_<step>.vtk`` files into a directory."""

    def __init__(self, directory, m: Mesh):
        self.directory = Path(directory)
        self.mesh = m
        self.written: list = []

    def __call__(self, state, diag):
        path = self.directory / f"snapshot_{state.step:06d}.vtk"
        write_vtk(path, self.mesh, state.u_curr, state.p_curr,
                  title=f"step {state.step} time {fmt(diag.time)}")
        self.written.append(path)
