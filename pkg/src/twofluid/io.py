"""VTK legacy output of states."""
from __future__ import annotations

import os

import numpy as np

from .mesh import FESpace
from .scheme import TwoFluidState

SCALARS = ("alpha_g", "alpha_l", "phi_g", "rho_g", "rho_l", "p")


def _fields(state: TwoFluidState) -> dict:
    return {
        "alpha_g": state.alpha[0],
        "alpha_l": state.alpha[1],
        "phi_g": state.phi[0],
        "rho_g": state.rho[0],
        "rho_l": state.rho[1],
        "p": state.p,
    }


def write_vtk(space: FESpace, state: TwoFluidState, path, title: str | None = None) -> None:
    """Legacy ASCII unstructured grid; velocities at vertices (bubbles dropped)."""
    mesh = space.mesh
    nv, nt = mesh.n_vertices, mesh.n_triangles
    lines = [
        "# vtk DataFile Version 3.0",
        title or f"two-fluid state step {state.m} time {state.time!r}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nv} double",
    ]
    lines += [f"{float(x)!r} {float(y)!r} 0.0" for x, y in mesh.vertices]
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += ["5"] * nt
    lines.append(f"POINT_DATA {nv}")
    for name, vals in _fields(state).items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(v)) for v in vals]
    for k, name in enumerate(("u_g", "u_l")):
        u = state.u[k][:, :nv]
        lines.append(f"VECTORS {name} double")
        lines += [f"{float(a)!r} {float(b)!r} 0.0" for a, b in zip(u[0], u[1])]
    try:
        d = os.path.dirname(os.fspath(path))
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc}") from exc


def read_vtk_point_data(path) -> dict:
    """Parse the point data written by :func:`write_vtk` (for round-trip checks)."""
    with open(path) as fh:
        tok = fh.read().split("\n")
    out = {}
    i = 0
    n_points = None
    while i < len(tok):
        line = tok[i].strip()
        if line.startswith("POINTS"):
            n_points = int(line.split()[1])
            out["points"] = np.array([[float(v) for v in tok[i + 1 + j].split()] for j in range(n_points)])
            i += n_points
        elif line.startswith("CELLS "):
            n = int(line.split()[1])
            out["cells"] = np.array([[int(v) for v in tok[i + 1 + j].split()] for j in range(n)])
            i += n
        elif line.startswith("CELL_TYPES"):
            n = int(line.split()[1])
            out["cell_types"] = np.array([int(tok[i + 1 + j]) for j in range(n)])
            i += n
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            out[name] = np.array([float(tok[i + 2 + j]) for j in range(n_points)])
            i += n_points + 1
        elif line.startswith("VECTORS"):
            name = line.split()[1]
            out[name] = np.array([[float(v) for v in tok[i + 1 + j].split()] for j in range(n_points)])
            i += n_points
        i += 1
    return out
