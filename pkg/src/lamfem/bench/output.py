"""VTK, CSV and JSON writers for run results."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .. import tensor as T
from ..fem.assembly import deformation_gradients
from ..fem.points import N_GAUSS
from ..materials import LinearElastic

LOAD_CURVE_COLUMNS = [
    "step", "load", "iterations", "substeps", "residual",
    "P11", "P22", "P12", "P21",
    "reaction_right_x", "reaction_right_y", "reaction_top_x", "reaction_top_y",
    "max_gamma",
]


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def load_curve_rows(problem, trajectory):
    rows = []
    for k, st in enumerate(trajectory, start=1):
        Pm = problem.mean_stress(st.P)
        reac = problem.reactions(st.f_int)
        rows.append([
            k, st.load, st.iterations, st.substeps, st.residuals[-1] if st.residuals else 0.0,
            Pm[0, 0], Pm[1, 1], Pm[0, 1], Pm[1, 0],
            *reac["right"], *reac["top"],
            float(np.max(st.gamma)) if st.gamma.size else 0.0,
        ])
    return rows


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (int, float, np.number)) else v for v in row])


def von_mises(problem, u, P):
    """Element-averaged von Mises stress of the Cauchy stress."""
    pts = problem.points
    if isinstance(pts.phase1, LinearElastic) and isinstance(pts.phase2, LinearElastic):
        sigma = P
    else:
        asm = problem.assembler
        F = deformation_gradients(asm.dN, u[asm.edofs]).reshape(-1, 3, 3)
        sigma = P @ np.swapaxes(F, -1, -2) / T.det(F)[:, None, None]
    s = T.dev(sigma)
    vm = np.sqrt(1.5 * T.ddot(s, s))
    return vm.reshape(-1, N_GAUSS).mean(axis=1)


def _grid(fh, mesh, title):
    ne, nn = mesh.n_elements, mesh.n_nodes
    fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    fh.write(f"POINTS {nn} double\n")
    np.savetxt(fh, np.column_stack([mesh.coords, np.zeros(nn)]), fmt="%.17g")
    fh.write(f"CELLS {ne} {5 * ne}\n")
    np.savetxt(fh, np.column_stack([np.full(ne, 4), mesh.conn]), fmt="%d")
    fh.write(f"CELL_TYPES {ne}\n")
    np.savetxt(fh, np.full(ne, 9), fmt="%d")  # VTK_QUAD


def write_vtk(path, problem, state, title="lamfem"):
    """Legacy ASCII unstructured grid: displacement, classification, von Mises, γ."""
    mesh = problem.mesh
    u = state.u.reshape(-1, 2)
    kind = problem.points.element_kind()
    vm = von_mises(problem, state.u, state.P)
    gamma = state.gamma.reshape(-1, N_GAUSS).mean(axis=1)
    ne, nn = mesh.n_elements, mesh.n_nodes
    with open(path, "w") as fh:
        _grid(fh, mesh, title)
        fh.write(f"POINT_DATA {nn}\nVECTORS displacement double\n")
        np.savetxt(fh, np.column_stack([u, np.zeros(nn)]), fmt="%.17g")
        fh.write(f"CELL_DATA {ne}\nSCALARS classification int 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, kind, fmt="%d")
        fh.write("SCALARS von_mises double 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, vm, fmt="%.17g")
        fh.write("SCALARS equivalent_plastic_strain double 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, gamma, fmt="%.17g")


def write_classification_vtk(path, mesh, kind, eta, normal):
    ne = mesh.n_elements
    with open(path, "w") as fh:
        _grid(fh, mesh, "lamfem classification")
        fh.write(f"CELL_DATA {ne}\nSCALARS classification int 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, kind, fmt="%d")
        fh.write("SCALARS eta double 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, eta, fmt="%.17g")
        fh.write("VECTORS normal double\n")
        np.savetxt(fh, normal, fmt="%.17g")


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
