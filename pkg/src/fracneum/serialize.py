"""File formats: mesh/weights text, grid-function CSV, report JSON.

All numeric output uses repr-precision decimals (%.17g) so re-running a
command with the same configuration reproduces artifacts byte for byte; the
round trip value -> text -> value is exact.  Column layouts are documented in
FORMATS.md at the repository root.
"""

from __future__ import annotations

import json

import numpy as np

from .energy import GridFunction
from .errors import ParameterError
from .mesh import DomainMesh, KernelWeights

_FMT = "%.17g"


def _fmt(x: float) -> str:
    return _FMT % float(x)


def write_weights(path, weights: KernelWeights):
    """Self-describing text dump of a mesh with its kernel weights.

    Header line with the domain, collar and kernel exponent; one ``cell``
    record per cell (index, endpoints, tag, tail weights); one ``pair``
    record per unordered pair with nonzero weight, i < j.
    """
    mesh = weights.mesh
    lines = [
        "omega_lo=%s omega_hi=%s collar_radius=%s alpha=%s n_cells=%d"
        % (
            _fmt(mesh.omega_lo),
            _fmt(mesh.omega_hi),
            _fmt(mesh.collar_radius),
            _fmt(weights.alpha),
            mesh.n_cells,
        )
    ]
    for k in range(mesh.n_cells):
        tag = "interior" if mesh.is_interior[k] else "exterior"
        lines.append(
            "cell %d %s %s %s %s %s"
            % (
                k,
                _fmt(mesh.cell_lo[k]),
                _fmt(mesh.cell_hi[k]),
                tag,
                _fmt(weights.tail_left[k]),
                _fmt(weights.tail_right[k]),
            )
        )
    n = mesh.n_cells
    for i in range(n):
        for j in range(i + 1, n):
            if weights.pair_w[i, j] != 0.0:
                lines.append("pair %d %d %s" % (i, j, _fmt(weights.pair_w[i, j])))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_weights(path) -> KernelWeights:
    """Rebuild the mesh and weights from a text dump."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    header = dict(item.split("=") for item in lines[0].split())
    n = int(header["n_cells"])
    lo = np.empty(n)
    hi = np.empty(n)
    interior = np.zeros(n, dtype=bool)
    tail_l = np.zeros(n)
    tail_r = np.zeros(n)
    w = np.zeros((n, n))
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "cell":
            k = int(parts[1])
            lo[k], hi[k] = float(parts[2]), float(parts[3])
            interior[k] = parts[4] == "interior"
            tail_l[k], tail_r[k] = float(parts[5]), float(parts[6])
        elif parts[0] == "pair":
            i, j = int(parts[1]), int(parts[2])
            w[i, j] = w[j, i] = float(parts[3])
        else:
            raise ParameterError(f"unknown record {parts[0]!r} in weights file")
    mesh = DomainMesh(
        omega_lo=float(header["omega_lo"]),
        omega_hi=float(header["omega_hi"]),
        collar_radius=float(header["collar_radius"]),
        cell_lo=lo,
        cell_hi=hi,
        is_interior=interior,
    )
    return KernelWeights(
        mesh=mesh, alpha=float(header["alpha"]), pair_w=w, tail_left=tail_l, tail_right=tail_r
    )


def write_grid_function(path, u: GridFunction):
    """CSV with one row per cell: cell_center, cell_measure, tag, value."""
    mesh = u.mesh
    rows = ["cell_center,cell_measure,tag,value"]
    for k in range(mesh.n_cells):
        tag = "interior" if mesh.is_interior[k] else "exterior"
        rows.append(
            "%s,%s,%s,%s"
            % (_fmt(mesh.cell_center(k)), _fmt(mesh.cell_measure(k)), tag, _fmt(u.values[k]))
        )
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def read_grid_function(path, mesh: DomainMesh) -> GridFunction:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    values = np.array([float(ln.split(",")[3]) for ln in lines[1:]])
    return GridFunction(values, mesh)


def write_report(path, report_dict: dict):
    """Scalar report fields as pretty JSON with stable key order."""
    with open(path, "w") as fh:
        json.dump(report_dict, fh, indent=2, sort_keys=True)
        fh.write("\n")
