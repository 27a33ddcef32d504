"""Input validation helpers shared by the library and the estimator API."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .mesh import Mesh, MeshFormatError

DEGENERACY_TOL = 1e-14


def check_mesh(mesh, source: str | None = None, min_cells: int = 1) -> Mesh:
    """Check indices and non-degeneracy of every cell.

    Cells whose measure is below ``1e-14 * diam(D) ** d`` are rejected. The
    error message names the first offending cell.
    """
    if not isinstance(mesh, Mesh):
        raise TypeError(f"expected a Mesh, got {type(mesh).__name__}")
    where = f"{source}: " if source else ""
    if mesh.n_cells < min_cells:
        raise MeshFormatError(f"{where}mesh has {mesh.n_cells} cells, need at least {min_cells}")
    if not np.all(np.isfinite(mesh.vertices)):
        bad = int(np.argwhere(~np.isfinite(mesh.vertices))[0, 0])
        raise MeshFormatError(f"{where}vertex {bad} has a non-finite coordinate")
    cells = mesh.cells
    out_of_range = (cells < 0) | (cells >= mesh.n_vertices)
    if out_of_range.any():
        bad = int(np.argwhere(out_of_range.any(axis=1))[0, 0])
        raise MeshFormatError(
            f"{where}cell {bad} references vertex outside [0, {mesh.n_vertices}): {cells[bad].tolist()}"
        )
    srt = np.sort(cells, axis=1)
    repeated = (srt[:, 1:] == srt[:, :-1]).any(axis=1)
    if repeated.any():
        bad = int(np.argmax(repeated))
        raise MeshFormatError(f"{where}cell {bad} repeats a vertex: {cells[bad].tolist()}")
    from .geometry import cell_measures, domain_diameter

    tol = DEGENERACY_TOL * domain_diameter(mesh) ** mesh.dim
    degenerate = cell_measures(mesh) <= tol
    if degenerate.any():
        bad = int(np.argmax(degenerate))
        raise MeshFormatError(f"{where}cell {bad} is degenerate (measure {cell_measures(mesh)[bad]:.3e})")
    return mesh


def check_same_dim(a: Mesh, b: Mesh) -> int:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim}D mesh vs {b.dim}D mesh")
    return a.dim


def check_field(values, n_cells: int, name: str = "field") -> np.ndarray:
    """Return ``values`` as a float array with trailing axis ``n_cells``.

    Accepts a single field of shape (n_cells,) or a stack (n_fields, n_cells).
    """
    arr = check_array(values, ensure_2d=False, dtype=np.float64, input_name=name)
    if arr.ndim not in (1, 2) or arr.shape[-1] != n_cells:
        raise ValueError(f"{name} has shape {arr.shape}, expected ({n_cells},) or (n_fields, {n_cells})")
    return arr
