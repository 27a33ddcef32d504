"""Simplicial mesh container and plain-text mesh I/O.

File format (UTF-8)::

    smesh <dim> <n_vertices> <n_cells>
    <x> <y> [<z>]            # n_vertices lines, repr() floats (round-trip exact)
    <i0> <i1> <i2> [<i3>]    # n_cells lines, zero-based vertex indices

Supermesh files append a provenance section::

    provenance <n_cells>
    <a_index> <b_index>      # -1 for no parent
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshFormatError(ValueError):
    """Raised when a mesh file or mesh array is malformed."""


@dataclass(frozen=True, eq=False)
class Mesh:
    """Simplicial mesh in 2D or 3D.

    Parameters
    ----------
    vertices : array, shape (n_vertices, dim)
    cells : array, shape (n_cells, dim + 1)
        Zero-based vertex indices.
    """

    vertices: np.ndarray
    cells: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        cells = np.ascontiguousarray(self.cells, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise MeshFormatError(f"vertices must have shape (n, 2) or (n, 3), got {vertices.shape}")
        dim = vertices.shape[1]
        if cells.ndim != 2 or cells.shape[1] != dim + 1:
            if cells.size == 0:
                cells = cells.reshape(0, dim + 1)
            else:
                raise MeshFormatError(f"cells must have shape (n, {dim + 1}), got {cells.shape}")
        vertices.setflags(write=False)
        cells.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "cells", cells)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def cell_coords(self) -> np.ndarray:
        """Vertex coordinates per cell, shape (n_cells, dim + 1, dim)."""
        if "cell_coords" not in self._cache:
            coords = self.vertices[self.cells]
            coords.setflags(write=False)
            self._cache["cell_coords"] = coords
        return self._cache["cell_coords"]

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.vertices.shape == other.vertices.shape
            and self.cells.shape == other.cells.shape
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.cells, other.cells)
        )

    def __repr__(self):
        return f"Mesh(dim={self.dim}, n_vertices={self.n_vertices}, n_cells={self.n_cells})"


def _format_rows(array, fmt):
    return "".join(" ".join(fmt(v) for v in row) + "\n" for row in array.tolist())


def mesh_to_text(mesh: Mesh) -> str:
    header = f"smesh {mesh.dim} {mesh.n_vertices} {mesh.n_cells}\n"
    return header + _format_rows(mesh.vertices, repr) + _format_rows(mesh.cells, str)


def write_mesh(mesh: Mesh, path, provenance: np.ndarray | None = None) -> None:
    """Write ``mesh`` (and optionally a provenance table) to ``path``."""
    text = mesh_to_text(mesh)
    if provenance is not None:
        provenance = np.asarray(provenance, dtype=np.int64)
        text += f"provenance {provenance.shape[0]}\n" + _format_rows(provenance, str)
    Path(path).write_text(text, encoding="utf-8")


def _parse(lines, path):
    if not lines:
        raise MeshFormatError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "smesh":
        raise MeshFormatError(f"{path}: malformed header {lines[0]!r}")
    try:
        dim, nv, nc = (int(t) for t in head[1:])
    except ValueError as err:
        raise MeshFormatError(f"{path}: malformed header {lines[0]!r}") from err
    if dim not in (2, 3) or nv < 0 or nc < 0:
        raise MeshFormatError(f"{path}: unsupported header values {lines[0]!r}")
    if len(lines) < 1 + nv + nc:
        raise MeshFormatError(f"{path}: expected {nv} vertices and {nc} cells, file is truncated")
    try:
        vertices = np.array([[float(t) for t in ln.split()] for ln in lines[1:1 + nv]], dtype=np.float64)
        cells = np.array([[int(t) for t in ln.split()] for ln in lines[1 + nv:1 + nv + nc]], dtype=np.int64)
    except ValueError as err:
        raise MeshFormatError(f"{path}: {err}") from err
    vertices = vertices.reshape(nv, dim) if nv else np.zeros((0, dim))
    if nc and (cells.ndim != 2 or cells.shape[1] != dim + 1):
        raise MeshFormatError(f"{path}: every cell line needs {dim + 1} indices")
    if vertices.ndim != 2 or vertices.shape[1] != dim:
        raise MeshFormatError(f"{path}: every vertex line needs {dim} coordinates")
    rest = lines[1 + nv + nc:]
    provenance = None
    if rest:
        tag = rest[0].split()
        if len(tag) != 2 or tag[0] != "provenance":
            raise MeshFormatError(f"{path}: unexpected trailing content {rest[0]!r}")
        npv = int(tag[1])
        if npv != nc or len(rest) < 1 + npv:
            raise MeshFormatError(f"{path}: provenance section must list {nc} rows")
        provenance = np.array([[int(t) for t in ln.split()] for ln in rest[1:1 + npv]], dtype=np.int64)
        provenance = provenance.reshape(npv, 2)
    return Mesh(vertices, cells.reshape(nc, dim + 1)), provenance


def read_mesh_with_provenance(path, check: bool = True):
    """Read a mesh file; returns ``(mesh, provenance or None)``."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    mesh, provenance = _parse(lines, path)
    if check:
        from .validation import check_mesh

        check_mesh(mesh, source=str(path))
    return mesh, provenance


def read_mesh(path, check: bool = True) -> Mesh:
    """Read a mesh file written by :func:`write_mesh`.

    Raises
    ------
    MeshFormatError
        On a malformed header, out-of-range indices or degenerate cells.
        Cell errors name the offending cell index.
    """
    return read_mesh_with_provenance(path, check=check)[0]


def write_vtk(mesh: Mesh, path, cell_data: dict | None = None) -> None:
    """Legacy ASCII VTK export (UNSTRUCTURED_GRID), for viewing only."""
    vtk_type = 5 if mesh.dim == 2 else 10
    pts = np.zeros((mesh.n_vertices, 3))
    pts[:, :mesh.dim] = mesh.vertices
    k = mesh.dim + 1
    out = ["# vtk DataFile Version 3.0", "supermesh", "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {mesh.n_vertices} double"]
    out += [" ".join(repr(v) for v in row) for row in pts.tolist()]
    out.append(f"CELLS {mesh.n_cells} {mesh.n_cells * (k + 1)}")
    out += [f"{k} " + " ".join(map(str, row)) for row in mesh.cells.tolist()]
    out.append(f"CELL_TYPES {mesh.n_cells}")
    out += [str(vtk_type)] * mesh.n_cells
    if cell_data:
        out.append(f"CELL_DATA {mesh.n_cells}")
        for name, values in cell_data.items():
            out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out += [repr(float(v)) for v in np.asarray(values).ravel()]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def read_field(path) -> np.ndarray:
    """One value per line."""
    return np.loadtxt(path, dtype=np.float64, ndmin=1)


def write_field(values, path) -> None:
    Path(path).write_text("".join(f"{v!r}\n" for v in np.asarray(values, dtype=float).tolist()), encoding="utf-8")
