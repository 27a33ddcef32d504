"""Geometric kernels for simplices and per-mesh quasi-uniformity constants.

The vectorised functions take vertex coordinates of shape ``(..., d + 1, d)``;
the ``mesh, cell`` wrappers accept a cell index or an explicit tuple of vertex
ids.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from .mesh import Mesh


def jung_constant(d: int) -> float:
    """Ratio bound between the enclosing-ball diameter and the diameter of a set."""
    return math.sqrt(2.0 * d / (d + 1.0))


def ball_volume_constant(d: int) -> float:
    """``c_pi(d)``: volume of a ball of diameter ``t`` is ``c_pi * (t / 2) ** d``."""
    try:
        return {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[d]
    except KeyError:
        raise ValueError(f"unsupported dimension {d}") from None


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    diameter: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        if not self.diameter >= 0:
            raise ValueError(f"ball diameter must be non-negative, got {self.diameter}")

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def measure(self) -> float:
        return ball_volume_constant(self.dim) * self.radius ** self.dim

    def distance(self, points) -> np.ndarray:
        """Euclidean distance from each point to the closed ball (0 inside)."""
        points = np.atleast_2d(points)
        return np.maximum(np.linalg.norm(points - self.center, axis=1) - self.radius, 0.0)


@dataclass(frozen=True)
class QuasiUniformityReport:
    """Tight mesh-size and shape constants of a single mesh.

    ``h * diam_domain`` is the largest enclosing-ball diameter over the cells and
    ``rho * h * diam_domain`` the smallest inscribed-ball diameter.
    """

    dim: int
    h: float
    rho: float
    diam_domain: float
    volume_domain: float
    n_cells: int

    @property
    def h_tilde(self) -> float:
        return self.h * self.diam_domain


def _cell_coords(mesh: Mesh, cell) -> np.ndarray:
    if np.ndim(cell) == 0:
        return mesh.cell_coords[int(cell)]
    ids = np.asarray(cell, dtype=np.int64)
    if ids.shape != (mesh.dim + 1,):
        raise ValueError(f"a {mesh.dim}D simplex needs {mesh.dim + 1} vertex ids, got {ids.shape}")
    return mesh.vertices[ids]


def signed_measures(coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.float64)
    d = coords.shape[-1]
    edges = coords[..., 1:, :] - coords[..., :1, :]
    if d == 2:
        det = edges[..., 0, 0] * edges[..., 1, 1] - edges[..., 0, 1] * edges[..., 1, 0]
        return det / 2.0
    if d == 3:
        det = np.einsum("...i,...i->...", edges[..., 0, :], np.cross(edges[..., 1, :], edges[..., 2, :]))
        return det / 6.0
    return np.linalg.det(edges) / math.factorial(d)


def simplex_measures(coords) -> np.ndarray:
    return np.abs(signed_measures(coords))


def simplex_measure(mesh: Mesh, cell) -> float:
    """d-volume of one cell; 0 for a degenerate cell."""
    return float(simplex_measures(_cell_coords(mesh, cell)))


def cell_measures(mesh: Mesh) -> np.ndarray:
    if "measures" not in mesh._cache:
        m = simplex_measures(mesh.cell_coords)
        m.setflags(write=False)
        mesh._cache["measures"] = m
    return mesh._cache["measures"]


def simplex_diameters(coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.float64)
    k = coords.shape[-2]
    best = np.zeros(coords.shape[:-2])
    for i, j in itertools.combinations(range(k), 2):
        best = np.maximum(best, np.linalg.norm(coords[..., i, :] - coords[..., j, :], axis=-1))
    return best


def simplex_diameter(mesh: Mesh, cell) -> float:
    """Longest edge of the cell."""
    return float(simplex_diameters(_cell_coords(mesh, cell)))


def _affine_circumcenters(points):
    """Centre of the smallest sphere through ``points`` (shape (n, k, d)) within their affine hull."""
    p0 = points[:, 0, :]
    e = points[:, 1:, :] - p0[:, None, :]
    gram = np.einsum("nid,njd->nij", e, e)
    rhs = 0.5 * np.einsum("nii->ni", gram)
    lam = np.linalg.solve(gram, rhs[..., None])[..., 0]
    return p0 + np.einsum("ni,nid->nd", lam, e)


def min_enclosing_balls(coords):
    """Minimum enclosing balls of a batch of simplices.

    Returns ``(centers, diameters)``. Every candidate ball is the smallest
    sphere through a vertex subset of size >= 2; the answer is the smallest
    candidate that contains all vertices.
    """
    coords = np.asarray(coords, dtype=np.float64)
    single = coords.ndim == 2
    if single:
        coords = coords[None]
    n, k, _ = coords.shape
    scale = simplex_diameters(coords)
    best_r = np.full(n, np.inf)
    best_c = np.zeros((n, coords.shape[2]))
    for size in range(2, k + 1):
        for subset in itertools.combinations(range(k), size):
            pts = coords[:, subset, :]
            if size == 2:
                c = 0.5 * (pts[:, 0] + pts[:, 1])
            else:
                c = _affine_circumcenters(pts)
            r = np.linalg.norm(pts[:, 0] - c, axis=1)
            far = np.max(np.linalg.norm(coords - c[:, None, :], axis=2), axis=1)
            ok = (far <= r + 1e-12 * scale) & (r < best_r)
            best_r = np.where(ok, r, best_r)
            best_c[ok] = c[ok]
    if single:
        return best_c[0], 2.0 * best_r[0]
    return best_c, 2.0 * best_r


def min_enclosing_ball(mesh: Mesh, cell) -> Ball:
    center, diameter = min_enclosing_balls(_cell_coords(mesh, cell))
    return Ball(center, float(diameter))


def facet_measures(coords) -> np.ndarray:
    """(d-1)-measure of the facet opposite each vertex, shape (..., d + 1)."""
    coords = np.asarray(coords, dtype=np.float64)
    d = coords.shape[-1]
    out = np.empty(coords.shape[:-1])
    for i in range(d + 1):
        face = np.delete(coords, i, axis=-2)
        if d == 2:
            out[..., i] = np.linalg.norm(face[..., 1, :] - face[..., 0, :], axis=-1)
        elif d == 3:
            cr = np.cross(face[..., 1, :] - face[..., 0, :], face[..., 2, :] - face[..., 0, :])
            out[..., i] = 0.5 * np.linalg.norm(cr, axis=-1)
        else:
            raise ValueError(f"unsupported dimension {d}")
    return out


def inscribed_balls(coords):
    """Inspheres of a batch of simplices; returns ``(centers, diameters)``."""
    coords = np.asarray(coords, dtype=np.float64)
    d = coords.shape[-1]
    f = facet_measures(coords)
    total = f.sum(axis=-1)
    radius = d * simplex_measures(coords) / total
    centers = np.einsum("...i,...id->...d", f, coords) / total[..., None]
    return centers, 2.0 * radius


def inscribed_ball(mesh: Mesh, cell) -> Ball:
    center, diameter = inscribed_balls(_cell_coords(mesh, cell))
    return Ball(center, float(diameter))


def barycentric_coordinates(coords, points) -> np.ndarray:
    """Barycentric coordinates of ``points`` (..., d) in simplices ``coords`` (..., d + 1, d)."""
    coords = np.asarray(coords, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    t = np.swapaxes(coords[..., 1:, :] - coords[..., :1, :], -1, -2)
    lam = np.linalg.solve(t, (points - coords[..., 0, :])[..., None])[..., 0]
    return np.concatenate([1.0 - lam.sum(axis=-1, keepdims=True), lam], axis=-1)


def point_set_diameter(points) -> float:
    """Largest pairwise distance; only convex-hull vertices are compared."""
    points = np.asarray(points, dtype=np.float64)
    if len(points) < 2:
        return 0.0
    candidates = points
    if len(points) > points.shape[1] + 1:
        try:
            candidates = points[ConvexHull(points).vertices]
        except QhullError:
            candidates = points
    return float(np.max(pdist(candidates)))


def domain_diameter(mesh: Mesh) -> float:
    if "diam" not in mesh._cache:
        used = mesh.vertices[np.unique(mesh.cells)] if mesh.n_cells else mesh.vertices
        mesh._cache["diam"] = point_set_diameter(used)
    return mesh._cache["diam"]


def quasi_uniformity_constants(mesh: Mesh) -> QuasiUniformityReport:
    """Tight ``h`` and ``rho`` of a mesh.

    ``h = max_e diam(enclosing ball of e) / diam(D)`` and
    ``rho = min_e diam(inscribed ball of e) / (h * diam(D))``, with ``diam(D)``
    the largest distance between mesh vertices.
    """
    if mesh.n_cells == 0:
        raise ValueError("quasi-uniformity constants are undefined for an empty mesh")
    if "qu" in mesh._cache:
        return mesh._cache["qu"]
    diam = domain_diameter(mesh)
    coords = mesh.cell_coords
    chunk = 1 << 16
    outer = 0.0
    inner = np.inf
    for start in range(0, mesh.n_cells, chunk):
        block = coords[start:start + chunk]
        outer = max(outer, float(np.max(min_enclosing_balls(block)[1])))
        inner = min(inner, float(np.min(inscribed_balls(block)[1])))
    h = outer / diam
    report = QuasiUniformityReport(
        dim=mesh.dim,
        h=h,
        rho=inner / (h * diam),
        diam_domain=diam,
        volume_domain=float(cell_measures(mesh).sum()),
        n_cells=mesh.n_cells,
    )
    mesh._cache["qu"] = report
    return report
