"""Cell-pair search and exact simplex-simplex intersection.

Broad phase: a uniform grid over cell bounding boxes. Narrow phase: cell
``a`` is clipped successively by the half-spaces of cell ``b``. An intersection
counts only when its measure exceeds ``rtol * min(|a|, |b|)``; shared faces,
edges and vertices are therefore not intersections.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .geometry import cell_measures, simplex_measures
from .mesh import Mesh
from .validation import check_same_dim

RTOL = 1e-12
# 3D tetrahedralisation: 1 fans from a polytope vertex, 0 from the vertex centroid
APEX, CENTROID = "apex", "centroid"


class GridIndex:
    """Uniform bucket grid over axis-aligned boxes.

    The bucket edge is the largest box edge, so each box lands in at most
    ``2**d`` buckets.
    """

    def __init__(self, boxes_lo, boxes_hi, max_buckets: int | None = None):
        self.boxes_lo = np.ascontiguousarray(boxes_lo, dtype=np.float64)
        self.boxes_hi = np.ascontiguousarray(boxes_hi, dtype=np.float64)
        n, d = self.boxes_lo.shape
        self.lo = self.boxes_lo.min(axis=0) if n else np.zeros(d)
        hi = self.boxes_hi.max(axis=0) if n else np.ones(d)
        extent = np.maximum(hi - self.lo, 1e-300)
        size = float(np.max(self.boxes_hi - self.boxes_lo)) if n else 1.0
        size = max(size, float(extent.max()) * 1e-9)
        max_buckets = max_buckets or max(64, 8 * n)
        while np.prod(np.ceil(extent / size)) > max_buckets:
            size *= 1.5
        self.size = size
        self.dims = np.maximum(np.ceil(extent / size).astype(np.int64), 1)
        self.starts, self.items = K.grid_build(self.boxes_lo, self.boxes_hi, self.lo, self.size, self.dims)

    @classmethod
    def from_simplices(cls, coords, pad: float = 0.0):
        coords = np.asarray(coords, dtype=np.float64)
        return cls(coords.min(axis=1) - pad, coords.max(axis=1) + pad)

    @property
    def n_boxes(self) -> int:
        return self.boxes_lo.shape[0]

    def query(self, lo, hi) -> np.ndarray:
        """Sorted ids of boxes overlapping the query box [lo, hi]."""
        qlo = np.asarray(lo, dtype=np.float64).reshape(1, -1)
        qhi = np.asarray(hi, dtype=np.float64).reshape(1, -1)
        return self.query_pairs(qlo, qhi)[:, 1]

    def query_pairs(self, qlo, qhi) -> np.ndarray:
        """All (query, box) overlap pairs, sorted by query then box id."""
        qlo = np.ascontiguousarray(qlo, dtype=np.float64)
        qhi = np.ascontiguousarray(qhi, dtype=np.float64)
        args = (qlo, qhi, self.boxes_lo, self.boxes_hi, self.lo, self.size, self.dims, self.starts, self.items)
        empty = np.zeros((0, 2), dtype=np.int64)
        counts = K.grid_query_pairs(*args, False, np.zeros(len(qlo), dtype=np.int64), empty)
        offsets = np.zeros(len(qlo) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        out = np.empty((offsets[-1], 2), dtype=np.int64)
        K.grid_query_pairs(*args, True, offsets, out)
        return out


def build_index(mesh: Mesh) -> GridIndex:
    if "index" not in mesh._cache:
        mesh._cache["index"] = GridIndex.from_simplices(mesh.cell_coords)
    return mesh._cache["index"]


@dataclass
class ConvexPolytope:
    """Intersection of two simplices.

    2D vertices are counter-clockwise. In 3D ``faces`` lists vertex ids per
    planar face, ordered counter-clockwise seen from outside.
    """

    dim: int
    vertices: np.ndarray
    faces: list = field(default_factory=list)

    @property
    def measure(self) -> float:
        if self.dim == 2:
            return float(K.polygon_area(self.vertices, len(self.vertices)))
        flen, fidx = _face_arrays(self.faces)
        return float(K.polytope_volume(self.vertices, len(self.vertices), flen, fidx, len(self.faces)))


def _face_arrays(faces):
    flen = np.array([len(f) for f in faces], dtype=np.int64)
    fidx = np.zeros((max(len(faces), 1), max(flen.max(initial=3), 3)), dtype=np.int64)
    for i, f in enumerate(faces):
        fidx[i, :len(f)] = f
    return flen, fidx


def _outward(vertices, faces):
    center = vertices.mean(axis=0)
    out = []
    for f in faces:
        p = vertices[f]
        normal = np.cross(p[1] - p[0], p[2] - p[0])
        if len(f) > 3:
            # Newell normal is robust to a near-collinear leading triple
            normal = np.cross(p, np.roll(p, -1, axis=0)).sum(axis=0)
        out.append(list(f) if normal @ (p.mean(axis=0) - center) >= 0 else list(f)[::-1])
    return out


def clip_simplices(a, b, rtol: float = RTOL) -> ConvexPolytope | None:
    """Intersection of two non-degenerate simplices given by vertex coordinates.

    Returns ``None`` when the intersection measure is at most
    ``rtol * min(|a|, |b|)``.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    d = a.shape[1]
    if a.shape != (d + 1, d) or b.shape != a.shape or d not in (2, 3):
        raise ValueError(f"expected two simplices of shape (d+1, d), got {a.shape} and {b.shape}")
    threshold = rtol * min(simplex_measures(a), simplex_measures(b))
    if d == 2:
        P = np.empty((K.MAXV, 2))
        n = K.clip_tri(a, b, P, np.empty((K.MAXV, 2)), np.empty(K.MAXV))
        if n < 3 or K.polygon_area(P, n) <= threshold:
            return None
        return ConvexPolytope(2, P[:n].copy())
    W = K.make_work3()
    nv, nf, which = K.clip_tet(a, b, W)
    if nv == 0:
        return None
    V, flen, fidx = W[3 * which:3 * which + 3]
    if K.polytope_volume(V, nv, flen, fidx, nf) <= threshold:
        return None
    vertices = V[:nv].copy()
    faces = [fidx[f, :flen[f]].tolist() for f in range(nf)]
    return ConvexPolytope(3, vertices, _outward(vertices, faces))


def triangulate_polytope(poly: ConvexPolytope, scheme: str = APEX) -> np.ndarray:
    """Split a convex polytope into simplices, shape (m, d + 1, d).

    2D fans from vertex 0 (k - 2 triangles). 3D fans either from vertex 0 over
    the faces not containing it (``"apex"``) or from the vertex centroid over
    every face (``"centroid"``); a tetrahedron is returned unchanged. Slivers
    of negligible measure are dropped.
    """
    if poly is None or len(poly.vertices) < poly.dim + 1:
        raise ValueError("cannot triangulate a degenerate polytope")
    vertices = np.ascontiguousarray(poly.vertices, dtype=np.float64)
    if poly.dim == 2:
        out = np.empty((max(len(vertices), 3), 3, 2))
        k = K.fan_polygon(vertices, len(vertices), out)
        if k == 0:
            raise ValueError("cannot triangulate a degenerate polytope")
        return out[:k]
    flen, fidx = _face_arrays(poly.faces)
    out = np.empty((K.MAXS3 * 4, 4, 3))
    k = K.fan_polytope(vertices, len(vertices), flen, fidx, len(poly.faces), _apex_flag(scheme), out)
    if k <= 0:
        raise ValueError("cannot triangulate a degenerate polytope")
    return out[:k]


def _apex_flag(scheme):
    if scheme not in (APEX, CENTROID):
        raise ValueError(f"unknown triangulation scheme {scheme!r}")
    return 1 if scheme == APEX else 0


def bbox_pairs(A: Mesh, B: Mesh, index: GridIndex | None = None) -> np.ndarray:
    """Pairs (a, b) whose bounding boxes overlap (broad phase only)."""
    index = index or build_index(B)
    cc = A.cell_coords
    return index.query_pairs(cc.min(axis=1), cc.max(axis=1))


def clip_pairs(A: Mesh, B: Mesh, pairs, rtol: float = RTOL, scheme: str = APEX, emit: bool = False):
    """Clip every listed pair.

    Returns ``(counts, measures)`` per pair; with ``emit`` also the simplex
    coordinates of all pieces, grouped by pair in listing order.
    """
    pairs = np.ascontiguousarray(pairs, dtype=np.int64).reshape(-1, 2)
    d = A.dim
    n = len(pairs)
    counts = np.zeros(n, dtype=np.int64)
    measures = np.zeros(n)
    am, bm = cell_measures(A), cell_measures(B)
    ac, bc = np.ascontiguousarray(A.cell_coords), np.ascontiguousarray(B.cell_coords)
    offsets = np.zeros(n + 1, dtype=np.int64)
    dummy = np.empty((0, d + 1, d))
    args = (ac, bc, am, bm, pairs, rtol)
    if d == 2:
        K.pairs_2d(*args, False, offsets, counts, measures, dummy)
    else:
        K.pairs_3d(*args, False, offsets, counts, measures, dummy, _apex_flag(scheme))
    if not emit:
        return counts, measures
    np.cumsum(counts, out=offsets[1:])
    out = np.empty((offsets[-1], d + 1, d))
    if d == 2:
        K.pairs_2d(*args, True, offsets, counts, measures, out)
    else:
        K.pairs_3d(*args, True, offsets, counts, measures, out, _apex_flag(scheme))
    return counts, measures, out


def candidate_pairs(A: Mesh, B: Mesh, index: GridIndex | None = None, rtol: float = RTOL) -> np.ndarray:
    """Intersecting cell pairs ``(a_index, b_index)``, shape (k, 2), sorted.

    Bounding-box candidates come from the grid index on ``B`` and are
    filtered by exact clipping.
    """
    check_same_dim(A, B)
    pairs = bbox_pairs(A, B, index)
    counts, _ = clip_pairs(A, B, pairs, rtol)
    return pairs[counts > 0]


def brute_force_pairs(A: Mesh, B: Mesh, rtol: float = RTOL) -> np.ndarray:
    """Same result as :func:`candidate_pairs` by clipping all ``n_A * n_B`` pairs."""
    check_same_dim(A, B)
    ac, bc = np.ascontiguousarray(A.cell_coords), np.ascontiguousarray(B.cell_coords)
    kernel = K.all_pairs_measure_2d if A.dim == 2 else K.all_pairs_measure_3d
    hit = kernel(ac, bc, cell_measures(A), cell_measures(B), rtol)
    return np.argwhere(hit).astype(np.int64)


def locate_points(mesh: Mesh, points, tol: float = 1e-12):
    """Point location. Returns ``(count, first)``: the number of cells containing
    each point (barycentric coordinates >= -tol) and the lowest such cell id (-1 if none)."""
    index = build_index(mesh)
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, mesh.dim)
    return K.locate_points(points, np.ascontiguousarray(mesh.cell_coords), index.lo, index.size, index.dims,
                           index.starts, index.items, tol)
