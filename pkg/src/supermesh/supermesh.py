"""Supermesh assembly, validation and conservative P0 transfer."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .geometry import barycentric_coordinates, cell_measures, domain_diameter
from .intersect import CENTROID, RTOL, bbox_pairs, build_index, clip_pairs, locate_points
from .mesh import Mesh
from .validation import check_field, check_mesh, check_same_dim

logger = logging.getLogger(__name__)

NONE = -1
COVERAGE_RTOL = 1e-9


class UnsupportedOverlapError(ValueError):
    """A parent cell straddles the boundary of the other mesh's domain."""


@dataclass(frozen=True, eq=False)
class Supermesh:
    """Common refinement of two meshes.

    ``provenance[i] = (a, b)`` gives the parent cells of supermesh cell ``i``;
    ``-1`` marks a cell lying outside the other mesh's domain.
    ``pair_counts`` holds the number of simplices produced per intersecting pair.
    """

    mesh: Mesh
    provenance: np.ndarray
    n_a: int
    n_b: int
    pair_counts: np.ndarray | None = None

    def __post_init__(self):
        prov = np.asarray(self.provenance)
        if prov.shape != (self.mesh.n_cells, 2):
            raise ValueError(f"provenance has shape {prov.shape}, expected ({self.mesh.n_cells}, 2)")
        for side, n in ((0, self.n_a), (1, self.n_b)):
            bad = (prov[:, side] < NONE) | (prov[:, side] >= n)
            if bad.any():
                i = int(np.argmax(bad))
                raise ValueError(f"supermesh cell {i} names parent {prov[i, side]} outside [0, {n}) "
                                 f"in mesh {'AB'[side]}")

    @property
    def n_cells(self) -> int:
        return self.mesh.n_cells

    @property
    def ratio(self) -> float:
        return self.n_cells / (self.n_a + self.n_b)

    def overlap_mask(self) -> np.ndarray:
        return (self.provenance[:, 0] != NONE) & (self.provenance[:, 1] != NONE)


def _dedup_vertices(coords):
    d = coords.shape[-1]
    flat = np.ascontiguousarray(coords.reshape(-1, d))
    if len(flat) == 0:
        return np.zeros((0, d)), np.zeros((0, d + 1), dtype=np.int64)
    order = np.lexsort(flat.T[::-1])
    srt = flat[order]
    new = np.ones(len(srt), dtype=bool)
    new[1:] = np.any(srt[1:] != srt[:-1], axis=1)
    ids = np.cumsum(new) - 1
    inverse = np.empty(len(flat), dtype=np.int64)
    inverse[order] = ids
    return srt[new], inverse.reshape(-1, d + 1)


def _uncovered_cells(mesh, pair_ids, measures, side):
    covered = np.bincount(pair_ids, weights=measures, minlength=mesh.n_cells)
    vol = cell_measures(mesh)
    partial = (covered > 0) & (covered < vol * (1.0 - COVERAGE_RTOL))
    if partial.any():
        bad = int(np.argmax(partial))
        raise UnsupportedOverlapError(
            f"cell {bad} of mesh {side} is only partly covered by the other mesh "
            f"({covered[bad] / vol[bad]:.6f} of its measure); boundary-clipped regions are not supported"
        )
    return np.flatnonzero(covered == 0)


def build_supermesh(A: Mesh, B: Mesh, rtol: float = RTOL, scheme: str = CENTROID) -> Supermesh:
    """Supermesh of ``A`` and ``B``.

    Every intersecting pair is clipped and split into simplices carrying
    ``(a, b)`` provenance. Cells with no intersection at all are copied whole.

    Raises
    ------
    UnsupportedOverlapError
        If a cell is partially covered by the other domain.
    """
    d = check_same_dim(A, B)
    pairs = bbox_pairs(A, B)
    counts, measures, coords = clip_pairs(A, B, pairs, rtol, scheme, emit=True)
    hit = counts > 0
    pairs, counts, measures = pairs[hit], counts[hit], measures[hit]
    only_a = _uncovered_cells(A, pairs[:, 0], measures, "A")
    only_b = _uncovered_cells(B, pairs[:, 1], measures, "B")
    prov = np.concatenate([
        np.repeat(pairs, counts, axis=0),
        np.column_stack([only_a, np.full(len(only_a), NONE)]),
        np.column_stack([np.full(len(only_b), NONE), only_b]),
    ]).astype(np.int64)
    cells = np.concatenate([coords, A.cell_coords[only_a], B.cell_coords[only_b]]).reshape(-1, d + 1, d)
    if len(only_a) or len(only_b):
        rank = np.arange(len(prov))
        a_key = np.where(prov[:, 0] == NONE, A.n_cells, prov[:, 0])
        order = np.lexsort((rank, prov[:, 1], a_key))
        prov, cells = prov[order], cells[order]
    vertices, conn = _dedup_vertices(cells)
    logger.debug("supermesh: %d pairs, %d cells, %d copied", len(pairs), len(prov), len(only_a) + len(only_b))
    return Supermesh(Mesh(vertices, conn), prov, A.n_cells, B.n_cells, counts)


@dataclass(frozen=True)
class ValidationReport:
    n_cells: int
    volume_defect: float
    overlap_defect: float
    containment_violations: int
    vertex_coverage: float
    max_parent_multiplicity: tuple
    multiplicity_violations: int

    @property
    def passed(self) -> bool:
        return (
            self.volume_defect <= 1e-10
            and self.containment_violations == 0
            and self.multiplicity_violations == 0
            and self.vertex_coverage == 1.0
        )

    def as_dict(self) -> dict:
        return {
            "n_cells": self.n_cells,
            "volume_defect": self.volume_defect,
            "overlap_defect": self.overlap_defect,
            "containment_violations": self.containment_violations,
            "vertex_coverage": self.vertex_coverage,
            "max_parent_multiplicity_a": self.max_parent_multiplicity[0],
            "max_parent_multiplicity_b": self.max_parent_multiplicity[1],
            "multiplicity_violations": self.multiplicity_violations,
            "status": "PASS" if self.passed else "FAIL",
        }


def overlap_volume(A: Mesh, B: Mesh, rtol: float = RTOL) -> float:
    """|A ∩ B| as the sum of all pairwise clipped measures."""
    _, measures = clip_pairs(A, B, bbox_pairs(A, B), rtol)
    return float(measures.sum())


def _containment_violations(cells, parents, owner, tol):
    bad = np.zeros(len(cells), dtype=bool)
    ok = owner != NONE
    if not ok.any():
        return bad
    pts = np.concatenate([cells[ok], cells[ok].mean(axis=1, keepdims=True)], axis=1)
    chunk = 1 << 17
    idx = np.flatnonzero(ok)
    for s in range(0, len(idx), chunk):
        sl = slice(s, s + chunk)
        parent = parents[owner[idx[sl]]]
        lam = barycentric_coordinates(parent[:, None], pts[sl])
        bad[idx[sl]] = lam.min(axis=(1, 2)) < -tol
    return bad


def validate_supermesh(S: Supermesh, A: Mesh, B: Mesh, tol: float = 1e-10) -> ValidationReport:
    """Check ``S`` against the common-refinement conditions.

    Volume of the union, containment of every cell in its claimed parents,
    uniqueness of the parent found by locating each cell centroid, and
    presence of parent vertices lying in the overlap region.
    """
    check_same_dim(A, B)
    cells = S.mesh.cell_coords
    vol_s = cell_measures(S.mesh)
    overlap = overlap_volume(A, B)
    union = cell_measures(A).sum() + cell_measures(B).sum() - overlap
    volume_defect = abs(vol_s.sum() - union) / union
    overlap_defect = abs(vol_s[S.overlap_mask()].sum() - overlap) / max(overlap, 1e-300)

    bad = _containment_violations(cells, A.cell_coords, S.provenance[:, 0], tol)
    bad |= _containment_violations(cells, B.cell_coords, S.provenance[:, 1], tol)

    centroids = cells.mean(axis=1)
    mult = []
    mult_bad = 0
    for side, parent in ((0, A), (1, B)):
        count, first = locate_points(parent, centroids, tol=0.0)
        expected = (S.provenance[:, side] != NONE).astype(np.int64)
        wrong = (count != expected) | ((expected == 1) & (first != S.provenance[:, side]))
        mult_bad += int(wrong.sum())
        mult.append(int(count.max()) if len(count) else 0)

    scale = max(domain_diameter(A), domain_diameter(B))
    tree = cKDTree(S.mesh.vertices)
    in_overlap = []
    for mesh, other in ((A, B), (B, A)):
        used = np.unique(mesh.cells)
        count, _ = locate_points(other, mesh.vertices[used], tol=1e-12)
        in_overlap.append(mesh.vertices[used[count > 0]])
    targets = np.concatenate(in_overlap)
    if len(targets):
        dist, _ = tree.query(targets, distance_upper_bound=2 * tol * scale)
        coverage = float(np.mean(dist <= tol * scale))
    else:
        coverage = 1.0
    return ValidationReport(
        n_cells=S.n_cells,
        volume_defect=float(volume_defect),
        overlap_defect=float(overlap_defect),
        containment_violations=int(bad.sum()),
        vertex_coverage=coverage,
        max_parent_multiplicity=tuple(mult),
        multiplicity_violations=mult_bad,
    )


def transfer_matrix(S: Supermesh) -> sparse.csr_matrix:
    """Sparse (n_b, n_a) matrix of overlap measures ``|S_ab|``."""
    keep = S.overlap_mask()
    prov = S.provenance[keep]
    return sparse.csr_matrix(
        (cell_measures(S.mesh)[keep], (prov[:, 1], prov[:, 0])), shape=(S.n_b, S.n_a)
    )


def project_p0(field, S: Supermesh):
    """Conservative piecewise-constant projection from mesh A to mesh B.

    ``value_b = sum_a |S_ab| field_a / sum_a |S_ab|``. Returns
    ``(values, covered)``; cells of B without overlap get 0 and
    ``covered = False``. ``field`` may be a stack of shape (n_fields, n_a).
    """
    field = check_field(field, S.n_a)
    W = transfer_matrix(S)
    overlap = np.asarray(W.sum(axis=1)).ravel()
    covered = overlap > 0
    denom = np.where(covered, overlap, 1.0)
    values = (W @ field.T).T / denom
    values = np.where(covered, values, 0.0)
    return values, covered


class SupermeshProjector(BaseEstimator):
    """Conservative P0 transfer between two meshes, scikit-learn style.

    ``fit(source, target)`` builds the supermesh; ``transform(X)`` maps
    per-cell values on ``source`` (shape (n_source_cells,) or
    (n_fields, n_source_cells)) to per-cell values on ``target``.

    Parameters
    ----------
    rtol : float
        Relative measure below which a pairwise intersection is ignored.
    scheme : {"centroid", "apex"}
        3D tetrahedralisation of intersection polytopes.
    """

    def __init__(self, rtol=RTOL, scheme=CENTROID):
        self.rtol = rtol
        self.scheme = scheme

    def fit(self, source, target):
        check_mesh(source)
        check_mesh(target)
        self.supermesh_ = build_supermesh(source, target, rtol=self.rtol, scheme=self.scheme)
        W = transfer_matrix(self.supermesh_)
        overlap = np.asarray(W.sum(axis=1)).ravel()
        self.covered_ = overlap > 0
        self.weights_ = sparse.diags(np.where(self.covered_, 1.0 / np.where(self.covered_, overlap, 1.0), 0.0)) @ W
        self.n_features_in_ = source.n_cells
        self.n_target_cells_ = target.n_cells
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = check_field(X, self.n_features_in_, name="X")
        return (self.weights_ @ X.T).T
