"""Jittered-lattice simplicial meshes of the box (-0.5, 0.5)^d and level hierarchies."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import signed_measures
from .mesh import Mesh
from .validation import check_mesh

MAX_JITTER = 0.45


@dataclass(frozen=True)
class HierarchySpec:
    dim: int
    levels: int
    base_resolution: int = 4
    jitter: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.base_resolution < 1:
            raise ValueError(f"base_resolution must be >= 1, got {self.base_resolution}")
        _check_jitter(self.jitter)

    def resolution(self, level: int) -> int:
        return self.base_resolution * 2 ** (level - 1)


def _check_jitter(jitter):
    if not 0.0 <= jitter < MAX_JITTER:
        raise ValueError(f"jitter must lie in [0, {MAX_JITTER}), got {jitter}")


def level_rng(seed: int, offset: int) -> np.random.Generator:
    """Independent stream per (seed, offset), so levels can be built in any order."""
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(offset),)))


def _lattice_nodes(dim, resolution, jitter, rng):
    axes = [np.arange(resolution + 1)] * dim
    idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    step = 1.0 / resolution
    # boundary nodes keep the coordinate that pins them to their face
    movable = (idx > 0) & (idx < resolution)
    shift = rng.uniform(-jitter, jitter, size=idx.shape) * step * movable
    coords = np.where(idx == resolution, 0.5, -0.5 + idx * step + shift)
    return coords


def _triangles(resolution, flip_bit):
    n = resolution + 1
    i, j = np.meshgrid(np.arange(resolution), np.arange(resolution), indexing="ij")
    i, j = i.ravel(), j.ravel()
    v00 = i * n + j
    v10 = (i + 1) * n + j
    v01 = i * n + j + 1
    v11 = (i + 1) * n + j + 1
    flip = ((i + j) & 1).astype(bool) ^ bool(flip_bit)
    t1 = np.where(flip[:, None], np.stack([v00, v10, v01], 1), np.stack([v00, v10, v11], 1))
    t2 = np.where(flip[:, None], np.stack([v10, v11, v01], 1), np.stack([v00, v11, v01], 1))
    # keep cells of one square adjacent in the ordering
    return np.stack([t1, t2], axis=1).reshape(-1, 3)


def _kuhn_tets(resolution, reflect):
    n = resolution + 1
    i, j, k = (a.ravel() for a in np.meshgrid(*[np.arange(resolution)] * 3, indexing="ij"))
    tets = []
    for perm in itertools.permutations(range(3)):
        corner = np.array(reflect, dtype=np.int64)
        path = [corner.copy()]
        for axis in perm:
            corner[axis] ^= 1
            path.append(corner.copy())
        tets.append(np.stack([((i + c[0]) * n + (j + c[1])) * n + (k + c[2]) for c in path], axis=1))
    return np.stack(tets, axis=1).reshape(-1, 4)


def generate_mesh(dim: int, resolution: int, jitter: float = 0.2, seed: int = 0, offset: int = 0,
                  check: bool = True) -> Mesh:
    """Jittered structured mesh of (-0.5, 0.5)^dim.

    Interior lattice nodes move by up to ``jitter`` cell widths per axis,
    boundary nodes only along their face. Squares are split into 2 triangles
    (diagonal alternating by parity) and cubes into 6 Kuhn tetrahedra.
    Output depends only on the arguments.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    _check_jitter(jitter)
    rng = level_rng(seed, offset)
    orient = rng.integers(0, 2, size=3)
    vertices = _lattice_nodes(dim, resolution, jitter, rng)
    cells = _triangles(resolution, orient[0]) if dim == 2 else _kuhn_tets(resolution, orient)
    negative = signed_measures(vertices[cells]) < 0
    cells[negative, 0], cells[negative, 1] = cells[negative, 1], cells[negative, 0].copy()
    mesh = Mesh(vertices, cells)
    if check:
        check_mesh(mesh)
    return mesh


def generate_hierarchy(spec: HierarchySpec) -> list[Mesh]:
    """Meshes for levels 1..L; level l has ``base_resolution * 2**(l-1)`` cells per axis."""
    return [
        generate_mesh(spec.dim, spec.resolution(level), spec.jitter, spec.seed, offset=level)
        for level in range(1, spec.levels + 1)
    ]
