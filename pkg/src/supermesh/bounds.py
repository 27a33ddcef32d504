"""Cell-count, intersection-count and supermesh-size bounds for quasi-uniform meshes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .geometry import Ball, QuasiUniformityReport, ball_volume_constant, cell_measures, quasi_uniformity_constants
from .intersect import GridIndex, candidate_pairs, locate_points
from .mesh import Mesh
from .validation import check_same_dim

# largest number of simplices one pairwise intersection is split into, per dimension
MAX_PIECES = {1: 1, 2: 4, 3: 45}
DEFAULT_SAMPLES = 10**6


def domain_constant(report: QuasiUniformityReport) -> float:
    """``c_D = 2**d |D| / (c_pi(d) diam(D)**d)``."""
    d = report.dim
    return 2.0**d * report.volume_domain / (ball_volume_constant(d) * report.diam_domain**d)


def cell_count_bounds(report: QuasiUniformityReport) -> tuple[float, float]:
    """``(c_D h**-d, c_D rho**-d h**-d)``: the admissible range for the cell count."""
    d = report.dim
    c = domain_constant(report)
    lower = c * report.h ** (-d)
    return lower, lower * report.rho ** (-d)


@dataclass(frozen=True)
class FatteningEstimate:
    measure: float
    std_error: float
    n_samples: int

    @property
    def upper(self) -> float:
        """Estimate plus three standard errors."""
        return self.measure + 3.0 * self.std_error


def _as_simplices(G, dim):
    if isinstance(G, Mesh):
        return G.cell_coords
    G = np.asarray(G, dtype=np.float64)
    if G.size == 0:
        return np.zeros((0, dim + 1, dim))
    if G.ndim == 2:
        G = G[None]
    if G.shape[1:] != (dim + 1, dim):
        raise ValueError(f"G must hold {dim}D simplices of shape (m, {dim + 1}, {dim}), got {G.shape}")
    return G


def fattening_measure(G, D_h: Mesh, delta: float, n_samples: int = DEFAULT_SAMPLES,
                      seed: int = 0) -> FatteningEstimate:
    """Monte Carlo estimate of ``|F_delta(G) ∩ D|``.

    ``G`` is a set of simplices (array (m, d+1, d) or a Mesh) or a :class:`Ball`;
    ``F_delta(G)`` holds the points within ``delta`` of ``G`` and is empty for
    empty ``G``. Points are drawn uniformly from the bounding box of ``D``
    intersected with the ``delta``-padded bounding box of ``G``, which contains
    every point that can count.
    """
    if n_samples < 100:
        raise ValueError(f"n_samples must be >= 100, got {n_samples}")
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    d = D_h.dim
    dom_lo, dom_hi = D_h.vertices.min(axis=0), D_h.vertices.max(axis=0)
    if isinstance(G, Ball):
        g_lo, g_hi = G.center - G.radius, G.center + G.radius
        index = None
    else:
        G = _as_simplices(G, d)
        if len(G) == 0:
            return FatteningEstimate(0.0, 0.0, n_samples)
        g_lo, g_hi = G.min(axis=(0, 1)), G.max(axis=(0, 1))
        index = GridIndex.from_simplices(G, pad=delta)
        G = np.ascontiguousarray(G)
    lo = np.maximum(dom_lo, g_lo - delta)
    hi = np.minimum(dom_hi, g_hi + delta)
    if np.any(hi <= lo):
        return FatteningEstimate(0.0, 0.0, n_samples)
    box = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 1 << 18
    for start in range(0, n_samples, chunk):
        pts = rng.uniform(lo, hi, size=(min(chunk, n_samples - start), d))
        if index is None:
            near = G.distance(pts) <= delta
        else:
            near = K.within_distance(pts, G, index.lo, index.size, index.dims, index.starts, index.items, delta)
        pts = pts[near]
        count, _ = locate_points(D_h, pts)
        hits += int(np.count_nonzero(count))
    p = hits / n_samples
    return FatteningEstimate(box * p, box * np.sqrt(p * (1.0 - p) / n_samples), n_samples)


def intersection_count(G, D_h: Mesh) -> int:
    """Number of cells of ``D_h`` meeting the simplices ``G`` in positive measure."""
    G = _as_simplices(G, D_h.dim)
    if len(G) == 0:
        return 0
    k = D_h.dim + 1
    gmesh = Mesh(G.reshape(-1, D_h.dim), np.arange(len(G) * k).reshape(-1, k))
    return len(np.unique(candidate_pairs(gmesh, D_h)[:, 1]))


def intersection_count_bound(G, D_h: Mesh, n_samples: int = DEFAULT_SAMPLES, seed: int = 0) -> float:
    """Upper bound on the number of cells of ``D_h`` that ``G`` can meet.

    ``min(rho**-d |F(G) ∩ D| / |D|, 1) * n_D`` with the fattening radius
    ``h * diam(D)``; the measure enters as its Monte Carlo estimate plus 3
    standard errors.
    """
    q = quasi_uniformity_constants(D_h)
    fat = fattening_measure(G, D_h, q.h_tilde, n_samples, seed)
    share = q.rho ** (-q.dim) * fat.upper / q.volume_domain
    return min(share, 1.0) * q.n_cells


@dataclass(frozen=True)
class BoundConstants:
    d: int
    c_pi: float
    c_a: float
    c_b: float
    c_bar: int
    rho_a: float
    rho_b: float
    lambda_ab: float
    c_in: float
    c_out: float

    @property
    def C(self) -> float:
        return max(self.c_in, self.c_out)


def bound_constants(d: int, rho_a: float, rho_b: float, lambda_ab: float,
                    c_a: float = float("nan"), c_b: float = float("nan")) -> BoundConstants:
    """Evaluate ``c_out = c_bar max(rho_A, rho_B)**-d`` and
    ``c_in = 2**(d-1) c_bar min(lambda rho_A rho_B, rho_B**2 / 2)**-d``."""
    c_bar = MAX_PIECES[d]
    c_out = c_bar * max(rho_a ** (-d), rho_b ** (-d))
    c_in = 2.0 ** (d - 1) * c_bar * min(lambda_ab * rho_a * rho_b, rho_b**2 / 2.0) ** (-d)
    return BoundConstants(d, ball_volume_constant(d), c_a, c_b, c_bar, rho_a, rho_b, lambda_ab, c_in, c_out)


def theorem_constants(A_h: Mesh, B_h: Mesh) -> BoundConstants:
    d = check_same_dim(A_h, B_h)
    qa, qb = quasi_uniformity_constants(A_h), quasi_uniformity_constants(B_h)
    return bound_constants(d, qa.rho, qb.rho, qa.volume_domain / qb.volume_domain,
                           domain_constant(qa), domain_constant(qb))


@dataclass(frozen=True)
class TheoremCheck:
    n: int
    n_a: int
    n_b: int
    C: float
    coinciding: bool
    max_pair_simplices: int

    @property
    def ratio(self) -> float:
        return self.n / (self.n_a + self.n_b)

    @property
    def upper_ok(self) -> bool:
        return self.n <= self.C * (self.n_a + self.n_b)

    @property
    def lower_ok(self) -> bool:
        return not self.coinciding or max(self.n_a, self.n_b) <= self.n

    @property
    def passed(self) -> bool:
        return self.upper_ok and self.lower_ok

    def as_dict(self) -> dict:
        return {
            "n": self.n, "n_a": self.n_a, "n_b": self.n_b, "ratio": self.ratio, "C": self.C,
            "coinciding": self.coinciding, "max_pair_simplices": self.max_pair_simplices,
            "status": "PASS" if self.passed else "FAIL",
        }


def check_theorem(S, A_h: Mesh, B_h: Mesh, constants: BoundConstants | None = None) -> TheoremCheck:
    """Compare the supermesh size with ``C (n_A + n_B)`` and, when the domains
    coincide, with ``max(n_A, n_B)``."""
    constants = constants or theorem_constants(A_h, B_h)
    va, vb = cell_measures(A_h).sum(), cell_measures(B_h).sum()
    vs = cell_measures(S.mesh)[S.overlap_mask()].sum()
    coinciding = bool(abs(va - vb) <= 1e-10 * va and abs(vs - va) <= 1e-8 * va)
    counts = S.pair_counts if S.pair_counts is not None and len(S.pair_counts) else np.zeros(1, dtype=int)
    return TheoremCheck(S.n_cells, A_h.n_cells, B_h.n_cells, constants.C, coinciding, int(counts.max()))
