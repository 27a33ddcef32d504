"""Supermesh size across a mesh hierarchy: the ratio R_l = n_S / (n_l + n_{l-1})."""
from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass
from pathlib import Path

from .bounds import check_theorem, theorem_constants
from .generate import HierarchySpec, generate_mesh
from .geometry import quasi_uniformity_constants
from .intersect import CENTROID, RTOL
from .supermesh import build_supermesh

logger = logging.getLogger(__name__)

COLUMNS = ["level", "h", "rho", "n_cells", "n_super", "R", "C", "theorem"]


@dataclass
class ExperimentRow:
    level: int
    h: float
    rho: float
    n_cells: int
    n_super: int | None = None
    R: float | None = None
    C: float | None = None
    theorem_ok: bool | None = None
    seconds: float | None = None  # supermesh construction wall time, not written to CSV

    def as_csv(self) -> list[str]:
        def fmt(v):
            if v is None:
                return "n/a"
            if isinstance(v, bool):
                return "PASS" if v else "FAIL"
            if isinstance(v, float):
                return f"{v:.10g}"
            return str(v)

        return [fmt(v) for v in (self.level, self.h, self.rho, self.n_cells, self.n_super, self.R, self.C,
                                 self.theorem_ok)]


def run_hierarchy_experiment(dim: int, levels: int, base_resolution: int = 4, jitter: float = 0.2,
                             seed: int = 0, out_path=None, rtol: float = RTOL, scheme: str = CENTROID,
                             self_pair: bool = False) -> list[ExperimentRow]:
    """Build the hierarchy and a supermesh between every pair of consecutive levels.

    With ``self_pair`` each level is paired with itself instead, which must give
    ``R = 1/2``. Only two levels are held in memory at a time.
    """
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    spec = HierarchySpec(dim, levels, base_resolution, jitter, seed)
    rows = []
    prev = None
    for level in range(1, levels + 1):
        mesh = generate_mesh(dim, spec.resolution(level), jitter, seed, offset=level)
        q = quasi_uniformity_constants(mesh)
        row = ExperimentRow(level, q.h, q.rho, mesh.n_cells)
        partner = mesh if self_pair else prev
        if partner is not None:
            t0 = time.perf_counter()
            S = build_supermesh(mesh, partner, rtol=rtol, scheme=scheme)
            row.seconds = time.perf_counter() - t0
            check = check_theorem(S, mesh, partner, theorem_constants(mesh, partner))
            row.n_super, row.R, row.C, row.theorem_ok = S.n_cells, S.ratio, check.C, check.passed
            logger.info("level %d: n=%d n_S=%d R=%.4f C=%.4g %s (%.2fs)", level, mesh.n_cells, S.n_cells,
                        S.ratio, check.C, "PASS" if check.passed else "FAIL", row.seconds)
            del S
        else:
            logger.info("level %d: n=%d h=%.4f rho=%.3f", level, mesh.n_cells, q.h, q.rho)
        rows.append(row)
        prev = mesh
    if out_path is not None:
        Path(out_path).write_text(rows_to_csv(rows), encoding="utf-8")
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow(row.as_csv())
    return buf.getvalue()
