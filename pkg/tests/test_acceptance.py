"""Acceptance criteria 1-9.

Each test logs one ``CRITERION k: PASS|FAIL`` line; the lines are collected and
printed in order at the end of the pytest run (see ``conftest.py``). Run
directly with ``python3 tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from oracles import mc_overlap, qhull_overlap, random_simplex, shapely_overlap, shoelace
from supermesh import (
    Ball,
    Mesh,
    brute_force_pairs,
    build_supermesh,
    candidate_pairs,
    cell_count_bounds,
    check_theorem,
    clip_simplices,
    fattening_measure,
    generate_mesh,
    intersection_count,
    intersection_count_bound,
    jung_constant,
    project_p0,
    quasi_uniformity_constants,
    run_hierarchy_experiment,
    theorem_constants,
    validate_supermesh,
)
from supermesh.geometry import cell_measures, inscribed_balls, min_enclosing_balls, simplex_diameters
from supermesh.intersect import clip_pairs
from supermesh.supermesh import overlap_volume

SEED = 7
LEVELS = {2: 8, 3: 4}
BASE = {2: 4, 3: 2}


@pytest.fixture(scope="module")
def hierarchy_rows():
    rows, seconds = {}, {}
    for d in (2, 3):
        t0 = time.perf_counter()
        rows[d] = run_hierarchy_experiment(d, LEVELS[d], BASE[d], 0.2, SEED)
        seconds[d] = time.perf_counter() - t0
    return rows, seconds


def _warm_up():
    m = generate_mesh(2, 4, 0.2, seed=1)
    build_supermesh(m, m)
    build_supermesh(m, generate_mesh(2, 3, 0.2, seed=1))


def test_criterion_1_identity(acceptance):
    _warm_up()
    mesh = generate_mesh(2, 71, 0.2, seed=SEED)
    t0 = time.perf_counter()
    S = build_supermesh(mesh, mesh)
    elapsed = time.perf_counter() - t0
    ok = S.n_cells == mesh.n_cells and S.ratio == 0.5 and elapsed < 1.0 and mesh.n_cells >= 10**4
    acceptance(1, ok, f"n_A={mesh.n_cells} n={S.n_cells} ratio={S.ratio!r} time={elapsed:.3f}s (< 1 s)")
    assert ok


def test_criterion_2_theorem_bound(acceptance, hierarchy_rows):
    rows, seconds = hierarchy_rows
    details, ok = [], True
    for d, budget in ((2, 300), (3, 900)):
        pairs = [r for r in rows[d] if r.R is not None]
        passed = all(r.theorem_ok for r in pairs)
        lower = all(r.n_super >= max(r.n_cells, prev.n_cells) for prev, r in zip(rows[d], rows[d][1:]))
        worst = max(r.R / r.C for r in pairs)
        ok &= passed and lower and seconds[d] < budget
        details.append(f"{d}D l<={LEVELS[d]}: {len(pairs)} pairs, max R/C={worst:.2e}, "
                       f"max(n_A,n_B)<=n {lower}, {seconds[d]:.0f}s (< {budget}s)")
    acceptance(2, ok, "; ".join(details))
    assert ok


def test_criterion_3_plateau(acceptance, hierarchy_rows):
    rows, _ = hierarchy_rows
    r2 = [r.R for r in rows[2] if r.R is not None]
    r3 = [r.R for r in rows[3] if r.R is not None]
    change = abs(r2[-1] - r2[-2]) / r2[-2]
    ok2 = change < 0.10 and all(2 <= r <= 8 for r in r2[-2:])
    ok3 = 15 <= r3[-1] <= 60
    acceptance(3, ok2 and ok3, f"2D R={[round(r, 3) for r in r2]} last-two change={change:.1%}; "
                               f"3D R={[round(r, 2) for r in r3]} final in [15, 60]")
    assert ok2 and ok3


def test_criterion_4_cell_count_bounds(acceptance):
    t0 = time.perf_counter()
    cases = [(2, r, j) for r in (2, 4, 8, 16, 32, 64) for j in (0.0, 0.2, 0.4)]
    cases += [(3, r, j) for r in (1, 2, 4, 8) for j in (0.0, 0.2, 0.4)]
    failures = []
    for i, (d, res, jitter) in enumerate(cases):
        q = quasi_uniformity_constants(generate_mesh(d, res, jitter, seed=SEED, offset=i))
        lower, upper = cell_count_bounds(q)
        if not lower <= q.n_cells <= upper:
            failures.append((d, res, jitter, lower, q.n_cells, upper))
    elapsed = time.perf_counter() - t0
    ok = not failures and len(cases) >= 20 and elapsed < 60
    acceptance(4, ok, f"{len(cases)} meshes, {len(failures)} violations, {elapsed:.1f}s (< 60s)")
    assert ok, failures


def _probe_meshes(d):
    return [generate_mesh(d, BASE[d] * 2**k, 0.2, seed=SEED, offset=k + 1) for k in range(4 if d == 2 else 3)]


def test_criterion_5_intersection_bound(acceptance):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    details, violations = [], 0
    for d in (2, 3):
        meshes = _probe_meshes(d)
        tight = 0.0
        for probe in range(200):
            i, j = rng.choice(len(meshes), size=2, replace=True)
            src, target = meshes[i], meshes[j]
            cell = int(rng.integers(src.n_cells))
            G = src.cell_coords[cell]
            measured = intersection_count(G, target)
            bound = intersection_count_bound(G, target, n_samples=20_000, seed=probe)
            violations += measured > bound
            tight = max(tight, measured / bound)
        details.append(f"{d}D 200 probes, max measured/bound={tight:.3f}")
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 300
    acceptance(5, ok, f"{violations} violations; " + "; ".join(details) + f"; {elapsed:.0f}s (< 300s)")
    assert ok


def test_criterion_6_conservation(acceptance):
    rng = np.random.default_rng(SEED)
    worst = {2: 0.0, 3: 0.0}
    proj_defect = 0.0
    n_fields = 0
    for d in (2, 3):
        levels = range(2, 7) if d == 2 else range(2, LEVELS[3] + 1)
        per_pair = -(-50 // len(levels))
        for level in levels:
            A = generate_mesh(d, BASE[d] * 2 ** (level - 1), 0.2, SEED, offset=level)
            B = generate_mesh(d, BASE[d] * 2 ** (level - 2), 0.2, SEED, offset=level - 1)
            S = build_supermesh(A, B)
            vol = cell_measures(S.mesh)[S.overlap_mask()].sum()
            # both meshes tile the unit box, so |A ∩ B| = 1; also check the pairwise clip sum
            worst[d] = max(worst[d], abs(vol - 1.0), abs(vol - overlap_volume(A, B)))
            fields = rng.normal(size=(per_pair, A.n_cells))
            n_fields += per_pair
            values, covered = project_p0(fields, S)
            assert covered.all()
            src = fields @ cell_measures(A)
            dst = values @ cell_measures(B)
            scale = np.abs(fields) @ cell_measures(A)
            proj_defect = max(proj_defect, float(np.max(np.abs(dst - src) / scale)))
    ok = worst[2] <= 1e-10 and worst[3] <= 1e-8 and proj_defect <= 1e-12
    acceptance(6, ok, f"volume defect 2D={worst[2]:.1e} (<=1e-10) 3D={worst[3]:.1e} (<=1e-8); "
                      f"P0 integral defect={proj_defect:.1e} (<=1e-12, relative to the integral of |f|) "
                      f"over {n_fields} fields")
    assert ok


def test_criterion_7_oracle_equivalence(acceptance):
    rng = np.random.default_rng(SEED)
    mismatched, area_err, raw_err, n_checked = 0, 0.0, 0.0, 0
    sizes = []
    for k in range(10):
        d = 2 if k < 6 else 3
        hi = 31 if d == 2 else 6
        ra, rb = rng.integers(2, hi + 1, size=2)
        A = generate_mesh(d, int(ra), float(rng.uniform(0, 0.4)), seed=k, offset=1)
        B = generate_mesh(d, int(rb), float(rng.uniform(0, 0.4)), seed=k, offset=2)
        assert A.n_cells <= 2000 and B.n_cells <= 2000
        sizes.append((A.n_cells, B.n_cells))
        fast = candidate_pairs(A, B)
        slow = brute_force_pairs(A, B)
        mismatched += set(map(tuple, fast)) != set(map(tuple, slow))
        pick = fast[rng.choice(len(fast), size=min(20, len(fast)), replace=False)]
        _, measures = clip_pairs(A, B, pick)
        oracle = shapely_overlap if d == 2 else qhull_overlap
        for (a, b), m in zip(pick, measures):
            ref = oracle(A.cell_coords[a], B.cell_coords[b])
            scale = min(cell_measures(A)[a], cell_measures(B)[b])
            area_err = max(area_err, abs(m - ref) / scale)
            raw_err = max(raw_err, abs(m - ref) / ref)
            n_checked += 1
    # shoelace on the analytic cases
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    hand = abs(shoelace(clip_simplices(tri, tri + [0.5, 0.0]).vertices) - 0.125)
    c = np.array([[0.0, 1.0], [-math.sqrt(3) / 2, -0.5], [math.sqrt(3) / 2, -0.5]])
    hand = max(hand, abs(shoelace(clip_simplices(c, -c).vertices) / (3 * math.sqrt(3) / 4) - 2 / 3))
    # Monte Carlo: 100 random simplex pairs, 10^6 samples each
    zs, flagged_err = [], 0.0
    for i in range(100):
        d = 2 if i < 50 else 3
        a = random_simplex(rng, d)
        b = a + rng.normal(scale=0.25, size=d)
        poly = clip_simplices(a, b)
        m = 0.0 if poly is None else poly.measure
        est, se = mc_overlap(a, b, 10**6, rng, expected=m)
        z = (est - m) / se if se > 0 else (0.0 if m == est else math.inf)
        zs.append(z)
        if abs(z) > 3:
            # diagnostic only: does the exact oracle agree on the flagged pair?
            ref = shapely_overlap(a, b) if d == 2 else qhull_overlap(a, b)
            flagged_err = max(flagged_err, abs(m - ref) / max(ref, 1e-300))
    zs = np.array(zs)
    mc_fail, max_z = int(np.sum(np.abs(zs) > 3)), float(np.max(np.abs(zs)))
    ok = mismatched == 0 and area_err <= 1e-12 and hand <= 1e-14 and mc_fail == 0
    acceptance(7, ok, f"pair sets equal on {10 - mismatched}/10 mesh pairs (sizes {sizes}); "
                      f"clip vs shapely/qhull over {n_checked} pairs: max err={area_err:.1e} of min(|a|,|b|) (<=1e-12), "
                      f"{raw_err:.1e} of the overlap; "
                      f"shoelace err={hand:.1e}; MC: {100 - mc_fail}/100 within 3 SE (max |z|={max_z:.2f}, "
                      f"z mean={zs.mean():.2f} sd={zs.std():.2f}; exact-oracle rel err on flagged pairs "
                      f"{flagged_err:.1e})")
    assert ok


def test_criterion_8_geometry_kernels(acceptance):
    rng = np.random.default_rng(SEED)
    jung_bad = ball_bad = n_simplices = 0
    for d in (2, 3):
        coords = [generate_mesh(d, 6, j, seed=s).cell_coords for j in (0.0, 0.4) for s in range(3)]
        coords.append(np.stack([random_simplex(rng, d) for _ in range(2000)]))
        coords = np.concatenate(coords)
        n_simplices += len(coords)
        _, d_out = min_enclosing_balls(coords)
        _, d_in = inscribed_balls(coords)
        jung_bad += int(np.sum(d_out > jung_constant(d) * simplex_diameters(coords) * (1 + 1e-12)))
        ball_bad += int(np.sum(d_in > d_out))
    fat_fail, max_z, trials = 0, 0.0, 0
    for d in (2, 3):
        D = generate_mesh(d, 2, 0.0)
        for _ in range(10):
            a = float(rng.uniform(0.05, 0.3))
            delta = float(rng.uniform(0.0, 0.1))
            center = rng.uniform(-0.05, 0.05, size=d)
            est = fattening_measure(Ball(center, a), D, delta, n_samples=10**6, seed=int(rng.integers(2**31)))
            z = abs(est.measure - Ball(center, a + 2 * delta).measure) / est.std_error
            max_z = max(max_z, z)
            fat_fail += z > 3
            trials += 1
    ok = jung_bad == 0 and ball_bad == 0 and fat_fail == 0
    acceptance(8, ok, f"Jung violations {jung_bad}/{n_simplices}, insphere>circumball {ball_bad}/{n_simplices}; "
                      f"ball fattening {trials - fat_fail}/{trials} within 3 SE (max |z|={max_z:.2f})")
    assert ok


def test_criterion_9_scaling(acceptance):
    _warm_up()
    sizes, times = [], []
    for level in range(4, LEVELS[2] + 1):
        A = generate_mesh(2, BASE[2] * 2 ** (level - 1), 0.2, SEED, offset=level)
        B = generate_mesh(2, BASE[2] * 2 ** (level - 2), 0.2, SEED, offset=level - 1)
        best = math.inf
        for _ in range(3):
            # fresh meshes so cached indices and measures are rebuilt every time
            A2, B2 = Mesh(A.vertices, A.cells), Mesh(B.vertices, B.cells)
            t0 = time.perf_counter()
            build_supermesh(A2, B2)
            best = min(best, time.perf_counter() - t0)
        sizes.append(A.n_cells + B.n_cells)
        times.append(best)
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    ok = 0.8 <= slope <= 1.3
    acceptance(9, ok, f"log-log slope={slope:.3f} in [0.8, 1.3]; n_A+n_B={sizes}; "
                      f"best-of-3 seconds={[round(t, 3) for t in times]}")
    assert ok


def test_validation_of_hierarchy_supermeshes():
    """Supporting check: every supermesh used above is a valid common refinement."""
    for d in (2, 3):
        A = generate_mesh(d, BASE[d] * 4, 0.2, SEED, offset=3)
        B = generate_mesh(d, BASE[d] * 2, 0.2, SEED, offset=2)
        S = build_supermesh(A, B)
        assert validate_supermesh(S, A, B).passed
        assert check_theorem(S, A, B, theorem_constants(A, B)).passed


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
