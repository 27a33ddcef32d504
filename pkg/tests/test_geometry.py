import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_diameter, chebyshev_ball, heron, meb_by_optimisation, random_simplex
from supermesh import (
    Mesh,
    generate_mesh,
    inscribed_ball,
    jung_constant,
    min_enclosing_ball,
    quasi_uniformity_constants,
    simplex_diameter,
    simplex_measure,
)
from supermesh.geometry import (
    barycentric_coordinates,
    inscribed_balls,
    min_enclosing_balls,
    simplex_diameters,
    simplex_measures,
)

EQUILATERAL = [[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]]


def single(coords):
    coords = np.asarray(coords, float)
    return Mesh(coords, [list(range(len(coords)))])


def test_measure_examples(unit_triangle, corner_tet):
    assert simplex_measure(unit_triangle, 0) == 0.5
    assert simplex_measure(corner_tet, 0) == pytest.approx(1 / 6, rel=1e-15)
    collinear = Mesh([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], [[0, 1, 2]])
    assert simplex_measure(collinear, 0) == 0.0


def test_measure_accepts_vertex_ids(corner_tet):
    assert simplex_measure(corner_tet, (0, 1, 2, 3)) == simplex_measure(corner_tet, 0)
    with pytest.raises(ValueError):
        simplex_measure(corner_tet, (0, 1, 2))


@pytest.mark.parametrize("coords, expected", [
    (EQUILATERAL, 1.0),
    ([[0, 0], [3, 0], [0, 4]], 5.0),
    ([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], math.sqrt(2)),
])
def test_diameter_examples(coords, expected):
    assert simplex_diameter(single(coords), 0) == pytest.approx(expected, rel=1e-15)


def test_enclosing_ball_equilateral():
    assert min_enclosing_ball(single(EQUILATERAL), 0).diameter == pytest.approx(2 / math.sqrt(3), rel=1e-14)


def test_enclosing_ball_obtuse_against_optimiser():
    tri = [[0.0, 0.0], [4.0, 0.0], [1.0, 0.5]]
    ball = min_enclosing_ball(single(tri), 0)
    center, diameter = meb_by_optimisation(tri)
    assert ball.diameter == 4.0
    np.testing.assert_allclose(ball.center, [2.0, 0.0])
    assert diameter == pytest.approx(4.0, rel=1e-6)
    np.testing.assert_allclose(center, [2.0, 0.0], atol=1e-6)


@pytest.mark.parametrize("d", [2, 3])
def test_enclosing_ball_matches_optimiser_on_random_simplices(d, rng):
    for _ in range(25):
        s = random_simplex(rng, d)
        c, diam = min_enclosing_balls(s)
        oc, odiam = meb_by_optimisation(s)
        assert diam == pytest.approx(odiam, rel=1e-5)
        np.testing.assert_allclose(c, oc, atol=1e-4 * diam)


def test_inscribed_ball_examples():
    right = inscribed_ball(single([[0, 0], [3, 0], [0, 4]]), 0)
    assert right.diameter == pytest.approx(2.0, rel=1e-15)
    np.testing.assert_allclose(right.center, [1.0, 1.0])
    eq = inscribed_ball(single(EQUILATERAL), 0)
    assert eq.diameter == pytest.approx(1 / math.sqrt(3), rel=1e-14)


def test_inscribed_ball_corner_tet_by_heron(corner_tet):
    v = corner_tet.vertices
    facets = sum(heron(*np.delete(v, i, axis=0)) for i in range(4))
    expected = 3 * (1 / 6) / facets
    assert expected == pytest.approx(0.2113248654, rel=1e-9)
    assert inscribed_ball(corner_tet, 0).radius == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("d", [2, 3])
def test_inscribed_ball_matches_linear_program(d, rng):
    for _ in range(25):
        s = random_simplex(rng, d)
        c, diam = inscribed_balls(s)
        oc, odiam = chebyshev_ball(s)
        assert diam == pytest.approx(odiam, rel=1e-7)
        np.testing.assert_allclose(c, oc, atol=1e-6 * diam)


def test_quasi_uniformity_single_right_triangle(unit_triangle):
    q = quasi_uniformity_constants(unit_triangle)
    assert q.diam_domain == pytest.approx(math.sqrt(2), rel=1e-15)
    assert q.h == pytest.approx(1.0, rel=1e-15)
    assert q.rho == pytest.approx((2 - math.sqrt(2)) / math.sqrt(2), rel=1e-14)
    assert q.volume_domain == 0.5
    assert q.n_cells == 1


@pytest.mark.parametrize("d, res", [(2, 5), (3, 3)])
def test_congruent_cells_share_reference_rho(d, res):
    mesh = generate_mesh(d, res, jitter=0.0)
    ref = mesh.cell_coords[0]
    ref_rho = inscribed_balls(ref)[1] / min_enclosing_balls(ref)[1]
    assert quasi_uniformity_constants(mesh).rho == pytest.approx(ref_rho, rel=1e-12)


def test_quasi_uniformity_rejects_empty_mesh():
    with pytest.raises(ValueError):
        quasi_uniformity_constants(Mesh(np.zeros((0, 2)), np.zeros((0, 3), dtype=int)))


@pytest.mark.parametrize("d", [2, 3])
def test_report_invariants_on_generated_meshes(d):
    for seed in range(4):
        q = quasi_uniformity_constants(generate_mesh(d, 4, 0.3, seed=seed))
        assert 0 < q.rho <= 1
        assert 0 < q.h <= jung_constant(d) * (1 + 1e-12)


def test_diameter_matches_pairwise_scan(rng):
    for d in (2, 3):
        s = random_simplex(rng, d)
        assert simplex_diameters(s) == pytest.approx(brute_diameter(s), rel=1e-15)


def _simplex_strategy(d):
    return arrays(np.float64, (d + 1, d), elements=st.floats(-10, 10, allow_nan=False, width=64))


def _nondegenerate(s):
    d = s.shape[1]
    scale = simplex_diameters(s)
    return scale > 1e-3 and simplex_measures(s) > 1e-4 * scale**d


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([2, 3]).flatmap(_simplex_strategy))
def test_ball_properties(s):
    if not _nondegenerate(s):
        return
    d = s.shape[1]
    c_out, d_out = min_enclosing_balls(s)
    c_in, d_in = inscribed_balls(s)
    # Jung
    assert d_out <= jung_constant(d) * simplex_diameters(s) * (1 + 1e-12)
    assert d_in <= d_out
    # enclosing ball really encloses
    assert np.max(np.linalg.norm(s - c_out, axis=1)) <= d_out / 2 * (1 + 1e-9)
    # measure sandwiched between the two ball measures
    cpi = {2: math.pi, 3: 4 * math.pi / 3}[d]
    vol = simplex_measures(s)
    assert cpi * (d_in / 2) ** d <= vol * (1 + 1e-12)
    assert vol <= cpi * (d_out / 2) ** d * (1 + 1e-12)
    # incentre strictly inside
    assert barycentric_coordinates(s, c_in).min() > 0
