import numpy as np
import pytest

from supermesh import HierarchySpec, generate_hierarchy, generate_mesh
from supermesh.geometry import cell_measures, signed_measures


@pytest.mark.parametrize("d, res, cells_per_box", [(2, 5, 2), (3, 3, 6)])
def test_counts_and_volume(d, res, cells_per_box):
    mesh = generate_mesh(d, res, 0.3, seed=1)
    assert mesh.n_cells == cells_per_box * res**d
    assert mesh.n_vertices == (res + 1) ** d
    assert cell_measures(mesh).sum() == pytest.approx(1.0, rel=1e-13)
    assert np.all(signed_measures(mesh.cell_coords) > 0)
    assert mesh.vertices.min() == -0.5 and mesh.vertices.max() == 0.5


@pytest.mark.parametrize("d", [2, 3])
def test_deterministic_and_seed_dependent(d):
    a = generate_mesh(d, 4, 0.2, seed=9, offset=2)
    assert a == generate_mesh(d, 4, 0.2, seed=9, offset=2)
    assert a != generate_mesh(d, 4, 0.2, seed=10, offset=2)
    assert a != generate_mesh(d, 4, 0.2, seed=9, offset=3)


def test_boundary_nodes_stay_on_faces():
    mesh = generate_mesh(3, 4, 0.4, seed=2)
    v = mesh.vertices
    on_face = np.isclose(np.abs(v), 0.5, rtol=0, atol=0)
    # every lattice boundary node keeps an exact +-0.5 coordinate
    assert on_face.any(axis=1).sum() == 5**3 - 3**3


def test_zero_jitter_is_regular():
    mesh = generate_mesh(2, 4, 0.0)
    np.testing.assert_allclose(cell_measures(mesh), 1 / 32, rtol=1e-14)


def test_hierarchy_matches_single_levels():
    spec = HierarchySpec(2, 3, base_resolution=2, jitter=0.1, seed=4)
    meshes = generate_hierarchy(spec)
    assert [m.n_cells for m in meshes] == [8, 32, 128]
    assert meshes[2] == generate_mesh(2, spec.resolution(3), 0.1, 4, offset=3)


@pytest.mark.parametrize("kwargs", [dict(dim=4, levels=2), dict(dim=2, levels=0),
                                    dict(dim=2, levels=2, jitter=0.5), dict(dim=2, levels=2, base_resolution=0)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        HierarchySpec(**kwargs)


def test_generate_validation():
    with pytest.raises(ValueError):
        generate_mesh(2, 0)
    with pytest.raises(ValueError):
        generate_mesh(2, 3, jitter=-0.1)
