"""Supermeshes of simplicial meshes, conservative P0 transfer and size bounds."""
from .bounds import (
    BoundConstants,
    FatteningEstimate,
    bound_constants,
    cell_count_bounds,
    check_theorem,
    fattening_measure,
    intersection_count,
    intersection_count_bound,
    theorem_constants,
)
from .experiment import ExperimentRow, run_hierarchy_experiment
from .generate import HierarchySpec, generate_hierarchy, generate_mesh
from .geometry import (
    Ball,
    QuasiUniformityReport,
    inscribed_ball,
    jung_constant,
    min_enclosing_ball,
    quasi_uniformity_constants,
    simplex_diameter,
    simplex_measure,
)
from .intersect import (
    ConvexPolytope,
    GridIndex,
    brute_force_pairs,
    build_index,
    candidate_pairs,
    clip_simplices,
    triangulate_polytope,
)
from .mesh import Mesh, MeshFormatError, read_mesh, write_mesh, write_vtk
from .supermesh import (
    Supermesh,
    SupermeshProjector,
    UnsupportedOverlapError,
    ValidationReport,
    build_supermesh,
    project_p0,
    validate_supermesh,
)

__version__ = "0.1.0"
