"""Prescribed combinatorial alpha-curvature on closed triangulated surfaces.

Discrete metrics are edge-length arrays on a :class:`TriangulatedSurface`;
conformal factors are per-vertex arrays.  The energy whose gradient is the
discrete Gaussian curvature is evaluated on intrinsic Delaunay
triangulations maintained by edge flips, and Newton's method on it solves
the prescribed curvature problem.
"""

from .delaunay import (
    FlipCapExceeded,
    FlipError,
    delaunay_certificate,
    flip_edge,
    is_delaunay_edge,
    make_delaunay,
)
from .energy import (
    EnergyState,
    energy_gradient,
    energy_hessian,
    lobachevsky,
    replay_metric,
    surface_energy,
)
from .metric import (
    DegenerateTriangleError,
    alpha_curvature,
    corner_angles,
    curvature,
    face_angles,
    gauss_bonnet_residual,
    total_area,
    vertex_scale,
)
from .solver import (
    CurvatureTarget,
    SolveConfig,
    SolveError,
    SolveReport,
    TargetRejected,
    classify_target,
    constraint_value,
    membership,
    project_to_constraint,
    solve_prescribed,
    verify_solution,
)
from .surface import (
    MeshError,
    TriangleInequalityError,
    TriangulatedSurface,
    edge_lengths_from_positions,
    load_intrinsic,
    load_mesh,
    load_obj,
    save_intrinsic,
)

__version__ = "0.1.0"
