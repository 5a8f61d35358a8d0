"""p-version finite element workbench for the 2D Poisson problem on
parallelogram meshes, with Jacobi-weighted approximation machinery and a
residual a posteriori error estimator in weighted norms."""

from .benchmarks import Benchmark, get_benchmark
from .errors import (
    ConformityError,
    GeometryError,
    IntegrabilityError,
    JacobiFemError,
    OrientationError,
    ParameterError,
    SolverError,
)
from .estimator import (
    EstimatorParams,
    EstimatorReport,
    compute_indicators,
    dual_norm_lower_bound,
    effectivity,
    error_surrogate,
    oscillation_norm,
    project_load,
)
from .fem import (
    DiscreteSolution,
    DofMap,
    LinearSystem,
    assemble,
    energy_error,
    evaluate,
    solve,
)
from .interpolation import (
    JumpLift,
    PiecewisePoly,
    boundary_decay_poly,
    edge_lift,
    global_interpolant,
    jump_lift,
    local_interpolant,
    vertex_function,
)
from .jacobi import (
    JacobiParams,
    QuadRule,
    eval_jacobi,
    eval_jacobi_deriv,
    gamma_p,
    gamma_pk,
    gamma_ratio,
    gauss_jacobi_rule,
)
from .mesh import (
    AffineMap,
    ParallelogramMesh,
    geometry,
    l_shaped_mesh_dict,
    load_and_validate,
    patches_and_degrees,
    rect_mesh_dict,
    smooth_degrees,
    uniform_degrees,
)
from .spaces import (
    ScalarField,
    TensorCoeffs,
    WeightSpec,
    expand,
    project,
    trace_to_edge,
    weighted_norm,
)

__version__ = "0.1.0"
