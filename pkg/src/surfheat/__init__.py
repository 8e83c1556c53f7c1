"""surfheat: heat kernel smoothing and statistical analysis of scalar data on
triangulated 2-manifold surfaces.

Core pipeline: assemble FEM matrices on a triangle mesh, solve the generalized
eigenproblem for a Laplace-Beltrami basis, smooth fields by heat kernel
regression (or diffusion stepping, or iterated kernel passes), and run
random-field-theory corrected inference on group statistic maps. A companion
volume module performs binary-volume topology correction ahead of isosurface
extraction.
"""

from .mesh import (
    TriangleMesh,
    euler_characteristic,
    make_icosphere,
    make_t_junction,
    validate_field,
)
from .io import load_mesh, save_mesh, load_field, save_field
from .fem import assemble_mass, assemble_cotan, dump_coo
from .eigen import EigenBasis, solve_smallest, verify_basis
from .smooth import (
    CoefficientVector,
    diffusion_smooth,
    fit_coefficients,
    fit_coefficients_weighted,
    heat_kernel_eval,
    heat_kernel_smooth,
    iterated_kernel_smooth,
)
from .sphere import (
    GibbsReport,
    band_step_field,
    gibbs_experiment,
    harmonic_design_matrix,
    real_spherical_harmonic,
)
from .rft import (
    FieldGeometry,
    StatField,
    corrected_pvalue,
    ec_density_f,
    group_f_stat,
    inference_report,
    rft_threshold,
)
from .volume import (
    BinaryVolume,
    close_2d_sweep,
    close_3d,
    largest_component,
    load_volume,
    make_cavity_phantom,
    make_torus_phantom,
    marching_cubes,
    save_volume,
    topo_correct,
    validate_closed,
)
from .simulate import (
    DetectionReport,
    SimulationConfig,
    default_signal_regions,
    run_study,
    simulate_fields,
    study_config,
)
from .estimators import (
    DiffusionSmoother,
    HeatKernelSmoother,
    IteratedKernelSmoother,
)
from .errors import (
    ConvergenceError,
    MeshFormatError,
    NumericalError,
    StabilityError,
    TopologyError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "TriangleMesh",
    "euler_characteristic",
    "make_icosphere",
    "make_t_junction",
    "validate_field",
    "load_mesh",
    "save_mesh",
    "load_field",
    "save_field",
    "assemble_mass",
    "assemble_cotan",
    "dump_coo",
    "EigenBasis",
    "solve_smallest",
    "verify_basis",
    "CoefficientVector",
    "fit_coefficients",
    "fit_coefficients_weighted",
    "heat_kernel_smooth",
    "heat_kernel_eval",
    "iterated_kernel_smooth",
    "diffusion_smooth",
    "GibbsReport",
    "band_step_field",
    "gibbs_experiment",
    "harmonic_design_matrix",
    "real_spherical_harmonic",
    "FieldGeometry",
    "StatField",
    "corrected_pvalue",
    "ec_density_f",
    "group_f_stat",
    "inference_report",
    "rft_threshold",
    "BinaryVolume",
    "close_2d_sweep",
    "close_3d",
    "largest_component",
    "load_volume",
    "make_cavity_phantom",
    "make_torus_phantom",
    "marching_cubes",
    "save_volume",
    "topo_correct",
    "validate_closed",
    "DetectionReport",
    "SimulationConfig",
    "default_signal_regions",
    "run_study",
    "simulate_fields",
    "study_config",
    "DiffusionSmoother",
    "HeatKernelSmoother",
    "IteratedKernelSmoother",
    "ConvergenceError",
    "MeshFormatError",
    "NumericalError",
    "StabilityError",
    "TopologyError",
    "ValidationError",
    "__version__",
]
