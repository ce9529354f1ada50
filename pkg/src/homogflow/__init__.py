"""Finite-element homogenization of Darcy flow in periodic fissured media
with imperfect interfacial contact, and numerical verification of the
homogenized limit through an eps-sweep of resolved micro solves."""

from .cell import (
    CellSolution,
    HomogenizedData,
    alpha_functionals,
    compute_cell_data,
    homogenized_tensor,
    solve_alpha,
    solve_corrector,
)
from .coefficients import CoefficientField
from .config import RunConfig, config_from_dict, parse_config
from .convergence import (
    ConvergenceReport,
    cell_average,
    corrector_error,
    run_study,
    weak_metric,
)
from .errors import (
    ConfigError,
    ConstraintError,
    ConvergenceError,
    CoefficientError,
    DependencyError,
    GeometryError,
    HomogflowError,
    MeshError,
    PairingError,
    SolverError,
    TopologyError,
)
from .expressions import compile_expression
from .fem import (
    FieldSolution,
    SparseSystem,
    apply_constraints,
    assemble_interface_mass,
    assemble_interface_robin,
    assemble_load,
    assemble_stiffness,
    integrate,
    solve_spd,
)
from .geometry import (
    BLOCK_TAG,
    MATRIX_TAG,
    CellGeometry,
    Disk,
    Mesh,
    PeriodicMap,
    SquareBlock,
    build_epsilon_mesh,
    build_periodic_map,
    build_unit_cell_mesh,
    extract_interface_pairing,
)
from .interpolation import interpolate_p1
from .macro import (
    MacroProblem,
    build_macro_mesh,
    compose_limit_pressure,
    solve_macro,
)
from .micro import (
    EnergyReport,
    MicroProblem,
    MicroSolution,
    assemble_micro,
    collapse_to_nodes,
    combined_pressure,
    energy_report,
    solve_micro,
)
from .vtkio import write_vtk

__version__ = "0.1.0"
