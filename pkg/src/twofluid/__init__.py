"""2D finite-element solver for a barotropic compressible two-fluid model."""
from .eos import ClosureFailure, ClosureResult, EosDomainError, EosParams, closure_solve, mixture_c_squared
from .mesh import FESpace, TriMesh, build_uniform_mesh
from .linalg import NumericBreakdown, SolverConfig, SolverFailure, solve
from .scheme import (
    DragModel,
    PhysParams,
    ProjectionScheme,
    SchemeConfig,
    StepFailure,
    TwoFluidState,
    state_from_alpha,
)
from .scenarios import ScenarioConfig, init_scenario, scenario_config, stokes_solve
from .diagnostics import CSV_HEADER, EnergyReport, energy_report, conservation_report
from .io import write_vtk
from .study import ConvergenceStudy, RunSummary, convergence_study, run

__version__ = "0.1.0"
