"""Adaptive interior-penalty DG solver for the generalized Burgers-Huxley
equation, stationary and time-dependent with weakly singular memory kernels,
with residual a posteriori error estimators and adaptive refinement."""

from .adapt import AdaptConfig, adaptive_stationary, adaptive_transient, mark_max
from .dgspace import DgField, DofMap, cell_quadrature, edge_quadrature, l2_project
from .estimate import (dg_error, efficiency, error_norms, estimate_be_step,
                       estimate_cn_step, estimate_stationary, l2_error)
from .forms import (ModelParams, NonConvergenceError, assemble_adg,
                    assemble_bdg, assemble_mass, assemble_reaction,
                    newton_solve, solve_stationary)
from .harness import ExperimentConfig, compute_rates, run_experiment
from .memory import (History, KernelSpec, MemoryWeights,
                     discrete_positivity_check, weights_be, weights_cn)
from .mesh import Mesh, build_structured, geometry, min_angle, refine
from .timestep import (TimeGrid, TransientOptions, be_step, cn_step,
                       project_onto, reconstruct, run_transient, transfer)

__version__ = "0.1.0"
