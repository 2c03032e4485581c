"""Maximum-strategy marking and the Solve -> Estimate -> Mark -> Refine
loops: the stationary adaptive driver and the per-time-step adaptive driver
for moving singularities (fresh start mesh each step by default)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dgspace import DgField, DofMap, l2_project
from .estimate import error_norms, estimate_stationary
from .forms import NonConvergenceError, solve_stationary
from .memory import History, weights_be
from .mesh import build_structured, refine
from .timestep import (TimeGrid, TransientOptions, TransientState, be_step,
                       project_onto)

__all__ = [
    "AdaptConfig",
    "AdaptLevel",
    "TransientAdaptStep",
    "mark_max",
    "adaptive_stationary",
    "adaptive_transient",
]


@dataclass(frozen=True)
class AdaptConfig:
    mu: float = 0.5
    tol: float = 0.0
    max_refinements: int = 30
    max_dofs: int = 200_000

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError("marking fraction mu must lie in (0, 1)")
        if self.max_refinements < 0 or self.max_dofs <= 0:
            raise ValueError("caps must be positive")


def mark_max(indicators, mu):
    """Cells with indicator >= mu * max; empty only when all indicators
    vanish (signalling convergence), otherwise the argmax is always marked."""
    ind = np.asarray(indicators, dtype=float)
    if ind.size == 0:
        raise ValueError("empty indicator array")
    if np.any(ind < 0):
        raise ValueError("indicators must be non-negative")
    top = ind.max()
    if top <= 0.0:
        return np.empty(0, dtype=np.int64)
    return np.nonzero(ind >= mu * top)[0].astype(np.int64)


@dataclass
class AdaptLevel:
    level: int
    mesh: object
    dofmap: object
    u: DgField
    estimate: object
    marked: np.ndarray
    dg_error: float = None
    l2_error: float = None

    @property
    def dofs(self):
        return self.dofmap.n_dofs


def adaptive_stationary(problem, degree, config, initial_mesh=None, n0=4,
                        newton_tol=1e-10):
    """Adaptive loop for the stationary problem; returns one AdaptLevel per
    pass, stopping on the tolerance, the refinement cap, or the dof cap."""
    mesh = initial_mesh if initial_mesh is not None else \
        build_structured(problem.domain, n0)
    levels = []
    for lev in range(config.max_refinements + 1):
        dm = DofMap(mesh, degree)
        try:
            u, _, f_h = solve_stationary(dm, problem.params, f=problem.f,
                                         g=problem.g, tol=newton_tol)
        except NonConvergenceError as exc:
            raise NonConvergenceError(
                f"Newton failed at adaptive level {lev} "
                f"({dm.n_dofs} dofs): {exc}", iterate=exc.iterate,
                report=exc.report) from exc
        est = estimate_stationary(u, problem.f, f_h, problem.params,
                                  g=problem.g)
        marked = mark_max(est.per_cell, config.mu)
        rec = AdaptLevel(level=lev, mesh=mesh, dofmap=dm, u=u, estimate=est,
                         marked=marked)
        if problem.exact is not None:
            errs = error_norms(problem.exact, problem.exact_grad, u,
                               problem.params)
            rec.dg_error, rec.l2_error = errs["dg"], errs["l2"]
        levels.append(rec)
        if config.tol and est.total <= config.tol:
            break
        if marked.size == 0 or lev == config.max_refinements:
            break
        if dm.n_dofs >= config.max_dofs:
            break
        mesh, _ = refine(mesh, marked)
    return levels


@dataclass
class TransientAdaptStep:
    k: int
    t0: float
    t1: float
    mesh: object
    dofmap: object
    u: DgField
    estimate: object
    marked_history: list = field(default_factory=list)
    # entries (iteration, cell ids, centroids, areas) on that iteration's mesh


def adaptive_transient(problem, grid, degree, config, initial_mesh=None,
                       n0=4, max_refinements_per_step=7, reset_each_step=True,
                       options=None):
    """Per-time-step adaptive backward Euler driver.

    With ``reset_each_step`` every step restarts from the initial mesh (the
    previous solution and any memory history are re-projected), then runs up
    to ``max_refinements_per_step`` solve/estimate/mark/refine passes.
    """
    options = options or TransientOptions()
    base_mesh = initial_mesh if initial_mesh is not None else \
        build_structured(problem.domain, n0)
    params = problem.params
    weights = None
    if params.eta > 0.0:
        if problem.kernel is None:
            raise ValueError("eta > 0 requires a kernel")
        weights = weights_be(grid.times, problem.kernel)

    u_prev = l2_project(problem.u0, DofMap(base_mesh, degree))
    hist_fields = []          # accepted history fields on their own meshes
    steps = []
    mesh = base_mesh
    for k in range(1, grid.n_steps + 1):
        if reset_each_step:
            mesh = base_mesh
        marked_history = []
        rec = None
        for it in range(max_refinements_per_step + 1):
            dm = DofMap(mesh, degree)
            u_here = project_onto(u_prev, dm)
            hist_here = History()
            actions = []
            if params.eta > 0.0:
                from .forms import assemble_adg
                a_csr = assemble_adg(dm, params).csr
                for fldj in hist_fields:
                    moved = project_onto(fldj, dm)
                    hist_here.add(moved)
                    actions.append(a_csr @ moved.coeffs)
            state = TransientState(grid=grid, dofmap=dm, u=u_here, k=k - 1,
                                   history=hist_here, actions=actions)
            step_opts = TransientOptions(
                newton_tol=options.newton_tol,
                newton_max_iter=options.newton_max_iter,
                estimate=True, store_trajectory=False,
                memory_jump_gradient=options.memory_jump_gradient,
                source_midpoint=options.source_midpoint)
            rec = be_step(state, params, weights, f=problem.f, g=problem.g,
                          kernel=problem.kernel, options=step_opts)
            per_cell = np.sqrt(rec.estimate.per_cell_space_sq)
            marked = mark_max(per_cell, config.mu)
            centroids = mesh.cell_centroids()[marked]
            marked_history.append((it, marked, centroids, mesh.areas[marked]))
            if (it == max_refinements_per_step or marked.size == 0
                    or dm.n_dofs >= config.max_dofs):
                u_prev = rec.u_curr
                if params.eta > 0.0:
                    hist_fields.append(state.history[k - 1])
                break
            mesh, _ = refine(mesh, marked)
        steps.append(TransientAdaptStep(
            k=k, t0=grid.times[k - 1], t1=grid.times[k], mesh=mesh,
            dofmap=u_prev.dofmap, u=u_prev, estimate=rec.estimate,
            marked_history=marked_history))
    return steps
