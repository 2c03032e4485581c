"""Backward-Euler and Crank-Nicolson time loops with memory, transfer
operators across mesh changes, and linear-in-time reconstruction.

The memory sum of step k keeps the diagonal term implicit: the Newton system
absorbs eta * omega_kk tau_k * a(u^k, .) (halved for CN, which applies the
weights to half-step averages), while older entries enter as a fixed load.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .dgspace import DgField, cell_quadrature, eval_basis, l2_project, reference_nodes
from .estimate import (TransientEstimate, TransientStepContext, estimate_be_step,
                       estimate_cn_step, step_error_contribution, l2_error)
from .forms import (ModelParams, assemble_adg, assemble_mass, assemble_reaction,
                    bdg_jacobian, bdg_residual, dirichlet_load, newton_solve)
from .linalg import LuSolver
from .memory import History, history_action, weights_be, weights_cn

__all__ = [
    "TimeGrid",
    "TransientOptions",
    "TransientState",
    "StepRecord",
    "TransientResult",
    "transfer",
    "project_onto",
    "evaluate_on_foreign_mesh",
    "reconstruct",
    "source_average_be",
    "source_average_cn",
    "be_step",
    "cn_step",
    "run_transient",
]


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, T, n_steps, t0=0.0):
        if T <= t0:
            raise ValueError("final time must exceed the start")
        return cls(np.linspace(t0, T, n_steps + 1))

    @property
    def taus(self):
        return np.diff(self.times)

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def final(self):
        return float(self.times[-1])


# ---------------------------------------------------------------------------
# transfer operators
# ---------------------------------------------------------------------------

def transfer(field, new_dofmap, parent_children):
    """Exact re-expansion of a field on a nested refinement.

    ``parent_children`` is the map returned by ``mesh.refine``.  Children
    inherit the parent polynomial exactly (nodal re-interpolation is exact
    for nested cells), so the transfer is an L2 isometry.
    """
    old_dm = field.dofmap
    new_mesh = new_dofmap.mesh
    if new_dofmap.degree != old_dm.degree:
        raise ValueError("transfer requires matching polynomial degree")
    n_new = new_mesh.n_cells
    child_parent = np.full(n_new, -1, dtype=np.int64)
    for parent, children in enumerate(parent_children):
        for ch in children:
            child_parent[ch] = parent
    if np.any(child_parent < 0) or len(parent_children) != old_dm.mesh.n_cells:
        raise ValueError("parent map does not cover the new mesh (non-nested?)")
    nodes = new_dofmap.node_coords()                     # (nc_new, nl, 2)
    ref = old_dm.to_reference(child_parent[:, None], nodes)
    vals, _ = eval_basis(old_dm.degree, ref.reshape(-1, 2))
    vals = vals.reshape(-1, n_new, new_dofmap.n_loc)     # (nl_old, nc, nl_new)
    old_cc = field.cell_coeffs()[child_parent]           # (nc_new, nl_old)
    new_cc = np.einsum("cl,lcm->cm", old_cc, vals)
    return DgField(new_dofmap, new_cc.ravel())


def _trifinder(mesh):
    if not hasattr(mesh, "_trifinder"):
        from matplotlib.tri import Triangulation
        tri = Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1],
                            np.asarray(mesh.cells))
        mesh._trifinder = (tri, tri.get_trifinder())
    return mesh._trifinder


def evaluate_on_foreign_mesh(field, points):
    """Point evaluation of a field at arbitrary physical points (any shape
    ending in 2).  Points outside the source mesh snap to the nearest cell."""
    mesh = field.dofmap.mesh
    _, finder = _trifinder(mesh)
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 2)
    cells = np.asarray(finder(flat[:, 0], flat[:, 1]))
    missing = cells < 0
    if missing.any():
        centroids = mesh.cell_centroids()
        for i in np.nonzero(missing)[0]:
            cells[i] = np.argmin(((centroids - flat[i]) ** 2).sum(axis=1))
    dm = field.dofmap
    ref = dm.to_reference(cells, flat)
    vals, _ = eval_basis(dm.degree, ref)                 # (nl, npts)
    out = np.einsum("lp,pl->p", vals, field.cell_coeffs()[cells])
    return out.reshape(pts.shape[:-1])


def project_onto(field, target_dofmap, quad_degree=None):
    """Local L2 projection of a field onto another mesh of the same domain.

    Exact whenever the target mesh resolves the source cells (in particular
    for nested refinements); the general case integrates the point-evaluated
    source field with target quadrature.
    """
    if field.dofmap.mesh is target_dofmap.mesh:
        if field.dofmap.degree == target_dofmap.degree:
            return DgField(target_dofmap, field.coeffs.copy())
    return l2_project(
        lambda x, y: evaluate_on_foreign_mesh(field, np.stack([x, y], axis=-1)),
        target_dofmap, quad_degree=quad_degree)


def reconstruct(u_prev, u_curr, t, t0, t1):
    """Linear-in-time reconstruction between the (transferred) previous and
    the current solution; both must live on the same dofmap."""
    if u_prev.dofmap is not u_curr.dofmap:
        raise ValueError("reconstruction needs both fields on one dofmap")
    tau = t1 - t0
    if not (t0 - 1e-12 * max(1.0, abs(t0)) <= t <= t1 + 1e-12 * max(1.0, abs(t1))):
        raise ValueError("evaluation time outside the step")
    lam = (t - t0) / tau
    return DgField(u_curr.dofmap, (1.0 - lam) * u_prev.coeffs + lam * u_curr.coeffs)


# ---------------------------------------------------------------------------
# step sources
# ---------------------------------------------------------------------------

_G4 = leggauss(4)


def source_average_be(f, dofmap, t0, t1, quad_degree=None):
    """Projection of the time-averaged source over (t0, t1] (4-point Gauss)."""
    xg, wg = _G4
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
    nodes = mid + half * xg
    weights = wg / 2.0          # averaging weights, sum to 1

    def favg(x, y):
        acc = np.zeros(np.broadcast(x, y).shape)
        for t, w in zip(nodes, weights):
            acc = acc + w * np.asarray(f(x, y, t), dtype=float)
        return acc

    return l2_project(favg, dofmap, quad_degree=quad_degree)


def source_average_cn(f, dofmap, t0, t1, midpoint=True, quad_degree=None):
    """Half-step source representative: midpoint value (default) or the
    average of the endpoint values."""
    if midpoint:
        tm = 0.5 * (t0 + t1)
        return l2_project(lambda x, y: f(x, y, tm), dofmap,
                          quad_degree=quad_degree)
    return l2_project(
        lambda x, y: 0.5 * (np.asarray(f(x, y, t0), dtype=float) +
                            np.asarray(f(x, y, t1), dtype=float)),
        dofmap, quad_degree=quad_degree)


# ---------------------------------------------------------------------------
# driver containers
# ---------------------------------------------------------------------------

@dataclass
class TransientOptions:
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    estimate: bool = True
    store_trajectory: bool = True
    store_history_fields: bool = True   # False: keep stiffness actions only
    source_midpoint: bool = True        # CN half-step source choice
    memory_jump_gradient: bool = False
    snapshot_every: int = 0
    snapshot_dir: str = "."
    exact: object = None                # u(x, y, t) for online error tracking
    exact_grad: object = None           # (ux, uy)(x, y, t)


@dataclass
class StepRecord:
    k: int
    t0: float
    t1: float
    u_prev: DgField
    u_curr: DgField
    estimate: object = None


@dataclass
class TransientState:
    """Mutable state advanced by be_step / cn_step on a fixed dofmap."""
    grid: TimeGrid
    dofmap: object
    u: DgField
    k: int = 0
    history: History = dc_field(default_factory=History)
    actions: list = dc_field(default_factory=list)
    lu_cache: dict = dc_field(default_factory=dict)


@dataclass
class TransientResult:
    grid: TimeGrid
    final: DgField
    records: list
    estimates: object = None
    error_final_l2: float = None
    error_time_dg_sq: float = None

    @property
    def total_error(self):
        """(||e(T)||^2 + int |||e|||^2 dt)^(1/2), when tracked online."""
        if self.error_final_l2 is None:
            return None
        return math.sqrt(self.error_final_l2 ** 2 + self.error_time_dg_sq)

    @property
    def indicator(self):
        return self.estimates.combined if self.estimates is not None else None


def _step_operators(dm, params):
    key = ("step_ops", params.penalty, params.delta)
    if key not in dm._cache:
        dm._cache[key] = {
            "adg": assemble_adg(dm, params).csr,
            "mass": assemble_mass(dm).csr,
        }
    return dm._cache[key]


def _advance(state, params, scheme, weights, kernel, f, g, options):
    """One fully discrete step; returns (record, new TransientState-in-place)."""
    dm = state.dofmap
    k = state.k + 1
    t0 = state.grid.times[k - 1]
    t1 = state.grid.times[k]
    tau = t1 - t0
    ops = _step_operators(dm, params)
    A, Mmat = ops["adg"], ops["mass"]
    v = state.u.coeffs
    eta_on = params.eta > 0.0 and weights is not None

    if scheme == "be":
        f_avg = source_average_be(f, dm, t0, t1)
        gl = params.nu * dirichlet_load(dm, params, g, t=t1)
        mem_vec, mem_coeff = (history_action(state.actions, weights, k, params.eta)
                              if eta_on else (0.0, 0.0))
        load = Mmat @ f_avg.coeffs + gl - (mem_vec if eta_on else 0.0)
        base = Mmat / tau + (params.nu + mem_coeff) * A
        shift = Mmat @ v / tau

        def res(x):
            r = base @ x - shift - load
            if params.alpha:
                r += params.alpha * bdg_residual(DgField(dm, x), params, g=g, t=t1)
            if params.beta:
                r -= params.beta * assemble_reaction(DgField(dm, x), params)[0]
            return r

        def jac(x):
            if params.is_linear:
                key = ("be", tau, mem_coeff)
                if key not in state.lu_cache:
                    state.lu_cache[key] = LuSolver(base)
                return state.lu_cache[key]
            j = base.copy()
            if params.alpha:
                j = j + params.alpha * bdg_jacobian(DgField(dm, x), params, g=g, t=t1)
            if params.beta:
                j = j - params.beta * assemble_reaction(DgField(dm, x), params)[1]
            return j
    else:
        f_avg = source_average_cn(f, dm, t0, t1, midpoint=options.source_midpoint)
        gl = 0.5 * params.nu * (dirichlet_load(dm, params, g, t=t1) +
                                dirichlet_load(dm, params, g, t=t0))
        mem_vec, mem_coeff = (history_action(state.actions, weights, k, params.eta,
                                             implicit_share=0.5)
                              if eta_on else (0.0, 0.0))
        # implicit share 0.5: the diagonal entry acts on (u^k + u^{k-1})/2
        explicit = Mmat @ v / tau - (0.5 * params.nu + mem_coeff) * (A @ v)
        load = Mmat @ f_avg.coeffs + gl - (mem_vec if eta_on else 0.0)
        base = Mmat / tau + (0.5 * params.nu + mem_coeff) * A
        if params.alpha:
            adv_prev = params.alpha * bdg_residual(DgField(dm, v), params, g=g, t=t0)
        if params.beta:
            reac_prev = assemble_reaction(DgField(dm, v), params)[0]

        def res(x):
            r = base @ x - explicit - load
            if params.alpha:
                r += 0.5 * (params.alpha * bdg_residual(DgField(dm, x), params,
                                                        g=g, t=t1) + adv_prev)
            if params.beta:
                r -= 0.5 * params.beta * (assemble_reaction(DgField(dm, x),
                                                            params)[0] + reac_prev)
            return r

        def jac(x):
            if params.is_linear:
                key = ("cn", tau, mem_coeff)
                if key not in state.lu_cache:
                    state.lu_cache[key] = LuSolver(base)
                return state.lu_cache[key]
            j = base.copy()
            if params.alpha:
                j = j + 0.5 * params.alpha * bdg_jacobian(DgField(dm, x), params,
                                                          g=g, t=t1)
            if params.beta:
                j = j - 0.5 * params.beta * assemble_reaction(DgField(dm, x),
                                                              params)[1]
            return j

    x, report = newton_solve(v.copy(), res, jac, tol=options.newton_tol,
                             max_iter=options.newton_max_iter)
    u_new = DgField(dm, x)

    entry = u_new if scheme == "be" else DgField(dm, 0.5 * (x + v))
    if options.store_history_fields:
        state.history.add(entry)
    state.actions.append(A @ entry.coeffs)

    record = StepRecord(k=k, t0=t0, t1=t1, u_prev=state.u, u_curr=u_new)
    if options.estimate:
        ctx = TransientStepContext(
            scheme=scheme, dofmap=dm, params=params, kernel=kernel,
            weights=weights, k=k, t0=t0, t1=t1, u_curr=u_new,
            u_prev=state.u, hist=list(state.history.records), f=f,
            f_avg=f_avg, g=g,
            memory_jump_gradient=options.memory_jump_gradient,
            source_midpoint=options.source_midpoint)
        record.estimate = estimate_be_step(ctx) if scheme == "be" \
            else estimate_cn_step(ctx)
    state.u = u_new
    state.k = k
    return record


def be_step(state, params, weights, f, g=None, kernel=None, options=None):
    """Advance one backward Euler step: given u^{k-1} find u^k."""
    options = options or TransientOptions()
    return _advance(state, params, "be", weights, kernel, f, g, options)


def cn_step(state, params, weights, f, g=None, kernel=None, options=None):
    """Advance one Crank-Nicolson step."""
    options = options or TransientOptions()
    return _advance(state, params, "cn", weights, kernel, f, g, options)


def run_transient(dm, params, grid, f, u0, scheme="be", kernel=None, g=None,
                  options=None):
    """Run the full time loop on a fixed mesh.

    ``f(x, y, t)`` is the source, ``u0(x, y)`` the initial datum, ``g``
    optional Dirichlet data ``g(x, y, t)``.  Memory requires a kernel and
    eta > 0.  Online error accumulation against ``options.exact`` uses
    2-point Gauss per step on the linear reconstruction.
    """
    if scheme not in ("be", "cn"):
        raise ValueError("scheme must be 'be' or 'cn'")
    options = options or TransientOptions()
    weights = None
    if params.eta > 0.0:
        if kernel is None:
            raise ValueError("eta > 0 requires a kernel")
        weights = (weights_be if scheme == "be" else weights_cn)(grid.times, kernel)
    state = TransientState(grid=grid, dofmap=dm, u=l2_project(u0, dm))
    records = []
    estimates = TransientEstimate() if options.estimate else None
    err_dg_sq = 0.0
    for _ in range(grid.n_steps):
        rec = _advance(state, params, scheme, weights, kernel, f, g, options)
        if options.estimate:
            estimates.add(rec.estimate)
        if options.exact is not None:
            err_dg_sq += step_error_contribution(
                rec.u_prev, rec.u_curr, rec.t0, rec.t1, options.exact,
                options.exact_grad, params)
        if options.store_trajectory:
            records.append(rec)
        if options.snapshot_every and rec.k % options.snapshot_every == 0:
            from .mesh import write_vtk
            means = rec.u_curr.cell_coeffs().mean(axis=1)
            write_vtk(f"{options.snapshot_dir}/step_{rec.k:04d}.vtk",
                      dm.mesh, cell_data={"u": means})
    err_l2 = None
    if options.exact is not None:
        err_l2 = l2_error(lambda x, y: options.exact(x, y, grid.final),
                          state.u)
    return TransientResult(grid=grid, final=state.u, records=records,
                           estimates=estimates, error_final_l2=err_l2,
                           error_time_dg_sq=err_dg_sq if options.exact else None)
