"""Assembly of the interior-penalty diffusion form, upwind advection form,
reaction term, and Newton solves for the stationary problem.

Sign conventions follow the strong equation

    alpha u^d (u_x + u_y) - nu Lap(u) - beta u (1 - u^d)(u^d - gamma) = f

whose discrete residual is R(u).v = nu a(u,v) + alpha b(u,u,v)
- beta (c(u), v) - (f_h, v) - nu l_g(v); Dirichlet data enters through
exterior traces and the load l_g.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dgspace import DgField, cell_quadrature, edge_quadrature, eval_basis, l2_project
from .linalg import CsrMatrix, LuSolver, SingularMatrixError

__all__ = [
    "ModelParams",
    "SparseOperator",
    "NewtonReport",
    "NonConvergenceError",
    "assemble_mass",
    "assemble_adg",
    "assemble_dg_gram",
    "dirichlet_load",
    "assemble_bdg",
    "bdg_form",
    "bdg_residual",
    "bdg_jacobian",
    "assemble_reaction",
    "stationary_residual",
    "stationary_jacobian",
    "newton_solve",
    "solve_stationary",
]


@dataclass(frozen=True)
class ModelParams:
    """Equation and discretization parameters.

    ``penalty`` is the dimensionless jump-penalty constant; the per-edge
    weight is penalty / h_E.
    """
    alpha: float = 1.0
    nu: float = 1.0
    beta: float = 1.0
    gamma: float = 0.5
    delta: int = 1
    eta: float = 0.0
    penalty: float = 10.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.eta < 0:
            raise ValueError("alpha, beta, eta must be non-negative")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.delta not in (1, 2, 3):
            raise ValueError("delta must be a positive integer <= 3")
        if self.penalty <= 0:
            raise ValueError("penalty must be positive")

    @property
    def is_linear(self):
        return self.alpha == 0.0 and self.beta == 0.0

    @staticmethod
    def default_penalty(degree):
        return 10.0 * degree * degree


@dataclass
class SparseOperator:
    matrix: CsrMatrix
    role: str = "generic"

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x

    @property
    def csr(self):
        return self.matrix.csr


def reaction_value(u, params):
    g, d = params.gamma, params.delta
    return (1.0 + g) * u ** (d + 1) - g * u - u ** (2 * d + 1)


def reaction_derivative(u, params):
    g, d = params.gamma, params.delta
    return (1.0 + g) * (d + 1) * u ** d - g - (2 * d + 1) * u ** (2 * d)


# ---------------------------------------------------------------------------
# cached cell / edge quadrature contexts
# ---------------------------------------------------------------------------

def cell_ctx(dm, qdeg):
    key = ("cell_ctx", qdeg)
    if key not in dm._cache:
        rule = cell_quadrature(qdeg)
        phi, dphi = eval_basis(dm.degree, rule.points)
        gphi = np.einsum("cid,lqd->clqi", dm.inv_jac_t, dphi)
        dm._cache[key] = {
            "rule": rule,
            "phi": phi,                      # (nl, nq)
            "gphi": gphi,                    # (nc, nl, nq, 2)
            "xq": dm.physical_points(rule.points),
        }
    return dm._cache[key]


def edge_ctx(dm, qdeg):
    key = ("edge_ctx", qdeg)
    if key not in dm._cache:
        mesh = dm.mesh
        rule = edge_quadrature(qdeg)
        s = rule.points
        nq = len(s)
        ne = mesh.n_edges
        p0 = mesh.vertices[mesh.edges[:, 0]]
        p1 = mesh.vertices[mesh.edges[:, 1]]
        xq = p0[:, None, :] + s[None, :, None] * (p1 - p0)[:, None, :]
        cp = mesh.edge_cells[:, 0]
        interior = ~mesh.edge_is_boundary
        cm = np.where(interior, mesh.edge_cells[:, 1], cp)

        def side(cells):
            ref = dm.to_reference(cells[:, None], xq)
            vals, grads = eval_basis(dm.degree, ref.reshape(-1, 2))
            vals = vals.reshape(-1, ne, nq).transpose(1, 2, 0)       # (ne,nq,nl)
            grads = grads.reshape(-1, ne, nq, 2)
            gphys = np.einsum("eid,leqd->eqli", dm.inv_jac_t[cells], grads)
            return vals, gphys                                       # (ne,nq,nl,2)

        valsP, gradP = side(cp)
        valsM, gradM = side(cm)
        dm._cache[key] = {
            "rule": rule,
            "xq": xq,
            "cp": cp, "cm": cm, "interior": interior,
            "valsP": valsP, "gradP": gradP,
            "valsM": valsM, "gradM": gradM,
            "normals": mesh.normals,
            "h_edge": mesh.h_edge,
        }
    return dm._cache[key]


def _edge_values(field, ec):
    """Traces of a field on both sides of every edge, (ne, nq) each."""
    cc = field.cell_coeffs()
    up = np.einsum("eql,el->eq", ec["valsP"], cc[ec["cp"]])
    um = np.einsum("eql,el->eq", ec["valsM"], cc[ec["cm"]])
    return up, um


def _edge_gradients(field, ec):
    cc = field.cell_coeffs()
    gp = np.einsum("eqli,el->eqi", ec["gradP"], cc[ec["cp"]])
    gm = np.einsum("eqli,el->eqi", ec["gradM"], cc[ec["cm"]])
    return gp, gm


def boundary_values(g, ec, t=None):
    """Dirichlet data at the edge quadrature points, zero on interior rows."""
    shape = ec["xq"].shape[:2]
    if g is None:
        return np.zeros(shape)
    x, y = ec["xq"][..., 0], ec["xq"][..., 1]
    gq = g(x, y) if t is None else g(x, y, t)
    gq = np.broadcast_to(np.asarray(gq, dtype=float), shape).copy()
    gq[ec["interior"]] = 0.0
    return gq


# ---------------------------------------------------------------------------
# mass / diffusion
# ---------------------------------------------------------------------------

def reference_mass(dm):
    key = ("mass_ref",)
    if key not in dm._cache:
        rule = cell_quadrature(2 * dm.degree)
        phi, _ = eval_basis(dm.degree, rule.points)
        dm._cache[key] = np.einsum("q,iq,jq->ij", rule.weights, phi, phi)
    return dm._cache[key]


def _block_coo(dm, test_dofs, trial_dofs, blocks, out):
    nl = dm.n_loc
    out[0].append(np.repeat(test_dofs, nl, axis=1).ravel())
    out[1].append(np.tile(trial_dofs, (1, nl)).ravel())
    out[2].append(blocks.ravel())


def assemble_mass(dm):
    """Block-diagonal, symmetric positive definite mass matrix."""
    key = ("mass",)
    if key not in dm._cache:
        blocks = dm.det[:, None, None] * reference_mass(dm)[None]
        out = ([], [], [])
        _block_coo(dm, dm.cell_dofs, dm.cell_dofs, blocks, out)
        mat = CsrMatrix.from_coo(out[0][0], out[1][0], out[2][0],
                                 (dm.n_dofs, dm.n_dofs))
        dm._cache[key] = SparseOperator(mat, role="mass")
    return dm._cache[key]


def _diffusion_parts(dm, edge_qdeg):
    """Volume stiffness, consistency matrix C, and unit penalty matrix.

    a_dg = vol - C - C^T + penalty * pen_unit; pen_unit carries the 1/h_E
    weight but not the penalty constant.
    """
    key = ("diffusion", edge_qdeg)
    if key not in dm._cache:
        cc = cell_ctx(dm, 2 * dm.degree)
        w = cc["rule"].weights
        nd = dm.n_dofs
        vol_blocks = dm.det[:, None, None] * np.einsum(
            "q,ciqd,cjqd->cij", w, cc["gphi"], cc["gphi"])
        out = ([], [], [])
        _block_coo(dm, dm.cell_dofs, dm.cell_dofs, vol_blocks, out)
        vol = sp.coo_matrix((np.concatenate(out[2]),
                             (np.concatenate(out[0]), np.concatenate(out[1]))),
                            shape=(nd, nd)).tocsr()

        ec = edge_ctx(dm, edge_qdeg)
        wq = ec["rule"].weights
        he = ec["h_edge"]
        n = ec["normals"]
        interior = ec["interior"]
        dofP = dm.cell_dofs[ec["cp"]]
        dofM = dm.cell_dofs[ec["cm"]]
        iP, iM = dofP[interior], dofM[interior]

        gPn = np.einsum("eqli,ei->eql", ec["gradP"], n)
        gMn = np.einsum("eqli,ei->eql", ec["gradM"], n)
        half = np.where(interior, 0.5, 1.0) * he

        # consistency C[i,j] = sum_E int {{grad phi_j}} . n (phi_i^P - phi_i^M)
        out = ([], [], [])
        _block_coo(dm, dofP, dofP,
                   np.einsum("e,q,eqi,eqj->eij", half, wq, ec["valsP"], gPn), out)
        _block_coo(dm, iM, dofP[interior],
                   -np.einsum("e,q,eqi,eqj->eij", half[interior], wq,
                              ec["valsM"][interior], gPn[interior]), out)
        _block_coo(dm, iP, dofM[interior],
                   np.einsum("e,q,eqi,eqj->eij", half[interior], wq,
                             ec["valsP"][interior], gMn[interior]), out)
        _block_coo(dm, iM, dofM[interior],
                   -np.einsum("e,q,eqi,eqj->eij", half[interior], wq,
                              ec["valsM"][interior], gMn[interior]), out)
        cons = sp.coo_matrix((np.concatenate(out[2]),
                              (np.concatenate(out[0]), np.concatenate(out[1]))),
                             shape=(nd, nd)).tocsr()

        # penalty (1/h_E) int [[u]].[[v]]; edge length cancels the 1/h_E
        out = ([], [], [])
        ones = np.ones(len(he))
        _block_coo(dm, dofP, dofP,
                   np.einsum("e,q,eqi,eqj->eij", ones, wq, ec["valsP"], ec["valsP"]), out)
        _block_coo(dm, iP, iM,
                   -np.einsum("q,eqi,eqj->eij", wq, ec["valsP"][interior],
                              ec["valsM"][interior]), out)
        _block_coo(dm, iM, iP,
                   -np.einsum("q,eqi,eqj->eij", wq, ec["valsM"][interior],
                              ec["valsP"][interior]), out)
        _block_coo(dm, iM, iM,
                   np.einsum("q,eqi,eqj->eij", wq, ec["valsM"][interior],
                             ec["valsM"][interior]), out)
        pen = sp.coo_matrix((np.concatenate(out[2]),
                             (np.concatenate(out[0]), np.concatenate(out[1]))),
                            shape=(nd, nd)).tocsr()
        dm._cache[key] = (vol, cons, pen)
    return dm._cache[key]


def assemble_adg(dm, params, edge_qdeg=None):
    """SIPG bilinear form a_dg (penalty included, viscosity applied outside)."""
    if edge_qdeg is None:
        edge_qdeg = dm.default_assembly_degrees(params.delta)[1]
    vol, cons, pen = _diffusion_parts(dm, edge_qdeg)
    mat = vol - cons - cons.T + params.penalty * pen
    return SparseOperator(CsrMatrix(mat), role="stiffness")


def assemble_dg_gram(dm, params, edge_qdeg=None):
    """Gram matrix of the DG norm: broken gradients plus penalty jumps."""
    if edge_qdeg is None:
        edge_qdeg = dm.default_assembly_degrees(params.delta)[1]
    vol, _, pen = _diffusion_parts(dm, edge_qdeg)
    return SparseOperator(CsrMatrix(vol + params.penalty * pen), role="gram")


def dirichlet_load(dm, params, g, edge_qdeg=None, t=None):
    """Boundary-data functional l_g(v) = sum_E int(-grad v . n g + pen/h g v).

    Multiplied by nu in the residual; zero or missing data gives zero.
    """
    if g is None:
        return np.zeros(dm.n_dofs)
    if edge_qdeg is None:
        edge_qdeg = dm.default_assembly_degrees(params.delta)[1]
    ec = edge_ctx(dm, edge_qdeg)
    bnd = ~ec["interior"]
    out = np.zeros(dm.n_dofs)
    if not bnd.any():
        return out
    gq = boundary_values(g, ec, t=t)[bnd]
    wq = ec["rule"].weights
    he = ec["h_edge"][bnd]
    gPn = np.einsum("eqli,ei->eql", ec["gradP"][bnd], ec["normals"][bnd])
    contrib = -np.einsum("e,q,eq,eql->el", he, wq, gq, gPn)
    contrib += params.penalty * np.einsum("q,eq,eql->el", wq, gq, ec["valsP"][bnd])
    np.add.at(out, dm.cell_dofs[ec["cp"][bnd]], contrib)
    return out


# ---------------------------------------------------------------------------
# upwind advection form
#
# Per edge side with own trace o and exterior trace x the boundary sums of
# the trilinear form reduce to  q (u_x v_o - u_o v_x)  with
# q = (w.n_o - |w.n_o|) / 2 evaluated with the side's own speed trace.
# ---------------------------------------------------------------------------

def _bdg_core(dm, params, u, w_cell, wP, wM, g_bnd=None, t=None):
    delta = params.delta
    cdeg, edeg = dm.default_assembly_degrees(delta)
    cc = cell_ctx(dm, cdeg)
    ec = edge_ctx(dm, edeg)
    w = cc["rule"].weights
    uu = u.cell_coeffs()
    uq = np.einsum("lq,cl->cq", cc["phi"], uu)
    gu = np.einsum("clqi,cl->cqi", cc["gphi"], uu)
    sum_du = gu[..., 0] + gu[..., 1]
    sum_dphi = cc["gphi"][..., 0] + cc["gphi"][..., 1]

    r = np.zeros(dm.n_dofs)
    t1 = np.einsum("c,q,cq,cq,lq->cl", dm.det, w, w_cell, sum_du, cc["phi"])
    t2 = np.einsum("c,q,cq,cq,clq->cl", dm.det, w, w_cell, uq, sum_dphi)
    np.add.at(r, dm.cell_dofs, t1 - t2)

    wq = ec["rule"].weights
    he = ec["h_edge"]
    nsum = ec["normals"].sum(axis=1)
    interior = ec["interior"]
    uP, uM = _edge_values(u, ec)
    u_extP = np.where(interior[:, None], uM, boundary_values(g_bnd, ec, t=t))

    def upwind(w_own, sign, nsum_s):
        wn = w_own * (sign * nsum_s[:, None])
        return 0.5 * (wn - np.abs(wn))

    # side P (all edges): own tests +q u_ext phi^P; ext tests -q u_own phi^M
    qP = upwind(wP, +1.0, nsum)
    scale = he[:, None] * wq[None, :]
    np.add.at(r, dm.cell_dofs[ec["cp"]],
              np.einsum("eq,eq,eql->el", scale * qP, u_extP, ec["valsP"]))
    sel = interior
    np.add.at(r, dm.cell_dofs[ec["cm"][sel]],
              -np.einsum("eq,eq,eql->el", (scale * qP)[sel], uP[sel],
                         ec["valsM"][sel]))
    # side M (interior only)
    qM = upwind(wM[sel], -1.0, nsum[sel])
    np.add.at(r, dm.cell_dofs[ec["cm"][sel]],
              np.einsum("eq,eq,eql->el", scale[sel] * qM, uP[sel],
                        ec["valsM"][sel]))
    np.add.at(r, dm.cell_dofs[ec["cp"][sel]],
              -np.einsum("eq,eq,eql->el", scale[sel] * qM, uM[sel],
                         ec["valsP"][sel]))
    return r / (delta + 2.0)


def assemble_bdg(w, u, params, g=None, t=None):
    """Action vector of the upwind trilinear form with explicit speed field w:
    (result . v) = b((w, w), u, v) for every test function v."""
    dm = u.dofmap
    if w.dofmap is not dm:
        raise ValueError("w and u must share a dofmap")
    cdeg, edeg = dm.default_assembly_degrees(params.delta)
    cc = cell_ctx(dm, cdeg)
    ec = edge_ctx(dm, edeg)
    w_cell = np.einsum("lq,cl->cq", cc["phi"], w.cell_coeffs())
    wP, wM = _edge_values(w, ec)
    return _bdg_core(dm, params, u, w_cell, wP, wM, g_bnd=g, t=t)


def bdg_form(w, u, v, params, g=None):
    """Scalar b((w, w), u, v); used by the identity checks."""
    return float(assemble_bdg(w, u, params, g=g) @ v.coeffs)


def bdg_residual(u, params, g=None, t=None):
    """Action vector of b((u^d, u^d), u, .), speed taken from u itself."""
    dm = u.dofmap
    cdeg, edeg = dm.default_assembly_degrees(params.delta)
    cc = cell_ctx(dm, cdeg)
    ec = edge_ctx(dm, edeg)
    d = params.delta
    uq = np.einsum("lq,cl->cq", cc["phi"], u.cell_coeffs())
    uP, uM = _edge_values(u, ec)
    return _bdg_core(dm, params, u, uq ** d, uP ** d, uM ** d, g_bnd=g, t=t)


def bdg_jacobian(u, params, g=None, t=None):
    """Analytic derivative of bdg_residual with respect to the coefficients.

    The upwind absolute value is differentiated semismoothly (sign(0) = 0),
    so the Jacobian matches finite differences away from the kink set.
    """
    dm = u.dofmap
    delta = params.delta
    cdeg, edeg = dm.default_assembly_degrees(delta)
    cc = cell_ctx(dm, cdeg)
    ec = edge_ctx(dm, edeg)
    w = cc["rule"].weights
    uu = u.cell_coeffs()
    uq = np.einsum("lq,cl->cq", cc["phi"], uu)
    gu = np.einsum("clqi,cl->cqi", cc["gphi"], uu)
    sum_du = gu[..., 0] + gu[..., 1]
    sum_dphi = cc["gphi"][..., 0] + cc["gphi"][..., 1]
    wq_cell = uq ** delta
    dwq_cell = delta * uq ** (delta - 1)

    out = ([], [], [])
    blk = np.einsum("c,q,cq,lq,mq->clm", dm.det, w, dwq_cell * sum_du,
                    cc["phi"], cc["phi"])
    blk += np.einsum("c,q,cq,cmq,lq->clm", dm.det, w, wq_cell, sum_dphi, cc["phi"])
    blk -= np.einsum("c,q,cq,clq,mq->clm", dm.det, w, dwq_cell * uq, sum_dphi,
                     cc["phi"])
    blk -= np.einsum("c,q,cq,clq,mq->clm", dm.det, w, wq_cell, sum_dphi, cc["phi"])
    _block_coo(dm, dm.cell_dofs, dm.cell_dofs, blk, out)

    wq = ec["rule"].weights
    he = ec["h_edge"]
    nsum = ec["normals"].sum(axis=1)
    interior = ec["interior"]
    uP, uM = _edge_values(u, ec)
    u_extP = np.where(interior[:, None], uM, boundary_values(g, ec, t=t))
    scale_all = he[:, None] * wq[None, :]

    def side(sel, own_vals, ext_vals, u_own, u_ext, own_cells, ext_cells,
             sign, ext_is_field):
        ns = nsum[sel]
        sc = scale_all[sel]
        wn = u_own ** delta * (sign * ns[:, None])
        q = 0.5 * (wn - np.abs(wn))
        dq = 0.5 * (1.0 - np.sign(wn)) * (sign * ns[:, None]) * \
            delta * u_own ** (delta - 1)
        own_dofs = dm.cell_dofs[own_cells]
        # own tests: residual q u_ext phi^own
        _block_coo(dm, own_dofs, own_dofs,
                   np.einsum("eq,eql,eqm->elm", sc * dq * u_ext, own_vals,
                             own_vals), out)
        if ext_is_field:
            ext_dofs = dm.cell_dofs[ext_cells]
            _block_coo(dm, own_dofs, ext_dofs,
                       np.einsum("eq,eql,eqm->elm", sc * q, own_vals, ext_vals),
                       out)
            # ext tests: residual -q u_own phi^ext
            _block_coo(dm, ext_dofs, own_dofs,
                       -np.einsum("eq,eql,eqm->elm", sc * (dq * u_own + q),
                                  ext_vals, own_vals), out)

    sel_i = interior
    sel_b = ~interior
    side(sel_i, ec["valsP"][sel_i], ec["valsM"][sel_i], uP[sel_i], uM[sel_i],
         ec["cp"][sel_i], ec["cm"][sel_i], +1.0, True)
    side(sel_i, ec["valsM"][sel_i], ec["valsP"][sel_i], uM[sel_i], uP[sel_i],
         ec["cm"][sel_i], ec["cp"][sel_i], -1.0, True)
    if sel_b.any():
        side(sel_b, ec["valsP"][sel_b], None, uP[sel_b], u_extP[sel_b],
             ec["cp"][sel_b], None, +1.0, False)

    mat = sp.coo_matrix((np.concatenate(out[2]),
                         (np.concatenate(out[0]), np.concatenate(out[1]))),
                        shape=(dm.n_dofs, dm.n_dofs)).tocsr()
    return mat / (delta + 2.0)


# ---------------------------------------------------------------------------
# reaction term
# ---------------------------------------------------------------------------

def assemble_reaction(u, params):
    """Load vector (c(u), v) and its Jacobian, integrated exactly."""
    dm = u.dofmap
    cdeg, _ = dm.default_assembly_degrees(params.delta)
    cc = cell_ctx(dm, cdeg)
    w = cc["rule"].weights
    uq = np.einsum("lq,cl->cq", cc["phi"], u.cell_coeffs())
    vec = np.zeros(dm.n_dofs)
    np.add.at(vec, dm.cell_dofs,
              np.einsum("c,q,cq,lq->cl", dm.det, w, reaction_value(uq, params),
                        cc["phi"]))
    blocks = np.einsum("c,q,cq,lq,mq->clm", dm.det, w,
                       reaction_derivative(uq, params), cc["phi"], cc["phi"])
    out = ([], [], [])
    _block_coo(dm, dm.cell_dofs, dm.cell_dofs, blocks, out)
    jac = sp.coo_matrix((out[2][0], (out[0][0], out[1][0])),
                        shape=(dm.n_dofs, dm.n_dofs)).tocsr()
    return vec, jac


# ---------------------------------------------------------------------------
# stationary problem
# ---------------------------------------------------------------------------

def stationary_residual(u, f_h, params, g=None, adg=None, mass=None, gload=None):
    dm = u.dofmap
    if adg is None:
        adg = assemble_adg(dm, params)
    if mass is None:
        mass = assemble_mass(dm)
    if gload is None:
        gload = dirichlet_load(dm, params, g)
    r = params.nu * (adg @ u.coeffs)
    if params.alpha:
        r += params.alpha * bdg_residual(u, params, g=g)
    if params.beta:
        r -= params.beta * assemble_reaction(u, params)[0]
    r -= mass @ f_h.coeffs
    r -= params.nu * gload
    return r


def stationary_jacobian(u, params, g=None, adg=None):
    dm = u.dofmap
    if adg is None:
        adg = assemble_adg(dm, params)
    jac = params.nu * adg.csr
    if params.alpha:
        jac = jac + params.alpha * bdg_jacobian(u, params, g=g)
    if params.beta:
        jac = jac - params.beta * assemble_reaction(u, params)[1]
    return SparseOperator(CsrMatrix(jac), role="jacobian")


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------

@dataclass
class NewtonReport:
    iterations: int = 0
    residual_norms: list = field(default_factory=list)
    converged: bool = False


class NonConvergenceError(RuntimeError):
    def __init__(self, message, iterate=None, report=None):
        super().__init__(message)
        self.iterate = iterate
        self.report = report


def newton_solve(initial, residual, jacobian, tol=1e-10, max_iter=25,
                 damping=True):
    """Damped Newton iteration on coefficient vectors.

    ``residual(x)`` returns a vector; ``jacobian(x)`` a CsrMatrix,
    SparseOperator, scipy matrix, or a pre-factorized LuSolver.  Converged
    when |R|_2 <= tol * (1 + |R(x0)|_2).  Backtracking halves the step up to
    20 times while the residual norm does not decrease.
    """
    x = np.array(initial, dtype=float, copy=True)
    r = residual(x)
    rnorm = float(np.linalg.norm(r))
    target = tol * (1.0 + rnorm)
    report = NewtonReport(residual_norms=[rnorm])
    for it in range(max_iter):
        if rnorm <= target:
            report.converged = True
            return x, report
        jac = jacobian(x)
        if isinstance(jac, LuSolver):
            lu = jac
        else:
            mat = jac.csr if isinstance(jac, SparseOperator) else jac
            try:
                lu = LuSolver(mat)
            except SingularMatrixError as exc:
                raise NonConvergenceError(
                    f"singular Jacobian at iteration {it}", iterate=x,
                    report=report) from exc
        step = lu.solve(-r)
        lam = 1.0
        accepted = False
        for _ in range(21):
            x_new = x + lam * step
            r_new = residual(x_new)
            rnorm_new = float(np.linalg.norm(r_new))
            if rnorm_new < rnorm or rnorm_new <= target or not damping:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            raise NonConvergenceError(
                "line search failed to reduce the residual", iterate=x,
                report=report)
        x, r, rnorm = x_new, r_new, rnorm_new
        report.iterations = it + 1
        report.residual_norms.append(rnorm)
    if rnorm <= target:
        report.converged = True
        return x, report
    raise NonConvergenceError(
        f"no convergence in {max_iter} iterations (|R| = {rnorm:.3e})",
        iterate=x, report=report)


def solve_stationary(dm, params, f, g=None, initial=None, tol=1e-10,
                     max_iter=25, f_field=None):
    """Newton solve of the stationary problem on a given dofmap.

    ``f`` is the source closure f(x, y); ``g`` optional Dirichlet data.
    Returns (solution field, report, projected source f_h).
    """
    adg = assemble_adg(dm, params)
    mass = assemble_mass(dm)
    gload = dirichlet_load(dm, params, g)
    f_h = f_field if f_field is not None else l2_project(f, dm)

    def res(x):
        return stationary_residual(DgField(dm, x), f_h, params, g=g,
                                   adg=adg, mass=mass, gload=gload)

    lu_cache = {}

    def jac(x):
        if params.is_linear:
            if "lu" not in lu_cache:
                lu_cache["lu"] = LuSolver(params.nu * adg.csr)
            return lu_cache["lu"]
        return stationary_jacobian(DgField(dm, x), params, g=g, adg=adg)

    x0 = initial.coeffs if isinstance(initial, DgField) else \
        (np.zeros(dm.n_dofs) if initial is None else np.asarray(initial, float))
    x, report = newton_solve(x0, res, jac, tol=tol, max_iter=max_iter)
    return DgField(dm, x), report, f_h
