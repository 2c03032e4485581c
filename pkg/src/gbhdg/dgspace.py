"""Broken P1/P2 spaces on triangles: nodal bases, quadrature, projection."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

__all__ = [
    "QuadratureRule",
    "DofMap",
    "DgField",
    "eval_basis",
    "basis_hessians",
    "cell_quadrature",
    "edge_quadrature",
    "l2_project",
    "evaluate",
    "reference_nodes",
]

MAX_CELL_DEGREE = 40
MAX_EDGE_POINTS = 64

_P1_NODES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
_P2_NODES = np.vstack([_P1_NODES, [[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]])


def reference_nodes(degree):
    """Lagrange node coordinates on the reference triangle."""
    if degree == 1:
        return _P1_NODES.copy()
    if degree == 2:
        return _P2_NODES.copy()
    raise ValueError(f"unsupported degree {degree}")


def eval_basis(degree, points):
    """Values and gradients of the local Lagrange basis at reference points.

    Returns ``vals`` of shape (n_loc, m) and ``grads`` of shape (n_loc, m, 2)
    for ``points`` of shape (m, 2).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    lam = np.stack([1.0 - x - y, x, y])            # (3, m)
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    m = len(x)
    if degree == 1:
        vals = lam
        grads = np.broadcast_to(dlam[:, None, :], (3, m, 2)).copy()
        return vals, grads
    if degree == 2:
        vals = np.empty((6, m))
        grads = np.empty((6, m, 2))
        for i in range(3):
            vals[i] = lam[i] * (2.0 * lam[i] - 1.0)
            grads[i] = (4.0 * lam[i] - 1.0)[:, None] * dlam[i]
        mids = [(0, 1), (1, 2), (2, 0)]
        for n, (i, j) in enumerate(mids):
            vals[3 + n] = 4.0 * lam[i] * lam[j]
            grads[3 + n] = 4.0 * (lam[i][:, None] * dlam[j] + lam[j][:, None] * dlam[i])
        return vals, grads
    raise ValueError(f"unsupported degree {degree}")


def basis_hessians(degree):
    """Constant reference Hessians of the local basis, shape (n_loc, 2, 2).

    P1 and P2 bases have polynomial degree <= 2, so second derivatives are
    constant on the reference cell.
    """
    if degree == 1:
        return np.zeros((3, 2, 2))
    if degree == 2:
        dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        hess = np.empty((6, 2, 2))
        for i in range(3):
            hess[i] = 4.0 * np.outer(dlam[i], dlam[i])
        mids = [(0, 1), (1, 2), (2, 0)]
        for n, (i, j) in enumerate(mids):
            hess[3 + n] = 4.0 * (np.outer(dlam[i], dlam[j]) + np.outer(dlam[j], dlam[i]))
        return hess
    raise ValueError(f"unsupported degree {degree}")


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (m, 2) reference coords on cells, (m,) on [0,1] edges
    weights: np.ndarray  # (m,), sums to the reference measure
    degree: int


_cell_rules = {}
_edge_rules = {}


def cell_quadrature(degree):
    """Gauss rule on the reference triangle, exact for total degree ``degree``.

    Conical product of Gauss-Jacobi (weight 1-x) and Gauss-Legendre nodes;
    weights sum to 1/2.
    """
    if degree < 0:
        raise ValueError("quadrature degree must be >= 0")
    if degree > MAX_CELL_DEGREE:
        raise ValueError(f"cell quadrature implemented up to degree {MAX_CELL_DEGREE}")
    if degree not in _cell_rules:
        n = max(1, (degree + 2) // 2)
        xj, wj = roots_jacobi(n, 1.0, 0.0)
        xi = 0.5 * (xj + 1.0)
        wi = 0.25 * wj
        xl, wl = leggauss(n)
        eta = 0.5 * (xl + 1.0)
        we = 0.5 * wl
        X = np.repeat(xi, n)
        Y = np.tile(eta, n) * (1.0 - X)
        W = np.repeat(wi, n) * np.tile(we, n)
        _cell_rules[degree] = QuadratureRule(
            np.stack([X, Y], axis=1), W, degree)
    return _cell_rules[degree]


def edge_quadrature(degree):
    """Gauss-Legendre rule on [0, 1], exact for polynomial ``degree``."""
    if degree < 0:
        raise ValueError("quadrature degree must be >= 0")
    n = max(1, (degree + 2) // 2)
    if n > MAX_EDGE_POINTS:
        raise ValueError(f"edge quadrature implemented up to {MAX_EDGE_POINTS} points")
    if degree not in _edge_rules:
        x, w = leggauss(n)
        _edge_rules[degree] = QuadratureRule(0.5 * (x + 1.0), 0.5 * w, degree)
    return _edge_rules[degree]


class DofMap:
    """Dof layout of the broken P_k space: cell c owns dofs
    ``c*n_loc .. (c+1)*n_loc - 1`` and no dof is shared between cells."""

    def __init__(self, mesh, degree):
        if degree not in (1, 2):
            raise ValueError("degree must be 1 or 2")
        self.mesh = mesh
        self.degree = degree
        self.n_loc = (degree + 1) * (degree + 2) // 2
        self.n_dofs = mesh.n_cells * self.n_loc
        self.cell_dofs = np.arange(self.n_dofs, dtype=np.int64).reshape(
            mesh.n_cells, self.n_loc)
        v = mesh.vertices[mesh.cells]            # (nc, 3, 2)
        self.v0 = v[:, 0]
        self.jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)  # columns
        self.det = self.jac[:, 0, 0] * self.jac[:, 1, 1] - self.jac[:, 0, 1] * self.jac[:, 1, 0]
        inv = np.empty_like(self.jac)
        inv[:, 0, 0] = self.jac[:, 1, 1]
        inv[:, 0, 1] = -self.jac[:, 0, 1]
        inv[:, 1, 0] = -self.jac[:, 1, 0]
        inv[:, 1, 1] = self.jac[:, 0, 0]
        inv /= self.det[:, None, None]
        self.inv_jac = inv
        self.inv_jac_t = np.swapaxes(inv, 1, 2)
        self._cache = {}

    def __repr__(self):
        return f"DofMap(P{self.degree}, {self.mesh.n_cells} cells, {self.n_dofs} dofs)"

    def physical_points(self, ref_points):
        """Map reference points (m, 2) into every cell: result (nc, m, 2)."""
        return self.v0[:, None, :] + np.einsum(
            "cij,mj->cmi", self.jac, np.asarray(ref_points, dtype=float))

    def node_coords(self):
        """Physical coordinates of the Lagrange nodes, (nc, n_loc, 2)."""
        return self.physical_points(reference_nodes(self.degree))

    def to_reference(self, cells, points):
        """Pull physical points back to reference coords of the given cells."""
        diff = points - self.v0[cells]
        return np.einsum("...ij,...j->...i", self.inv_jac[cells], diff)

    def default_assembly_degrees(self, delta):
        """Cell/edge quadrature degrees that integrate every polynomial term
        of the semilinear forms exactly (modulo the upwind absolute value)."""
        k = self.degree
        cell = max(2 * k + 2 * delta + 1, (2 * delta + 2) * k)
        edge = 2 * k + 2 * delta + 1
        return cell, edge

    def overkill_degree(self):
        return 2 * self.degree + 6


@dataclass
class DgField:
    """Coefficient vector over a DofMap (nodal Lagrange coefficients)."""
    dofmap: DofMap
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.dofmap.n_dofs,):
            raise ValueError("coefficient vector length does not match dofmap")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite coefficients")

    def copy(self):
        return DgField(self.dofmap, self.coeffs.copy())

    def cell_coeffs(self):
        return self.coeffs.reshape(self.dofmap.mesh.n_cells, self.dofmap.n_loc)

    def __add__(self, other):
        self._check(other)
        return DgField(self.dofmap, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return DgField(self.dofmap, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return DgField(self.dofmap, self.coeffs * float(a))

    __rmul__ = __mul__

    def _check(self, other):
        if other.dofmap is not self.dofmap:
            raise ValueError("fields live on different dofmaps")

    @classmethod
    def zeros(cls, dofmap):
        return cls(dofmap, np.zeros(dofmap.n_dofs))


def l2_project(f, dofmap, quad_degree=None, t=None):
    """Cell-by-cell L2 projection of a scalar function onto the broken space.

    ``f`` is called vectorized as ``f(x, y)`` (or ``f(x, y, t)`` when ``t``
    is given) on arrays of physical coordinates.
    """
    if quad_degree is None:
        quad_degree = dofmap.overkill_degree()
    rule = cell_quadrature(quad_degree)
    vals, _ = eval_basis(dofmap.degree, rule.points)     # (nl, nq)
    xq = dofmap.physical_points(rule.points)             # (nc, nq, 2)
    fq = f(xq[..., 0], xq[..., 1]) if t is None else f(xq[..., 0], xq[..., 1], t)
    fq = np.broadcast_to(np.asarray(fq, dtype=float), xq.shape[:2])
    mass_ref = np.einsum("q,iq,jq->ij", rule.weights, vals, vals)
    rhs = np.einsum("q,cq,iq->ci", rule.weights, fq, vals)
    coeffs = np.linalg.solve(mass_ref, rhs.T).T
    return DgField(dofmap, coeffs.ravel())


def evaluate(field, cell, point):
    """Value and physical gradient of a field at a reference point of a cell."""
    dm = field.dofmap
    if not 0 <= cell < dm.mesh.n_cells:
        raise IndexError("cell id out of range")
    vals, grads = eval_basis(dm.degree, np.atleast_2d(point))
    local = field.coeffs[dm.cell_dofs[cell]]
    value = float(local @ vals[:, 0])
    grad_ref = local @ grads[:, 0, :]
    grad = dm.inv_jac_t[cell] @ grad_ref
    return value, grad


def values_on_cells(field, vals):
    """Field values at shared reference points: coeffs (nc,nl) x vals (nl,nq)."""
    return field.cell_coeffs() @ vals


def gradients_on_cells(field, grads):
    """Physical gradients at shared reference points, shape (nc, nq, 2)."""
    dm = field.dofmap
    ref = np.einsum("cl,lqd->cqd", field.cell_coeffs(), grads)
    return np.einsum("cid,cqd->cqi", dm.inv_jac_t, ref)


def cell_laplacians(field):
    """Per-cell (constant) Laplacian of the field; exact for P1/P2."""
    dm = field.dofmap
    href = basis_hessians(dm.degree)                     # (nl, 2, 2)
    # physical Hessian: inv_jac^T H inv_jac, contracted per cell
    hphys = np.einsum("cdi,lde,cej->clij", dm.inv_jac, href, dm.inv_jac)
    lap_basis = hphys[..., 0, 0] + hphys[..., 1, 1]      # (nc, nl)
    return np.einsum("cl,cl->c", field.cell_coeffs(), lap_basis)
