"""Sparse CSR storage and the direct-solve contract backing Newton."""
from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["CsrMatrix", "LuSolver", "SingularMatrixError",
           "IllConditionedWarning", "solve", "write_matrix_market"]

RESIDUAL_TOL = 1e-10
WARN_TOL = 1e-6


class SingularMatrixError(RuntimeError):
    """The linear system is (numerically) singular."""


class IllConditionedWarning(UserWarning):
    """Solve met only a relaxed residual tolerance."""


class CsrMatrix:
    """CSR matrix with canonical structure (sorted, deduplicated columns)."""

    def __init__(self, matrix):
        m = sp.csr_matrix(matrix)
        m.sum_duplicates()
        m.sort_indices()
        if not np.all(np.isfinite(m.data)):
            raise ValueError("non-finite matrix entries")
        self.csr = m

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        return cls(sp.coo_matrix((vals, (rows, cols)), shape=shape))

    @property
    def shape(self):
        return self.csr.shape

    @property
    def nnz(self):
        return self.csr.nnz

    def matvec(self, x):
        return self.csr @ x

    def __matmul__(self, x):
        return self.csr @ x

    def transpose(self):
        return CsrMatrix(self.csr.T)

    def to_dense(self):
        return self.csr.toarray()

    def scaled_add(self, alpha, other):
        return CsrMatrix(self.csr + alpha * other.csr)


def _as_csr(a):
    return a.csr if isinstance(a, CsrMatrix) else sp.csr_matrix(a)


class LuSolver:
    """Factor once, solve many times (direct sparse LU with partial pivoting)."""

    def __init__(self, a):
        m = _as_csr(a)
        if m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        self._a = m
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                self._lu = spla.splu(m.tocsc())
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise SingularMatrixError(str(exc)) from exc

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SingularMatrixError("factorization produced non-finite solution")
        scale = np.linalg.norm(b)
        resid = np.linalg.norm(self._a @ x - b)
        rel = resid / scale if scale > 0 else resid
        if rel > RESIDUAL_TOL:
            if rel <= WARN_TOL:
                warnings.warn(
                    f"linear solve met only {rel:.2e} relative residual",
                    IllConditionedWarning, stacklevel=2)
            else:
                raise SingularMatrixError(
                    f"relative residual {rel:.2e} exceeds contract")
        return x


def solve(a, b):
    """Direct sparse solve with relative residual <= 1e-10 contract."""
    return LuSolver(a).solve(b)


def write_matrix_market(path, a):
    from scipy.io import mmwrite
    mmwrite(str(path), _as_csr(a))
