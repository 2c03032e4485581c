import math

import numpy as np
import pytest

from gbhdg.dgspace import (DgField, DofMap, cell_quadrature, edge_quadrature,
                           eval_basis, evaluate, l2_project, reference_nodes,
                           MAX_CELL_DEGREE)
from gbhdg.mesh import build_structured


def exact_monomial(a, b):
    """int over the reference triangle of x^a y^b = a! b! / (a+b+2)!."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


class TestBasis:
    @pytest.mark.parametrize("degree", [1, 2])
    def test_lagrange_property(self, degree):
        nodes = reference_nodes(degree)
        vals, _ = eval_basis(degree, nodes)
        assert np.allclose(vals, np.eye(len(nodes)), atol=1e-14)

    def test_p1_values_at_named_points(self):
        vals, _ = eval_basis(1, [[0.0, 0.0]])
        assert np.allclose(vals[:, 0], [1, 0, 0])
        vals, _ = eval_basis(1, [[1 / 3, 1 / 3]])
        assert np.allclose(vals[:, 0], [1 / 3, 1 / 3, 1 / 3])

    @pytest.mark.parametrize("degree", [1, 2])
    def test_partition_of_unity_and_gradients(self, degree, rng):
        pts = rng.random((20, 2)) * [[1.0, 0.0]] + \
            rng.random((20, 2)) * [[0.0, 1.0]]
        pts[:, 1] *= 1.0 - pts[:, 0]
        vals, grads = eval_basis(degree, pts)
        assert np.allclose(vals.sum(axis=0), 1.0, atol=1e-13)
        assert np.allclose(grads.sum(axis=0), 0.0, atol=1e-13)
        # gradients consistent with finite differences
        h = 1e-7
        vx, _ = eval_basis(degree, pts + [h, 0.0])
        wx, _ = eval_basis(degree, pts - [h, 0.0])
        assert np.allclose((vx - wx) / (2 * h), grads[..., 0], atol=1e-6)

    def test_unsupported_degree(self):
        with pytest.raises(ValueError):
            eval_basis(3, [[0.1, 0.1]])


class TestQuadrature:
    def test_cell_rule_degree1_is_centroid(self):
        r = cell_quadrature(1)
        assert len(r.weights) == 1
        assert np.allclose(r.points[0], [1 / 3, 1 / 3])
        assert abs(r.weights[0] - 0.5) < 1e-15

    def test_edge_rule_degree3(self):
        r = edge_quadrature(3)
        assert len(r.weights) == 2
        assert np.allclose(sorted(r.points), [0.5 - 0.5 / np.sqrt(3),
                                              0.5 + 0.5 / np.sqrt(3)])
        assert np.allclose(r.weights, [0.5, 0.5])

    def test_x2y_exact(self):
        r = cell_quadrature(4)
        got = np.sum(r.weights * r.points[:, 0] ** 2 * r.points[:, 1])
        assert abs(got - 1 / 60) < 1e-14

    @pytest.mark.parametrize("degree", list(range(0, 13)) + [20])
    def test_cell_exactness_table(self, degree):
        r = cell_quadrature(degree)
        assert abs(r.weights.sum() - 0.5) < 1e-14
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                exact = exact_monomial(a, b)
                got = np.sum(r.weights * r.points[:, 0] ** a * r.points[:, 1] ** b)
                assert abs(got - exact) <= 1e-13 * max(1.0, abs(exact))

    @pytest.mark.parametrize("degree", range(0, 24))
    def test_edge_exactness_table(self, degree):
        r = edge_quadrature(degree)
        assert abs(r.weights.sum() - 1.0) < 1e-14
        for a in range(degree + 1):
            got = np.sum(r.weights * r.points ** a)
            assert abs(got - 1.0 / (a + 1)) < 1e-13

    def test_degree_caps(self):
        with pytest.raises(ValueError):
            cell_quadrature(MAX_CELL_DEGREE + 1)
        with pytest.raises(ValueError):
            cell_quadrature(-1)
        with pytest.raises(ValueError):
            edge_quadrature(2 * 64 + 1)


class TestDofMap:
    @pytest.mark.parametrize("degree,n_loc", [(1, 3), (2, 6)])
    def test_dimensions(self, square4, degree, n_loc):
        dm = DofMap(square4, degree)
        assert dm.n_loc == n_loc == (degree + 1) * (degree + 2) // 2
        assert dm.n_dofs == square4.n_cells * n_loc
        # no dof shared between cells
        assert len(np.unique(dm.cell_dofs)) == dm.n_dofs

    def test_rejects_degree(self, square4):
        with pytest.raises(ValueError):
            DofMap(square4, 3)


class TestProjection:
    def test_constant_exact(self, dm_p1):
        f = l2_project(lambda x, y: np.ones_like(x), dm_p1)
        assert np.allclose(f.coeffs, 1.0, atol=1e-13)

    def test_linear_exact_p1(self, dm_p1, rng):
        f = l2_project(lambda x, y: 2 * x - 3 * y + 0.5, dm_p1)
        nodes = dm_p1.node_coords()
        expect = 2 * nodes[..., 0] - 3 * nodes[..., 1] + 0.5
        assert np.allclose(f.cell_coeffs(), expect, atol=1e-12)

    def test_sine_rate_two(self):
        # oracle: run the projector at two resolutions, ratio ~ 4 (rate 2)
        errs = []
        for n in (8, 16):
            dm = DofMap(build_structured("unit-square", n), 1)
            f = l2_project(lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y), dm)
            rule = cell_quadrature(dm.overkill_degree())
            vals, _ = eval_basis(1, rule.points)
            xq = dm.physical_points(rule.points)
            fq = np.einsum("lq,cl->cq", vals, f.cell_coeffs())
            ue = np.sin(np.pi * xq[..., 0]) * np.sin(np.pi * xq[..., 1])
            errs.append(np.sqrt(np.einsum(
                "c,q,cq->", dm.det, rule.weights, (fq - ue) ** 2)))
        ratio = errs[0] / errs[1]
        assert 3.6 < ratio < 4.4

    def test_idempotent(self, dm_p2, rng):
        fld = DgField(dm_p2, rng.standard_normal(dm_p2.n_dofs))

        def point_eval(x, y):
            # evaluate the field at physical points assuming the caller asks
            # cell-by-cell (true for l2_project's quadrature layout)
            rule = cell_quadrature(dm_p2.overkill_degree())
            vals, _ = eval_basis(2, rule.points)
            return np.einsum("lq,cl->cq", vals, fld.cell_coeffs())

        proj = l2_project(point_eval, dm_p2)
        assert np.allclose(proj.coeffs, fld.coeffs, atol=1e-12)

    def test_orthogonality(self, dm_p1):
        # (Pi f - f, phi_h) = 0 at quadrature accuracy
        f = lambda x, y: np.cos(2 * x) * (y + 0.3) ** 2
        qdeg = dm_p1.overkill_degree()
        fh = l2_project(f, dm_p1, quad_degree=qdeg)
        rule = cell_quadrature(qdeg)
        vals, _ = eval_basis(1, rule.points)
        xq = dm_p1.physical_points(rule.points)
        diff = np.einsum("lq,cl->cq", vals, fh.cell_coeffs()) - f(xq[..., 0], xq[..., 1])
        resid = np.einsum("c,q,cq,lq->cl", dm_p1.det, rule.weights, diff, vals)
        assert np.abs(resid).max() < 1e-13


class TestEvaluate:
    def test_constant_gradient_zero(self, dm_p1):
        fld = l2_project(lambda x, y: np.full_like(x, 2.5), dm_p1)
        v, grad = evaluate(fld, 0, [0.2, 0.3])
        assert abs(v - 2.5) < 1e-13
        assert np.allclose(grad, 0.0, atol=1e-13)

    def test_linear_gradient(self, dm_p1):
        fld = l2_project(lambda x, y: x, dm_p1)
        for cell in (0, 5, 11):
            _, grad = evaluate(fld, cell, [0.25, 0.4])
            assert np.allclose(grad, [1.0, 0.0], atol=1e-12)

    def test_quadratic_gradient_p2(self, dm_p2):
        fld = l2_project(lambda x, y: x ** 2, dm_p2)
        # at any physical point (x, y): grad = (2x, 0); pick cell 0 mid-point
        ref = np.array([0.5, 0.0])
        x_phys = dm_p2.physical_points(ref[None])[0, 0]
        v, grad = evaluate(fld, 0, ref)
        assert abs(v - x_phys[0] ** 2) < 1e-12
        assert np.allclose(grad, [2 * x_phys[0], 0.0], atol=1e-12)

    def test_out_of_range_cell(self, dm_p1):
        fld = DgField(dm_p1, np.zeros(dm_p1.n_dofs))
        with pytest.raises(IndexError):
            evaluate(fld, dm_p1.mesh.n_cells, [0.1, 0.1])

    def test_field_validation(self, dm_p1):
        with pytest.raises(ValueError):
            DgField(dm_p1, np.zeros(3))
        bad = np.zeros(dm_p1.n_dofs)
        bad[0] = np.nan
        with pytest.raises(ValueError):
            DgField(dm_p1, bad)
