import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gbhdg.mesh import (Mesh, MeshError, build_structured, geometry, min_angle,
                        read_mesh_text, refine, write_mesh_text, write_vtk)


def no_hanging_nodes(mesh):
    """Brute-force: no vertex lies strictly inside another cell's edge."""
    v = mesh.vertices
    for e in mesh.edges:
        p0, p1 = v[e[0]], v[e[1]]
        d = p1 - p0
        L2 = d @ d
        for idx in range(len(v)):
            if idx in (e[0], e[1]):
                continue
            s = np.dot(v[idx] - p0, d) / L2
            if 1e-10 < s < 1 - 1e-10:
                foot = p0 + s * d
                if np.linalg.norm(v[idx] - foot) < 1e-12:
                    return False
    return True


class TestBuildStructured:
    def test_unit_square_n1_counts(self):
        m = build_structured("unit-square", 1)
        assert m.n_vertices == 4
        assert m.n_cells == 2
        assert m.n_edges == 5
        assert int(m.edge_is_boundary.sum()) == 4

    def test_unit_square_n2_counts(self):
        m = build_structured("unit-square", 2)
        assert m.n_vertices == 9
        assert m.n_cells == 8

    def test_lshape_n2_three_quadrants(self):
        # oracle: enumerate the 2x2 grid of unit squares on (-1,1)^2 and
        # drop the one whose centroid lies in (0,1)^2
        kept = [(i, j) for i in range(2) for j in range(2)
                if not (i - 0.5 > 0 and j - 0.5 > 0)]
        m = build_structured("l-shape", 2)
        assert m.n_cells == 2 * len(kept) == 6
        assert abs(m.areas.sum() - 3.0) < 1e-12

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            build_structured("unit-square", 0)
        with pytest.raises(ValueError):
            build_structured("l-shape", 3)
        with pytest.raises(ValueError):
            build_structured("pentagon", 4)

    def test_unit_interval_product_alias(self):
        a = build_structured("unit-interval-product", 3)
        b = build_structured("unit-square", 3)
        assert np.array_equal(a.cells, b.cells)

    def test_conformity_invariants(self):
        for dom, n in [("unit-square", 3), ("l-shape", 4)]:
            m = build_structured(dom, n)
            counts = np.where(m.edge_is_boundary, 1, 2)
            recount = np.zeros(m.n_edges, dtype=int)
            for ce in m.cell_edges.ravel():
                recount[ce] += 1
            assert np.array_equal(counts, recount)
            assert np.all(m.areas > 0)
            assert no_hanging_nodes(m)
            assert min_angle(m) > 5.0


class TestGeometry:
    def test_reference_triangle_quantities(self):
        m = Mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])
        g = geometry(m)
        assert abs(g["h_cell"][0] - np.sqrt(2)) < 1e-15
        assert abs(g["area"][0] - 0.5) < 1e-15

    def test_edge_lengths_and_normals(self):
        m = build_structured("unit-square", 1)
        g = geometry(m)
        # edge (0,0)-(0,1) is the left boundary, length 1, normal +-(1,0)
        left = [i for i, e in enumerate(m.edges)
                if np.allclose(m.vertices[e], [[0, 0], [0, 1]], atol=1e-14)
                or np.allclose(m.vertices[e], [[0, 1], [0, 0]], atol=1e-14)]
        assert len(left) == 1
        i = left[0]
        assert abs(g["h_edge"][i] - 1.0) < 1e-15
        assert abs(abs(g["normal"][i][0]) - 1.0) < 1e-15
        assert abs(g["normal"][i][1]) < 1e-15
        # boundary normals point out of the domain
        for j in np.nonzero(m.edge_is_boundary)[0]:
            mid = m.vertices[m.edges[j]].mean(axis=0)
            assert g["normal"][j] @ (mid - [0.5, 0.5]) > 0
        assert np.allclose(np.linalg.norm(g["normal"], axis=1), 1.0)

    def test_max_h_on_n4(self):
        # oracle: enumerate all cells and their side lengths directly
        m = build_structured("unit-square", 4)
        p = m.vertices[m.cells]
        sides = [np.linalg.norm(p[:, a] - p[:, b], axis=1)
                 for a, b in [(0, 1), (1, 2), (2, 0)]]
        assert abs(m.h_cell.max() - np.max(sides)) < 1e-15
        assert abs(m.h_cell.max() - np.sqrt(2) / 4) < 1e-15


class TestRefine:
    def test_mark_all_two_cells(self):
        m = build_structured("unit-square", 1)
        r, pc = refine(m, [0, 1])
        assert r.n_cells == 4
        assert abs(r.areas.sum() - 1.0) < 1e-12
        assert no_hanging_nodes(r)

    def test_mark_single_cell_closure(self):
        # NVB by hand: both cells share the diagonal as refinement edge, so
        # marking cell 0 bisects the diagonal in both -> 4 conforming cells
        m = build_structured("unit-square", 1)
        r, pc = refine(m, [0])
        assert r.n_cells == 4
        assert sorted(len(c) for c in pc) == [2, 2]
        assert no_hanging_nodes(r)

    def test_empty_marks_identity(self):
        m = build_structured("unit-square", 2)
        r, pc = refine(m, [])
        assert np.array_equal(r.cells, m.cells)
        assert pc == [[i] for i in range(m.n_cells)]

    def test_out_of_range_rejected(self):
        m = build_structured("unit-square", 2)
        with pytest.raises(ValueError):
            refine(m, [99])

    def test_marked_cells_bisected_with_h_reduction(self):
        m = build_structured("unit-square", 2)
        marked = [0, 3, 5]
        r, pc = refine(m, marked)
        for c in marked:
            assert len(pc[c]) >= 2
            ratio = r.h_cell[pc[c]] / m.h_cell[c]
            assert np.all(ratio >= 0.5 - 1e-12)
            assert np.all(ratio <= 1 / np.sqrt(2) + 1e-12)

    def test_parent_children_partition_areas(self):
        m = build_structured("l-shape", 4)
        r, pc = refine(m, range(0, m.n_cells, 2))
        for parent, children in enumerate(pc):
            assert abs(m.areas[parent] - r.areas[children].sum()) < 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(min_value=0, max_value=31), max_size=12),
           st.lists(st.integers(min_value=0, max_value=200), max_size=12))
    def test_refine_twice_preserves_invariants(self, marks1, marks2):
        m = build_structured("unit-square", 4)
        r1, _ = refine(m, marks1)
        marks2 = [i % r1.n_cells for i in marks2]
        r2, pc2 = refine(r1, marks2)
        # construction already asserts positive orientation; check the rest
        assert abs(r2.areas.sum() - 1.0) < 1e-12
        assert min_angle(r2) >= 45.0 - 1e-9
        counts = np.where(r2.edge_is_boundary, 1, 2)
        recount = np.zeros(r2.n_edges, dtype=int)
        for ce in r2.cell_edges.ravel():
            recount[ce] += 1
        assert np.array_equal(counts, recount)
        for parent, children in enumerate(pc2):
            assert abs(r1.areas[parent] - r2.areas[children].sum()) < 1e-12

    def test_generation_increments(self):
        m = build_structured("unit-square", 1)
        r, pc = refine(m, [0, 1])
        assert np.all(r.generation == 1)


class TestIO:
    def test_text_roundtrip(self, tmp_path):
        m = build_structured("l-shape", 2)
        path = tmp_path / "mesh.txt"
        write_mesh_text(path, m)
        m2 = read_mesh_text(path)
        assert np.allclose(m2.vertices, m.vertices)
        assert m2.n_cells == m.n_cells
        assert abs(m2.areas.sum() - m.areas.sum()) < 1e-14

    def test_text_format_layout(self, tmp_path):
        m = build_structured("unit-square", 1)
        path = tmp_path / "mesh.txt"
        write_mesh_text(path, m)
        lines = path.read_text().strip().splitlines()
        nv, nc = map(int, lines[0].split())
        assert (nv, nc) == (4, 2)
        assert len(lines) == 1 + nv + nc

    def test_vtk_export(self, tmp_path):
        m = build_structured("unit-square", 2)
        path = tmp_path / "mesh.vtk"
        write_vtk(path, m, cell_data={"ind": np.arange(m.n_cells, dtype=float)},
                  point_data={"z": np.zeros(m.n_vertices)})
        text = path.read_text()
        assert "DATASET UNSTRUCTURED_GRID" in text
        assert f"POINTS {m.n_vertices} double" in text
        assert f"CELLS {m.n_cells} {4 * m.n_cells}" in text
        assert text.count("\n5") >= m.n_cells  # triangle cell type
        assert "SCALARS ind double 1" in text
        with pytest.raises(ValueError):
            write_vtk(path, m, cell_data={"bad": np.zeros(3)})

    def test_invalid_meshes_rejected(self):
        with pytest.raises(MeshError):
            Mesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])  # negative orientation
        with pytest.raises(MeshError):
            Mesh([[0, 0], [1, 0]], [[0, 1, 1]])
