"""Conforming 2D triangle meshes: construction, geometry queries, and
newest-vertex bisection refinement.

Cells are stored peak-first: the refinement edge of cell ``(a, b, c)`` is
``(b, c)``, the edge opposite the first vertex.  Bisection inserts the
midpoint ``m`` of ``(b, c)`` and produces the children ``(m, a, b)`` and
``(m, c, a)``; both are positively oriented and carry the newest vertex
first, so the convention is self-maintaining.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "Mesh",
    "MeshError",
    "build_structured",
    "refine",
    "geometry",
    "min_angle",
    "write_mesh_text",
    "read_mesh_text",
    "write_vtk",
]

DOMAINS = ("unit-square", "l-shape", "unit-interval-product")


class MeshError(ValueError):
    """Invalid mesh topology or geometry."""


class Mesh:
    """Immutable conforming triangulation.

    Attributes
    ----------
    vertices : (nv, 2) float array
    cells : (nc, 3) int array, positively oriented, refinement edge = (v1, v2)
    generation : (nc,) int array, bisection depth per cell
    edges : (ne, 2) int array of unique vertex pairs (sorted)
    edge_cells : (ne, 2) int array; incident cells, lower index first,
        -1 in the second slot for boundary edges
    edge_is_boundary : (ne,) bool
    normals : (ne, 2) unit normals, outward from ``edge_cells[:, 0]``
    cell_edges : (nc, 3) edge ids; local edge i is opposite local vertex i
    h_cell, areas, h_edge : geometry arrays
    """

    def __init__(self, vertices, cells, generation=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.cells = np.ascontiguousarray(cells, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be (nv, 2)")
        if self.cells.ndim != 2 or self.cells.shape[1] != 3:
            raise MeshError("cells must be (nc, 3)")
        if generation is None:
            generation = np.zeros(len(self.cells), dtype=np.int64)
        self.generation = np.ascontiguousarray(generation, dtype=np.int64)
        self._build_geometry()
        self._build_edges()
        for arr in (self.vertices, self.cells, self.generation, self.edges,
                    self.edge_cells, self.edge_is_boundary, self.normals,
                    self.cell_edges, self.h_cell, self.areas, self.h_edge):
            arr.setflags(write=False)
        self._cache = {}

    # -- sizes -----------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    def __repr__(self):
        return (f"Mesh({self.n_vertices} vertices, {self.n_cells} cells, "
                f"{self.n_edges} edges)")

    # -- construction helpers ---------------------------------------------
    def _build_geometry(self):
        p = self.vertices[self.cells]  # (nc, 3, 2)
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if np.any(signed <= 0):
            bad = np.nonzero(signed <= 0)[0][:5]
            raise MeshError(f"cells not positively oriented: {bad.tolist()}")
        self.areas = signed
        sides = np.stack([
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
        ], axis=1)
        self.h_cell = sides.max(axis=1)

    def _build_edges(self):
        c = self.cells
        # local edge i is opposite local vertex i
        pairs = np.stack([c[:, [1, 2]], c[:, [2, 0]], c[:, [0, 1]]], axis=1)
        key = np.sort(pairs.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(key, axis=0, return_inverse=True)
        ne = len(edges)
        self.edges = edges
        self.cell_edges = inverse.reshape(-1, 3).astype(np.int64)
        counts = np.bincount(inverse, minlength=ne)
        if counts.max() > 2:
            raise MeshError("edge shared by more than two cells")
        cell_of_entry = np.repeat(np.arange(self.n_cells, dtype=np.int64), 3)
        lo = np.full(ne, np.iinfo(np.int64).max, dtype=np.int64)
        hi = np.full(ne, -1, dtype=np.int64)
        np.minimum.at(lo, inverse, cell_of_entry)
        np.maximum.at(hi, inverse, cell_of_entry)
        hi[counts == 1] = -1
        self.edge_cells = np.stack([lo, hi], axis=1)
        self.edge_is_boundary = counts == 1
        p0 = self.vertices[edges[:, 0]]
        p1 = self.vertices[edges[:, 1]]
        tangent = p1 - p0
        self.h_edge = np.linalg.norm(tangent, axis=1)
        if np.any(self.h_edge <= 0):
            raise MeshError("degenerate edge")
        normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)
        normal /= self.h_edge[:, None]
        centroid0 = self.vertices[self.cells[lo]].mean(axis=1)
        mid = 0.5 * (p0 + p1)
        flip = np.einsum("ij,ij->i", normal, mid - centroid0) < 0
        normal[flip] *= -1.0
        self.normals = normal

    # -- queries -----------------------------------------------------------
    def cell_centroids(self):
        return self.vertices[self.cells].mean(axis=1)

    def refinement_edges(self):
        """Edge id of each cell's refinement edge (the edge opposite v0)."""
        return self.cell_edges[:, 0]


def min_angle(mesh):
    """Smallest interior angle over all cells, in degrees."""
    p = mesh.vertices[mesh.cells]
    angles = []
    for i in range(3):
        a = p[:, (i + 1) % 3] - p[:, i]
        b = p[:, (i + 2) % 3] - p[:, i]
        cosang = np.einsum("ij,ij->i", a, b) / (
            np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
    return float(np.min(angles))


def geometry(mesh):
    """Per-entity sizes: cell diameters/areas, edge lengths/normals."""
    return {
        "h_cell": mesh.h_cell,
        "area": mesh.areas,
        "h_edge": mesh.h_edge,
        "normal": mesh.normals,
    }


def _tag_longest_edge(vertices, cells):
    """Rotate each cell so its longest edge is the refinement edge (v1, v2)."""
    cells = np.asarray(cells, dtype=np.int64)
    p = np.asarray(vertices, dtype=float)[cells]
    sides = np.stack([
        np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
        np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
    ], axis=1)
    longest = sides.argmax(axis=1)
    out = cells.copy()
    for shift in (1, 2):
        rows = longest == shift
        out[rows] = np.roll(cells[rows], -shift, axis=1)
    return out


def build_structured(domain, n):
    """Structured triangulation of a reference domain.

    ``unit-square`` (and its alias ``unit-interval-product``) is (0,1)^2 with
    n subdivisions per side; ``l-shape`` is (-1,1)^2 minus the quadrant
    (0,1)^2 and needs even n so the cut lands on grid lines.  Each square is
    split along the diagonal, which is also the longest edge, so newest-vertex
    bisection starts from a compatible tagging.
    """
    if domain not in DOMAINS:
        raise ValueError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    if n < 1:
        raise ValueError("need at least one subdivision per side")
    if domain == "l-shape":
        if n % 2:
            raise ValueError("l-shape needs even n to align with the cut corner")
        lo, hi = -1.0, 1.0
    else:
        lo, hi = 0.0, 1.0
    coords = np.linspace(lo, hi, n + 1)
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    vertices = np.stack([xx.ravel(), yy.ravel()], axis=1)

    def vid(i, j):
        return i * (n + 1) + j

    cells = []
    h = (hi - lo) / n
    for i in range(n):
        for j in range(n):
            if domain == "l-shape":
                cx = lo + (i + 0.5) * h
                cy = lo + (j + 0.5) * h
                if cx > 0 and cy > 0:
                    continue
            v00 = vid(i, j)
            v10 = vid(i + 1, j)
            v01 = vid(i, j + 1)
            v11 = vid(i + 1, j + 1)
            # peak at the right-angle vertex; refinement edge = diagonal
            cells.append((v10, v11, v00))
            cells.append((v01, v00, v11))
    cells = np.asarray(cells, dtype=np.int64)
    used = np.unique(cells)
    if len(used) != len(vertices):
        remap = -np.ones(len(vertices), dtype=np.int64)
        remap[used] = np.arange(len(used))
        vertices = vertices[used]
        cells = remap[cells]
    return Mesh(vertices, cells)


def refine(mesh, marked):
    """Newest-vertex bisection of the marked cells with conforming closure.

    Returns ``(new_mesh, parent_children)`` where ``parent_children[c]`` lists
    the ids of c's cells in the new mesh (a single id if c was untouched).
    Every marked cell is bisected at least once; closure bisections keep the
    mesh conforming.  An empty marked set returns an identical copy.
    """
    marked = np.unique(np.asarray(list(marked), dtype=np.int64)) if len(marked) else \
        np.empty(0, dtype=np.int64)
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.n_cells):
        raise ValueError("marked cell id out of range")
    if marked.size == 0:
        new = Mesh(mesh.vertices.copy(), mesh.cells.copy(), mesh.generation.copy())
        return new, [[i] for i in range(mesh.n_cells)]

    ce = mesh.cell_edges
    mark_edge = np.zeros(mesh.n_edges, dtype=bool)
    mark_edge[ce[marked, 0]] = True
    # closure: a cell with any marked edge must have its refinement edge marked
    while True:
        need = mark_edge[ce].any(axis=1) & ~mark_edge[ce[:, 0]]
        if not need.any():
            break
        mark_edge[ce[need, 0]] = True

    n_old = mesh.n_vertices
    split = np.nonzero(mark_edge)[0]
    mid_id = np.full(mesh.n_edges, -1, dtype=np.int64)
    mid_id[split] = n_old + np.arange(split.size)
    midpoints = 0.5 * (mesh.vertices[mesh.edges[split, 0]] +
                       mesh.vertices[mesh.edges[split, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])

    new_cells = []
    new_gen = []
    parent_children = []
    cells = mesh.cells
    gen = mesh.generation
    m = mark_edge[ce]  # (nc, 3) marked status of local edges
    for c in range(mesh.n_cells):
        v0, v1, v2 = cells[c]
        if not m[c, 0]:
            parent_children.append([len(new_cells)])
            new_cells.append((v0, v1, v2))
            new_gen.append(gen[c])
            continue
        ids = []
        m0 = mid_id[ce[c, 0]]
        g1 = gen[c] + 1
        # first bisection: children (m0, v0, v1) and (m0, v2, v0)
        if m[c, 2]:  # child A's refinement edge (v0, v1) is also split
            m2 = mid_id[ce[c, 2]]
            ids.append(len(new_cells)); new_cells.append((m2, m0, v0)); new_gen.append(g1 + 1)
            ids.append(len(new_cells)); new_cells.append((m2, v1, m0)); new_gen.append(g1 + 1)
        else:
            ids.append(len(new_cells)); new_cells.append((m0, v0, v1)); new_gen.append(g1)
        if m[c, 1]:  # child B's refinement edge (v2, v0) is also split
            m1 = mid_id[ce[c, 1]]
            ids.append(len(new_cells)); new_cells.append((m1, m0, v2)); new_gen.append(g1 + 1)
            ids.append(len(new_cells)); new_cells.append((m1, v0, m0)); new_gen.append(g1 + 1)
        else:
            ids.append(len(new_cells)); new_cells.append((m0, v2, v0)); new_gen.append(g1)
        parent_children.append(ids)

    new = Mesh(vertices, np.asarray(new_cells, dtype=np.int64),
               np.asarray(new_gen, dtype=np.int64))
    return new, parent_children


# -- text / VTK interfaces --------------------------------------------------

def write_mesh_text(path, mesh):
    """Plain text format: line 'nv nc', nv lines 'x y', nc lines 'i j k'."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_cells}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for a, b, c in mesh.cells:
            fh.write(f"{a} {b} {c}\n")


def read_mesh_text(path):
    with open(path) as fh:
        tokens = fh.read().split()
    nv, nc = int(tokens[0]), int(tokens[1])
    data = np.asarray(tokens[2:2 + 2 * nv], dtype=float).reshape(nv, 2)
    cells = np.asarray(tokens[2 + 2 * nv:2 + 2 * nv + 3 * nc],
                       dtype=np.int64).reshape(nc, 3)
    # re-establish orientation and longest-edge tagging
    p = data[cells]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    flip = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    cells[flip] = cells[flip][:, [0, 2, 1]]
    cells = _tag_longest_edge(data, cells)
    return Mesh(data, cells)


def write_vtk(path, mesh, cell_data=None, point_data=None, title="gbhdg"):
    """Legacy ASCII VTK export (UNSTRUCTURED_GRID, triangles = cell type 5)."""
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_vertices} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{x:.16g} {y:.16g} 0")
    lines.append(f"CELLS {mesh.n_cells} {4 * mesh.n_cells}")
    for a, b, c in mesh.cells:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines.extend(["5"] * mesh.n_cells)
    if cell_data:
        lines.append(f"CELL_DATA {mesh.n_cells}")
        for name, values in cell_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (mesh.n_cells,):
                raise ValueError(f"cell data {name!r} has wrong length")
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.16g}" for v in values)
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_vertices}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (mesh.n_vertices,):
                raise ValueError(f"point data {name!r} has wrong length")
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.16g}" for v in values)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
