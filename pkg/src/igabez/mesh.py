"""Structured quad/hex vertex meshes.

Both the topological Bezier mesh and the FE baseline mesh are tensor-product
grids of vertices, so they share this representation. Cell ``c = c0 + m0 *
(c1 + m1 * c2)`` and vertex ``v = i0 + (m0 + 1) * (i1 + ...)`` both run with
axis 0 fastest. Cells use VTK corner ordering. The local facet ``2 * d + s``
of a cell is its side ``s`` (0: low, 1: high) along axis ``d``.
"""
from dataclasses import dataclass, field

import numpy as np

VTK_LINE = 3
VTK_QUAD = 9
VTK_HEXAHEDRON = 12

# Corner offsets (i0, i1[, i2]) in VTK order.
_CORNERS = {
    1: np.array([[0], [1]]),
    2: np.array([[0, 0], [1, 0], [1, 1], [0, 1]]),
    3: np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                 [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]),
}


def _facet_corners(dim):
    """Local corner numbers of each facet."""
    corners = _CORNERS[dim]
    out = []
    for d in range(dim):
        for s in (0, 1):
            sel = [i for i, c in enumerate(corners) if c[d] == s]
            out.append(sel)
    return np.array(out)


@dataclass(frozen=True, eq=False)
class GridMesh:
    vertices: np.ndarray
    cells: np.ndarray
    cell_shape: tuple
    vertex_sets: dict = field(default_factory=dict)

    @property
    def dim(self):
        return len(self.cell_shape)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def vertex_shape(self):
        return tuple(m + 1 for m in self.cell_shape)

    @property
    def cell_type(self):
        return {1: VTK_LINE, 2: VTK_QUAD, 3: VTK_HEXAHEDRON}[self.dim]

    def cell_facets(self):
        """Vertex ids per (cell, local facet), shape (n_cells, 2 * dim, 2 ** (dim - 1))."""
        return self.cells[:, _facet_corners(self.dim)]

    def boundary_facets(self):
        """Boolean mask (n_cells, 2 * dim): facet lies on the mesh boundary.

        A facet is on the boundary when no other cell shares it.
        """
        facets = np.sort(self.cell_facets(), axis=2)
        flat = facets.reshape(-1, facets.shape[2])
        _, inverse, counts = np.unique(flat, axis=0, return_inverse=True, return_counts=True)
        return (counts[inverse.ravel()] == 1).reshape(facets.shape[:2])

    def cell_grid_index(self, cells):
        """Per-axis grid indices of cells, shape (len(cells), dim)."""
        return np.stack(np.unravel_index(np.asarray(cells), self.cell_shape[::-1])[::-1], axis=1)


def structured_mesh(vertices, cell_shape, cls=GridMesh, **kwargs):
    """Connectivity and ``xi<d><s>`` side sets for a tensor-product vertex grid."""
    cell_shape = tuple(int(m) for m in cell_shape)
    dim = len(cell_shape)
    vshape = tuple(m + 1 for m in cell_shape)
    vertices = np.asarray(vertices, dtype=np.float64)
    if len(vertices) != int(np.prod(vshape)):
        raise ValueError(f"expected {int(np.prod(vshape))} vertices, got {len(vertices)}")
    cidx = np.stack(np.unravel_index(np.arange(int(np.prod(cell_shape))), cell_shape[::-1])[::-1],
                    axis=1)
    cells = np.zeros((len(cidx), 2**dim), dtype=np.int64)
    for k, off in enumerate(_CORNERS[dim]):
        ijk = cidx + off
        v = np.zeros(len(cidx), dtype=np.int64)
        stride = 1
        for d in range(dim):
            v += stride * ijk[:, d]
            stride *= vshape[d]
        cells[:, k] = v
    vidx = np.stack(np.unravel_index(np.arange(len(vertices)), vshape[::-1])[::-1], axis=1)
    sets = {}
    for d in range(dim):
        sets[f"xi{d}0"] = np.nonzero(vidx[:, d] == 0)[0]
        sets[f"xi{d}1"] = np.nonzero(vidx[:, d] == vshape[d] - 1)[0]
    return cls(vertices=vertices, cells=cells, cell_shape=cell_shape, vertex_sets=sets, **kwargs)
