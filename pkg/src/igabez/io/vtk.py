"""Legacy ASCII VTK unstructured grids.

Written layout (all reals with 9 significant digits, '\\n' line endings)::

    # vtk DataFile Version 3.0
    <title>
    ASCII
    DATASET UNSTRUCTURED_GRID
    POINTS <n> double
    <x> <y> <z>                          (n lines, z = 0 for planar meshes)
    CELLS <n_cells> <n_cells + sum(cell sizes)>
    <k> <v_1> ... <v_k>                  (n_cells lines)
    CELL_TYPES <n_cells>
    <type>                               (n_cells lines; 9 quad, 12 hexahedron)
    POINT_DATA <n>                       (only if there is data)
    SCALARS <name> double 1              (1-component arrays)
    LOOKUP_TABLE default
    <value>                              (n lines)
    VECTORS <name> double                (2- or 3-component arrays, padded)
    <vx> <vy> <vz>                       (n lines)
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HEADER = "# vtk DataFile Version 3.0"


class VtkFormatError(ValueError):
    pass


def _num(v):
    return format(float(v) + 0.0, ".9g")


def _pad3(arr):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2 or not 1 <= arr.shape[1] <= 3:
        raise ValueError(f"expected (n, 1..3) coordinates, got shape {arr.shape}")
    out = np.zeros((len(arr), 3))
    out[:, :arr.shape[1]] = arr
    return out


def format_vtk(vertices, cells, cell_types, point_data=None, title="igabez output"):
    vertices = np.asarray(vertices, dtype=np.float64)
    cells = np.asarray(cells, dtype=np.int64)
    n = len(vertices)
    cell_types = np.broadcast_to(np.asarray(cell_types, dtype=np.int64), (len(cells),))
    if cells.size and (cells.min() < 0 or cells.max() >= n):
        raise ValueError("cell connectivity refers to a missing point")
    if "\n" in title or len(title) > 255:
        raise ValueError("title must be a single line of at most 255 characters")
    arrays = []
    for name, data in (point_data or {}).items():
        if not name or any(c.isspace() for c in name):
            raise ValueError(f"array name {name!r} must be non-empty without whitespace")
        data = np.asarray(data, dtype=np.float64)
        if data.shape[0] != n:
            raise ValueError(f"point data {name!r} has {data.shape[0]} rows for {n} points")
        if data.ndim == 1 or (data.ndim == 2 and data.shape[1] == 1):
            arrays.append(("SCALARS", name, data.reshape(n)))
        elif data.ndim == 2 and data.shape[1] in (2, 3):
            arrays.append(("VECTORS", name, _pad3(data)))
        else:
            raise ValueError(f"point data {name!r}: unsupported shape {data.shape}")
    lines = [HEADER, title, "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {n} double"]
    lines += [" ".join(_num(c) for c in row) for row in _pad3(vertices)]
    size = int(cells.shape[0] * (cells.shape[1] + 1)) if cells.ndim == 2 else 0
    lines.append(f"CELLS {len(cells)} {size}")
    lines += [" ".join([str(len(c))] + [str(int(v)) for v in c]) for c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += [str(int(t)) for t in cell_types]
    if arrays:
        lines.append(f"POINT_DATA {n}")
    for kind, name, data in arrays:
        if kind == "SCALARS":
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [_num(v) for v in data]
        else:
            lines.append(f"VECTORS {name} double")
            lines += [" ".join(_num(c) for c in row) for row in data]
    return "\n".join(lines) + "\n"


def write_vtk(path, mesh, point_data=None, title="igabez output", vertices=None):
    """Write ``mesh`` (any :class:`~igabez.mesh.GridMesh`) with optional point data.

    ``vertices`` overrides the mesh coordinates (used for warped output).
    """
    verts = mesh.vertices if vertices is None else vertices
    text = format_vtk(verts, mesh.cells, mesh.cell_type, point_data, title)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)
    return Path(path)


# --- reader (documented grammar above) -------------------------------------------------

@dataclass
class VtkData:
    title: str
    points: np.ndarray
    cells: list
    cell_types: np.ndarray
    point_data: dict = field(default_factory=dict)


def parse_vtk(text):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise VtkFormatError("unexpected end of file")
        pos += 1
        return lines[pos - 1]

    def keyword(expected, n_fields):
        parts = take().split()
        if not parts or parts[0] != expected or len(parts) != n_fields:
            raise VtkFormatError(f"line {pos}: expected {expected} with {n_fields - 1} fields")
        return parts

    if take() != HEADER:
        raise VtkFormatError("line 1: missing VTK header")
    title = take()
    if take() != "ASCII":
        raise VtkFormatError("line 3: only ASCII files are supported")
    if take() != "DATASET UNSTRUCTURED_GRID":
        raise VtkFormatError("line 4: expected DATASET UNSTRUCTURED_GRID")
    n = int(keyword("POINTS", 3)[1])
    pts = np.array([[float(v) for v in take().split()] for _ in range(n)]).reshape(n, 3)
    _, n_cells, size = keyword("CELLS", 3)
    cells = []
    total = 0
    for _ in range(int(n_cells)):
        row = [int(v) for v in take().split()]
        if row[0] != len(row) - 1:
            raise VtkFormatError(f"line {pos}: cell size does not match its entries")
        cells.append(row[1:])
        total += len(row)
    if total != int(size):
        raise VtkFormatError(f"CELLS size {size} does not match the {total} entries")
    keyword("CELL_TYPES", 2)
    types = np.array([int(take()) for _ in range(int(n_cells))], dtype=np.int64)
    data = {}
    if pos < len(lines):
        if int(keyword("POINT_DATA", 2)[1]) != n:
            raise VtkFormatError("POINT_DATA count differs from POINTS")
        while pos < len(lines):
            parts = take().split()
            if parts[:1] == ["SCALARS"]:
                if take() != "LOOKUP_TABLE default":
                    raise VtkFormatError(f"line {pos}: expected LOOKUP_TABLE default")
                data[parts[1]] = np.array([float(take()) for _ in range(n)])
            elif parts[:1] == ["VECTORS"]:
                data[parts[1]] = np.array([[float(v) for v in take().split()] for _ in range(n)])
            else:
                raise VtkFormatError(f"line {pos}: unexpected {' '.join(parts)!r}")
    return VtkData(title, pts, cells, types, data)


def read_vtk(path) -> VtkData:
    return parse_vtk(Path(path).read_text(encoding="ascii"))
