"""Sampling of spline fields on tensor-product quad/hex meshes for output."""
from dataclasses import dataclass

import numpy as np

from ..fem import FeMesh, make_fe_mesh_from_patch
from ..geometry import basis_many


@dataclass(frozen=True, eq=False)
class LinearizedField:
    """Sample mesh plus per-vertex values, (n_vertices,) or (n_vertices, c)."""

    mesh: FeMesh
    params: np.ndarray
    values: np.ndarray

    @property
    def is_vector(self):
        return self.values.ndim == 2

    def warped_vertices(self, factor):
        if not self.is_vector:
            raise ValueError("only vector fields can warp the geometry")
        verts = self.mesh.vertices
        return verts + factor * self.values[:, :verts.shape[1]]


def linearize_field(patch, dofs, samples_per_axis) -> LinearizedField:
    samples = np.broadcast_to(np.asarray(samples_per_axis, dtype=np.int64), (patch.dim,))
    if samples.min() < 2:
        raise ValueError(f"need at least 2 samples per axis, got {samples.tolist()}")
    dofs = np.asarray(dofs, dtype=np.float64)
    if dofs.shape[0] != patch.n_basis:
        raise ValueError(f"expected {patch.n_basis} DOF rows, got {dofs.shape[0]}")
    mesh = make_fe_mesh_from_patch(patch, samples - 1)
    grids = np.meshgrid(*mesh.param_axes, indexing="ij")
    params = np.stack([g.transpose(tuple(range(patch.dim))[::-1]).ravel() for g in grids], axis=1)
    active, values, _ = basis_many(patch, params)
    vals = np.einsum("ma,ma...->m...", values, dofs[active])
    return LinearizedField(mesh, params, vals)
