"""
Iso-surface extraction and mapping back to world units.

Extraction runs scikit-image's marching cubes with linear edge
interpolation. Lattice values exactly at the iso level count as above it.
Triangles are wound so normals point toward increasing field values
(outward under the negative-inside convention); degenerate triangles are
dropped.

Public API:
- IsoMesh (mesh + iso level, resolution, model id, bounds)
- marching_cubes(grid, iso=0.0, model_id="") -> IsoMesh
- denormalize_mesh(m, t) -> TriMesh
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from skimage import measure

from src.reconstruct.grid import ScalarGrid
from src.sdfdata.mesh import TriMesh
from src.sdfdata.sampling import NormalizationTransform


@dataclass(frozen=True, eq=False)
class IsoMesh:
    mesh: TriMesh
    iso: float
    resolution: Tuple[int, int, int]
    lo: np.ndarray
    hi: np.ndarray
    model_id: str = ""

    @property
    def is_empty(self) -> bool:
        return self.mesh.is_empty

    def provenance(self) -> dict:
        return {
            "iso": self.iso,
            "resolution": list(self.resolution),
            "bounds": [self.lo.tolist(), self.hi.tolist()],
            "model_id": self.model_id,
        }


def _orient(vertices: np.ndarray, faces: np.ndarray, grid: ScalarGrid) -> np.ndarray:
    """Flip every face if most face normals oppose the field gradient."""
    grads = np.gradient(grid.values, *grid.spacing)
    tri = vertices[faces]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    cell = np.rint((tri.mean(axis=1) - grid.lo) / grid.spacing).astype(np.int64)
    cell = np.clip(cell, 0, np.array(grid.values.shape) - 1)
    g = np.stack([grads[a][cell[:, 0], cell[:, 1], cell[:, 2]] for a in range(3)], axis=1)
    agree = np.sum(np.sign((normals * g).sum(axis=1)))
    return faces if agree >= 0 else faces[:, ::-1].copy()


def marching_cubes(grid: ScalarGrid, iso: float = 0.0, model_id: str = "") -> IsoMesh:
    values = np.where(grid.values == iso, np.nextafter(iso, np.inf), grid.values)
    empty = IsoMesh(TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)),
                    iso, grid.resolution, grid.lo, grid.hi, model_id)
    if values.min() >= iso or values.max() <= iso:
        return empty

    verts, faces, _, _ = measure.marching_cubes(values, level=iso, spacing=tuple(grid.spacing),
                                                allow_degenerate=False)
    if len(faces) == 0:
        return empty
    verts = verts.astype(np.float64) + grid.lo
    faces = _orient(verts, faces.astype(np.int64), grid)
    return IsoMesh(TriMesh(verts, faces), iso, grid.resolution, grid.lo, grid.hi, model_id)


def denormalize_mesh(m: Union[IsoMesh, TriMesh], t: NormalizationTransform) -> TriMesh:
    mesh = m.mesh if isinstance(m, IsoMesh) else m
    return mesh.with_vertices(t.invert(mesh.vertices))
