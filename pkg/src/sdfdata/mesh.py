"""
Indexed triangle mesh.

Zero-area triangles are dropped at construction time (the count is kept in
`dropped_degenerate`). `watertight` is the edge-manifold test: every
undirected edge is shared by exactly two triangles.

Public API:
- TriMesh(vertices, triangles) with .areas(), .face_normals(), .bounds(), .extent(),
  .triangle_corners(), .sample_points(n, rng), .with_vertices(v), .edge_count()
- merge_meshes(meshes)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from src.errors import DegenerateInputError, InputParseError
from src.sdfdata.config import DEGENERATE_AREA_TOL


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    dropped_degenerate: int = 0
    watertight: bool = False

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise InputParseError("mesh has non-finite vertex coordinates", field="vertices")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise InputParseError(f"triangle index out of range for {len(v)} vertices", field="triangles")

        dropped = 0
        if len(f):
            cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
            diag2 = float(np.sum((v.max(axis=0) - v.min(axis=0)) ** 2))
            keep = np.linalg.norm(cross, axis=1) > DEGENERATE_AREA_TOL * max(diag2, np.finfo(float).tiny)
            dropped = int(np.count_nonzero(~keep))
            f = f[keep]

        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", f)
        object.__setattr__(self, "dropped_degenerate", self.dropped_degenerate + dropped)
        object.__setattr__(self, "watertight", _is_edge_manifold(f))

    def __len__(self) -> int:
        return len(self.triangles)

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def triangle_corners(self) -> np.ndarray:
        """(M, 3, 3): corner a, b, c of every triangle."""
        return self.vertices[self.triangles]

    def areas(self) -> np.ndarray:
        t = self.triangle_corners()
        return 0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1)

    def face_normals(self) -> np.ndarray:
        t = self.triangle_corners()
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        if len(self.vertices) == 0:
            raise DegenerateInputError("mesh has no vertices", field="vertices")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def extent(self) -> float:
        lo, hi = self.bounds()
        return float(np.max(hi - lo))

    def edge_count(self) -> int:
        return len(_undirected_edges(self.triangles)[0])

    def with_vertices(self, vertices) -> "TriMesh":
        return TriMesh(vertices, self.triangles, dropped_degenerate=self.dropped_degenerate)

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Area-weighted uniform samples on the surface, (n, 3)."""
        if self.is_empty:
            raise DegenerateInputError("cannot sample an empty mesh", field="triangles")
        areas = self.areas()
        tri = rng.choice(len(areas), size=n, p=areas / areas.sum())
        r1 = np.sqrt(rng.random(n))
        r2 = rng.random(n)
        t = self.triangle_corners()[tri]
        return ((1.0 - r1)[:, None] * t[:, 0]
                + (r1 * (1.0 - r2))[:, None] * t[:, 1]
                + (r1 * r2)[:, None] * t[:, 2])


def _undirected_edges(triangles: np.ndarray):
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    return np.unique(edges, axis=0, return_counts=True)


def _is_edge_manifold(triangles: np.ndarray) -> bool:
    if len(triangles) == 0:
        return False
    _, counts = _undirected_edges(triangles)
    return bool(np.all(counts == 2))


def merge_meshes(meshes: Sequence[TriMesh]) -> TriMesh:
    vertices, triangles, base = [], [], 0
    for m in meshes:
        vertices.append(m.vertices)
        triangles.append(m.triangles + base)
        base += len(m.vertices)
    return TriMesh(np.concatenate(vertices), np.concatenate(triangles))
