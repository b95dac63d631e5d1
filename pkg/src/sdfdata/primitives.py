"""
Closed primitive meshes with outward-facing (counter-clockwise) triangles.

- icosphere(radius, subdivisions=4): 10 * 4^s + 2 vertices (2562 at s=4)
- box_mesh(lo, hi): 8 vertices, 12 triangles
- cylinder_mesh(radius, height, segments): capped, axis along z
"""

from __future__ import annotations

from typing import Dict, Tuple

import numpy as np

from src.errors import ConfigError
from src.sdfdata.mesh import TriMesh

_GOLDEN = (1.0 + 5.0 ** 0.5) / 2.0

_ICOSAHEDRON_VERTICES = [
    (-1, _GOLDEN, 0), (1, _GOLDEN, 0), (-1, -_GOLDEN, 0), (1, -_GOLDEN, 0),
    (0, -1, _GOLDEN), (0, 1, _GOLDEN), (0, -1, -_GOLDEN), (0, 1, -_GOLDEN),
    (_GOLDEN, 0, -1), (_GOLDEN, 0, 1), (-_GOLDEN, 0, -1), (-_GOLDEN, 0, 1),
]

_ICOSAHEDRON_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]

# corner index = x + 2y + 4z over {lo, hi}
_BOX_FACES = [
    (0, 2, 1), (1, 2, 3),   # -z
    (4, 5, 6), (5, 7, 6),   # +z
    (0, 1, 4), (1, 5, 4),   # -y
    (2, 6, 3), (3, 6, 7),   # +y
    (0, 4, 2), (2, 4, 6),   # -x
    (1, 3, 5), (3, 7, 5),   # +x
]


def icosphere(radius: float = 1.0, subdivisions: int = 4, center=(0.0, 0.0, 0.0)) -> TriMesh:
    if radius <= 0:
        raise ConfigError(f"icosphere radius must be positive, got {radius}", field="radius")
    verts = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in _ICOSAHEDRON_VERTICES]
    faces = list(_ICOSAHEDRON_FACES)

    for _ in range(subdivisions):
        cache: Dict[Tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined

    v = np.stack(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriMesh(v, np.array(faces))


def box_mesh(lo=(-0.5, -0.5, -0.5), hi=(0.5, 0.5, 0.5)) -> TriMesh:
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(hi <= lo):
        raise ConfigError("box needs hi > lo on every axis", field="hi")
    corners = np.array([[hi[0] if i & 1 else lo[0], hi[1] if i & 2 else lo[1], hi[2] if i & 4 else lo[2]]
                        for i in range(8)])
    return TriMesh(corners, np.array(_BOX_FACES))


def cylinder_mesh(radius: float = 0.5, height: float = 1.0, segments: int = 48,
                  center=(0.0, 0.0, 0.0)) -> TriMesh:
    if radius <= 0 or height <= 0 or segments < 3:
        raise ConfigError("cylinder needs radius > 0, height > 0 and at least 3 segments", field="segments")
    ang = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    bottom = np.column_stack([ring, np.full(segments, -height / 2)])
    top = np.column_stack([ring, np.full(segments, height / 2)])
    caps = np.array([[0.0, 0.0, -height / 2], [0.0, 0.0, height / 2]])
    v = np.concatenate([bottom, top, caps]) + np.asarray(center, dtype=np.float64)

    nb, nt = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [(i, j, segments + j), (i, segments + j, segments + i)]
        faces.append((nb, j, i))
        faces.append((nt, segments + i, segments + j))
    return TriMesh(v, np.array(faces))
