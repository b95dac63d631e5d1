"""
Hand-object interaction metrics, in mesh units.

- penetration depth: deepest hand vertex inside the object, max(0, -sd_obj(v))
- contact: penetration depth > 0
- intersection volume: voxel centers (pitch `voxel`) over the overlap of the two
  bounding boxes that lie inside both meshes, times voxel^3
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.errors import ConfigError
from src.sdfdata.distance import MeshQuery
from src.sdfdata.mesh import TriMesh


@dataclass(frozen=True)
class InteractionResult:
    contact: bool
    penetration_depth: float
    intersection_volume: float
    sign_reliable: bool


def voxel_centers(lo: np.ndarray, hi: np.ndarray, voxel: float) -> np.ndarray:
    counts = np.maximum(np.ceil((hi - lo) / voxel - 1e-9).astype(np.int64), 1)
    axes = [lo[a] + (np.arange(counts[a]) + 0.5) * voxel for a in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)


def interaction_metrics(hand: TriMesh, obj: TriMesh, voxel: float) -> InteractionResult:
    if voxel <= 0:
        raise ConfigError(f"voxel pitch must be positive, got {voxel}", field="voxel")
    obj_query = MeshQuery(obj)
    depth = float(np.max(np.maximum(0.0, -obj_query.signed(hand.vertices)))) if len(hand.vertices) else 0.0

    h_lo, h_hi = hand.bounds()
    o_lo, o_hi = obj.bounds()
    lo, hi = np.maximum(h_lo, o_lo), np.minimum(h_hi, o_hi)
    volume = 0.0
    if np.all(hi > lo):
        centers = voxel_centers(lo, hi, voxel)
        inside = obj_query.inside(centers)
        if np.any(inside):
            inside[inside] = MeshQuery(hand).inside(centers[inside])
        volume = float(np.count_nonzero(inside)) * voxel ** 3

    return InteractionResult(depth > 0.0, depth, volume, hand.watertight and obj.watertight)
