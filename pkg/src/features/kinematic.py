"""
Kinematic feature encodings for query points.

Hand feature (51):   [x, e_h1 .. e_h16],  e_hi = G_i^-1 x (point in joint i's frame)
Object feature (72): [x, x_oc, e_o1 .. e_o21, x_ow]
                     x_oc = x - object center, e_oi = x - joint i, x_ow = G_wrist^-1 x

Both functions accept a single (3,) point or an (N, 3) batch and return (51,)/(N, 51)
or (72,)/(N, 72) accordingly.

Feature modes slice these down to the ablation variants:
  k1  -> [x]            ko1 -> [x]
  k2  -> [x, e_h1]      ko2 -> [x, x_oc]
  k3  -> all 51         ko3 -> all 72

Public API:
- hand_kinematic_feature(x, globals_) / object_kinematic_feature(x, obj_center, joints, wrist_global)
- KinematicContext (joints, globals, object center) + .normalized(offset, scale)
- kinematic_features(points, ctx, mode)
- FEATURE_DIMS, HAND_MODES, OBJECT_MODES
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from src.errors import ConfigError
from src.geomcore.transforms import RigidTransform

HAND_FEATURE_DIM = 51
OBJECT_FEATURE_DIM = 72
HAND_MODES = ("k1", "k2", "k3")
OBJECT_MODES = ("ko1", "ko2", "ko3")
FEATURE_DIMS = {"k1": 3, "k2": 6, "k3": 51, "ko1": 3, "ko2": 6, "ko3": 72}


def _stack(globals_: Sequence[RigidTransform]):
    r = np.stack([g.r for g in globals_])
    t = np.stack([g.t for g in globals_])
    return r, t


def _canonical(x: np.ndarray, r: np.ndarray, t: np.ndarray) -> np.ndarray:
    """(N, 3) points into each of the J frames -> (N, J, 3); R^T (x - t)."""
    return np.einsum("jba,njb->nja", r, x[:, None, :] - t[None, :, :])


def hand_kinematic_feature(x, globals_: Sequence[RigidTransform]) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(-1, 3)
    r, t = _stack(globals_)
    local = _canonical(pts, r, t).reshape(len(pts), -1)
    out = np.concatenate([pts, local], axis=1)
    return out[0] if single else out


def object_kinematic_feature(x, obj_center, joints, wrist_global: RigidTransform) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(-1, 3)
    joints = np.asarray(joints, dtype=np.float64).reshape(-1, 3)
    x_oc = pts - np.asarray(obj_center, dtype=np.float64).reshape(1, 3)
    e_o = (pts[:, None, :] - joints[None, :, :]).reshape(len(pts), -1)
    x_ow = (pts - wrist_global.t) @ wrist_global.r
    out = np.concatenate([pts, x_oc, e_o, x_ow], axis=1)
    return out[0] if single else out


@dataclass(frozen=True, eq=False)
class KinematicContext:
    """Per-shape pose information the features are computed from."""

    joints: np.ndarray
    globals_: List[RigidTransform]
    obj_center: np.ndarray

    def normalized(self, offset, scale: float) -> "KinematicContext":
        """Express the context in cube coordinates p' = (p - offset) * scale."""
        offset = np.asarray(offset, dtype=np.float64)
        return KinematicContext(
            joints=(self.joints - offset) * scale,
            globals_=[RigidTransform(g.r, (g.t - offset) * scale) for g in self.globals_],
            obj_center=(np.asarray(self.obj_center) - offset) * scale,
        )


def kinematic_features(points, ctx: KinematicContext, mode: str) -> np.ndarray:
    """(N, 3) points -> (N, FEATURE_DIMS[mode]) features for the chosen ablation mode."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if mode == "k1" or mode == "ko1":
        return pts.copy()
    if mode == "k2":
        return hand_kinematic_feature(pts, ctx.globals_[:1])
    if mode == "k3":
        return hand_kinematic_feature(pts, ctx.globals_)
    if mode == "ko2":
        return np.concatenate([pts, pts - ctx.obj_center], axis=1)
    if mode == "ko3":
        return object_kinematic_feature(pts, ctx.obj_center, ctx.joints, ctx.globals_[0])
    raise ConfigError(f"unknown feature mode '{mode}' (expected one of {sorted(FEATURE_DIMS)})", field="mode")
