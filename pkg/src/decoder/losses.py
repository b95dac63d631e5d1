"""
Training objectives.

First stage (pose):   L_hp + L_ord
Second stage (shape): L_shape = w_op * L_op + w_hsdf * L_hsdf + w_osdf * L_osdf

L_ord counts, for every virtual view n and joint pair i < j, the predicted
separation |(p_i - p_j) . n| whenever the predicted depth order disagrees
with the ground-truth one.

Public API:
- sample_virtual_views(n, seed) -> (n, 3) unit vectors
- hand_pose_losses(pred, gt, views, reduction) -> (l_hp, l_ord)
- object_center_loss(pred, gt) -> float
- sdf_losses(pred_h, gt_h, pred_o, gt_o, l_op, weights) -> (l_hsdf, l_osdf, l_shape)
- pose_stage_loss(...) / shape_stage_loss(...)
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from src.decoder import config
from src.errors import ConfigError, DimensionMismatchError
from src.kinematics.skeleton import as_joint_set


def sample_virtual_views(n: int = config.ORDINAL_VIEWS, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def hand_pose_losses(pred, gt, views, reduction: str = config.ORDINAL_REDUCTION) -> Tuple[float, float]:
    pred = as_joint_set(pred)
    gt = as_joint_set(gt)
    views = np.asarray(views, dtype=np.float64).reshape(-1, 3)
    if reduction not in ("sum", "mean"):
        raise ConfigError(f"ordinal reduction must be 'sum' or 'mean', got '{reduction}'", field="reduction")

    l_hp = float(np.mean(np.sum((pred - gt) ** 2, axis=1)))

    iu, ju = np.triu_indices(len(pred), k=1)
    dp = (pred[iu] - pred[ju]) @ views.T      # (pairs, views)
    dg = (gt[iu] - gt[ju]) @ views.T
    violated = np.sign(dp) != np.sign(dg)
    per_view = np.sum(np.where(violated, np.abs(dp), 0.0), axis=0)
    l_ord = float(per_view.sum() if reduction == "sum" else per_view.mean()) if len(views) else 0.0
    return l_hp, l_ord


def object_center_loss(pred, gt) -> float:
    d = np.asarray(pred, dtype=np.float64).reshape(3) - np.asarray(gt, dtype=np.float64).reshape(3)
    return float(d @ d)


def _l1(pred, gt, name: str) -> float:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1)
    if len(pred) != len(gt):
        raise DimensionMismatchError(f"{name}: {len(pred)} predictions for {len(gt)} targets", field=name)
    if len(pred) == 0:
        raise DimensionMismatchError(f"{name}: empty batch", field=name)
    return float(np.mean(np.abs(pred - gt)))


def sdf_losses(pred_h, gt_h, pred_o, gt_o, l_op: float = 0.0,
               weights: Sequence[float] = config.LOSS_WEIGHTS) -> Tuple[float, float, float]:
    w_op, w_h, w_o = weights
    l_hsdf = _l1(pred_h, gt_h, "sdf_hand")
    l_osdf = _l1(pred_o, gt_o, "sdf_obj")
    return l_hsdf, l_osdf, w_op * l_op + w_h * l_hsdf + w_o * l_osdf


def pose_stage_loss(pred_joints, gt_joints, views, reduction: str = config.ORDINAL_REDUCTION) -> float:
    l_hp, l_ord = hand_pose_losses(pred_joints, gt_joints, views, reduction)
    return l_hp + l_ord


def shape_stage_loss(pred_center, gt_center, pred_h, gt_h, pred_o, gt_o,
                     weights: Sequence[float] = config.LOSS_WEIGHTS) -> float:
    l_op = object_center_loss(pred_center, gt_center)
    return sdf_losses(pred_h, gt_h, pred_o, gt_o, l_op, weights)[2]
