"""
Point-set and joint scores. All functions are unit-agnostic: distances come
back in the units of their inputs (squared units for Chamfer).

Public API:
- nearest_distances(src, dst, brute=False) -> (len(src),)
- chamfer_distance(a, b, brute=False)
- f_score(pred, gt, threshold, brute=False) -> (f, precision, recall)
- joint_errors(pred, gt) -> e_h; center_error(pred, gt) -> e_o
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from src.errors import ConfigError, DegenerateInputError
from src.kinematics.skeleton import as_joint_set

BRUTE_CHUNK = 2048


def _points(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    if len(a) == 0:
        raise DegenerateInputError(f"{name}: point set is empty", field=name)
    return a


def nearest_distances(src, dst, brute: bool = False) -> np.ndarray:
    """Euclidean distance from every src point to its nearest dst point."""
    src = _points(src, "src")
    dst = _points(dst, "dst")
    if not brute:
        d, _ = cKDTree(dst).query(src, k=1)
        return d
    return np.concatenate([cdist(src[s:s + BRUTE_CHUNK], dst).min(axis=1)
                           for s in range(0, len(src), BRUTE_CHUNK)])


def chamfer_distance(a, b, brute: bool = False) -> float:
    """Mean squared nearest-neighbour distance a -> b plus b -> a."""
    d_ab = nearest_distances(a, b, brute)
    d_ba = nearest_distances(b, a, brute)
    return float(np.mean(d_ab ** 2) + np.mean(d_ba ** 2))


def f_score(pred, gt, threshold: float, brute: bool = False) -> Tuple[float, float, float]:
    """
    Args:
        pred, gt: (N, 3) and (M, 3) point sets in the same units.
        threshold: a point counts as matched when strictly closer than this.
        brute: use exhaustive distances instead of a k-d tree.

    Returns:
        (f, precision, recall); f is 0 when both are 0.
    """
    if threshold <= 0:
        raise ConfigError(f"F-score threshold must be positive, got {threshold}", field="threshold")
    precision = float(np.mean(nearest_distances(pred, gt, brute) < threshold))
    recall = float(np.mean(nearest_distances(gt, pred, brute) < threshold))
    if precision + recall == 0:
        return 0.0, precision, recall
    return 2.0 * precision * recall / (precision + recall), precision, recall


def joint_errors(pred, gt) -> float:
    """Mean wrist-relative joint error over all 21 joints."""
    pred = as_joint_set(pred)
    gt = as_joint_set(gt)
    return float(np.mean(np.linalg.norm((pred - pred[0]) - (gt - gt[0]), axis=1)))


def center_error(pred, gt) -> float:
    return float(np.linalg.norm(np.asarray(pred, dtype=np.float64).reshape(3) - np.asarray(gt, dtype=np.float64).reshape(3)))
