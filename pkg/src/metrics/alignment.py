"""
Scale + translation alignment of a predicted point set onto ground truth.

Starts from the RMS-extent ratio and centroid offset, then alternates
nearest-neighbour correspondences (pred -> gt) with the closed-form
least-squares (s, t). A step is kept only if the Chamfer residual does not
grow, so the residual is non-increasing, and one that would make the scale
non-positive ends the loop. Point sets with no spread fall back to scale 1
and a centroid shift. No rotation is solved for.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.spatial import cKDTree

from src.errors import DegenerateInputError
from src.metrics.config import ALIGN_ITERS, ALIGN_MIN_EXTENT
from src.metrics.scores import chamfer_distance


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    scale: float
    translation: np.ndarray
    residual: float
    history: List[float] = field(default_factory=list)

    def apply(self, points) -> np.ndarray:
        return self.scale * np.asarray(points, dtype=np.float64) + self.translation


def _fit_scale_translation(p: np.ndarray, q: np.ndarray):
    """argmin_{s, t} sum ||s p_i + t - q_i||^2."""
    pm, qm = p.mean(axis=0), q.mean(axis=0)
    pc = p - pm
    denom = float((pc ** 2).sum())
    s = float((pc * (q - qm)).sum()) / denom if denom > 0 else 1.0
    return s, qm - s * pm


def align_scale_translation(pred, gt, iters: int = ALIGN_ITERS) -> AlignmentResult:
    """
    Fit s, t so that s * pred + t lies on gt under the Chamfer distance.

    Args:
        pred: (N, 3) predicted surface points.
        gt: (M, 3) ground-truth surface points.
        iters: closest-point rounds; each one refits s, t in closed form.

    Returns:
        AlignmentResult with the residual history, which never grows.
    """
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    if len(pred) == 0 or len(gt) == 0:
        raise DegenerateInputError("alignment needs non-empty point sets", field="points")

    def residual(s, t):
        return chamfer_distance(s * pred + t, gt)

    pred_c, gt_c = pred.mean(axis=0), gt.mean(axis=0)
    pred_rms = float(np.sqrt(np.mean(np.sum((pred - pred_c) ** 2, axis=1))))
    gt_rms = float(np.sqrt(np.mean(np.sum((gt - gt_c) ** 2, axis=1))))
    # collapsed point sets
    if len(pred) == 1 or len(gt) == 1 or pred_rms <= ALIGN_MIN_EXTENT or gt_rms <= ALIGN_MIN_EXTENT:
        t = gt_c - pred_c
        return AlignmentResult(1.0, t, residual(1.0, t))

    s, t = gt_rms / pred_rms, gt_c - (gt_rms / pred_rms) * pred_c
    best = residual(s, t)
    start = residual(1.0, np.zeros(3))
    if start < best:
        s, t, best = 1.0, np.zeros(3), start
    history = [best]

    tree = cKDTree(gt)
    for _ in range(iters):
        _, idx = tree.query(s * pred + t, k=1)
        s_new, t_new = _fit_scale_translation(pred, gt[idx])
        if not s_new > ALIGN_MIN_EXTENT:
            break
        r = residual(s_new, t_new)
        if r > best:
            break
        s, t, best = s_new, t_new, r
        history.append(best)
    return AlignmentResult(float(s), np.asarray(t, dtype=np.float64), best, history)
