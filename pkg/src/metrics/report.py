"""
Per-sample evaluation and test-set aggregation.

evaluate_sample() converts every input to centimeters (cm_per_unit), aligns
the predicted hand onto ground truth by scale + translation and reuses that
alignment for the object, then scores both. Prediction and ground truth are
sampled with the same seed, so identical meshes score exactly zero Chamfer.
MetricReport keeps one row per sample and aggregates each metric by its
configured mode (median or mean); the contact ratio is the fraction of
samples in contact.

Public API:
- evaluate_sample(...) -> dict row
- MetricReport(rows, aggregation) with .summary(), .to_dict(), .to_json(path), .to_csv(path), .to_frame()
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.errors import ConfigError
from src.metrics import config
from src.metrics.alignment import align_scale_translation
from src.metrics.interaction import interaction_metrics
from src.metrics.scores import center_error, chamfer_distance, f_score, joint_errors
from src.metrics.surface import sample_surface
from src.sdfdata.mesh import TriMesh

AGGREGATION_MODES = ("median", "mean")


def _fs_key(prefix: str, threshold_cm: float) -> str:
    return f"fs_{prefix}@{threshold_cm * 10:g}mm"


def evaluate_sample(pred_hand: Optional[TriMesh] = None, gt_hand: Optional[TriMesh] = None,
                    pred_obj: Optional[TriMesh] = None, gt_obj: Optional[TriMesh] = None,
                    pred_joints=None, gt_joints=None, pred_center=None, gt_center=None,
                    cm_per_unit: float = config.CM_PER_UNIT, n_samples: int = config.SURFACE_SAMPLES,
                    seed: int = 0, iters: int = config.ALIGN_ITERS, interaction: bool = True,
                    voxel_cm: float = config.VOXEL_CM, sample_id: str = "") -> Dict[str, Any]:
    """
    Score one test sample. Only metrics whose inputs are all given appear in the row.

    Args:
        pred_hand, gt_hand, pred_obj, gt_obj: meshes in model units.
        pred_joints, gt_joints: (21, 3) joint sets; pred_center, gt_center: object centers.
        cm_per_unit: multiplies every length so the row is in centimeters.
        n_samples: surface points per mesh; seed fixes them.
        iters: alignment rounds for the hand (reused for the object).
        interaction: add the hand-object interaction metrics.
        voxel_cm: voxel edge for the intersection volume.
    """
    if cm_per_unit <= 0:
        raise ConfigError(f"cm_per_unit must be positive, got {cm_per_unit}", field="cm_per_unit")
    row: Dict[str, Any] = {"sample": sample_id}
    align = None

    if pred_hand is not None and gt_hand is not None:
        p = sample_surface(pred_hand, n_samples, seed) * cm_per_unit
        g = sample_surface(gt_hand, n_samples, seed) * cm_per_unit
        align = align_scale_translation(p, g, iters)
        p = align.apply(p)
        row["cd_h"] = chamfer_distance(p, g)
        for th in config.HAND_FSCORE_CM:
            row[_fs_key("h", th)] = f_score(p, g, th)[0]

    if pred_obj is not None and gt_obj is not None:
        p = sample_surface(pred_obj, n_samples, seed + 1) * cm_per_unit
        g = sample_surface(gt_obj, n_samples, seed + 1) * cm_per_unit
        if align is not None:
            p = align.apply(p)
        row["cd_o"] = chamfer_distance(p, g)
        for th in config.OBJECT_FSCORE_CM:
            row[_fs_key("o", th)] = f_score(p, g, th)[0]

    if pred_joints is not None and gt_joints is not None:
        row["e_h"] = joint_errors(pred_joints, gt_joints) * cm_per_unit
    if pred_center is not None and gt_center is not None:
        row["e_o"] = center_error(pred_center, gt_center) * cm_per_unit

    if interaction and pred_hand is not None and pred_obj is not None:
        res = interaction_metrics(pred_hand, pred_obj, voxel_cm / cm_per_unit)
        row["contact"] = bool(res.contact)
        row["p_d"] = res.penetration_depth * cm_per_unit
        row["i_v"] = res.intersection_volume * cm_per_unit ** 3
        row["sign_reliable"] = bool(res.sign_reliable)
    return row


@dataclass
class MetricReport:
    rows: List[Dict[str, Any]] = field(default_factory=list)
    aggregation: Dict[str, str] = field(default_factory=lambda: dict(config.AGGREGATION))

    def add(self, row: Dict[str, Any]):
        self.rows.append(row)

    def mode_for(self, metric: str) -> str:
        mode = self.aggregation.get(metric, "mean")
        if mode not in AGGREGATION_MODES:
            raise ConfigError(f"unknown aggregation '{mode}' for {metric}", field="aggregation")
        return mode

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def summary(self) -> Dict[str, float]:
        df = self.to_frame()
        out: Dict[str, float] = {}
        for col in df.columns:
            if col in ("sample", "sign_reliable"):
                continue
            values = df[col].dropna()
            if values.empty:
                continue
            if col == "contact":
                out["c_r"] = float(values.astype(float).mean())
                continue
            arr = values.to_numpy(dtype=np.float64)
            out[col] = float(np.median(arr) if self.mode_for(col) == "median" else np.mean(arr))
        return out

    def to_dict(self) -> Dict[str, Any]:
        summary = self.summary()
        return {
            "metrics": summary,
            "aggregation": {k: ("fraction" if k == "c_r" else self.mode_for(k)) for k in summary},
            "samples": self.rows,
        }

    def to_json(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    def to_csv(self, path: str):
        self.to_frame().to_csv(path, index=False)
