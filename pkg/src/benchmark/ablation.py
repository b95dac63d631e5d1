"""
Feature-mode ablation on the synthetic benchmark.

For every requested mode one decoder is trained on the training scenes
(same samples and seed for every mode), then each test scene is
reconstructed from its predicted-pose features, extracted by marching
cubes, mapped back to meters and scored against the ground-truth mesh.
Visual rows ("v1+k3", "v2+k3") add the scene's image feature to the hand
decoder input, pooled globally (v1) or sampled at each point's projection
(v2). Rows are modes, columns are aggregated metrics. A diverging mode is
reported as such without stopping the other rows.

Public API:
- AblationConfig
- AblationReport with .to_frame(), .to_dict(), .to_json(path), .to_csv(path), .print_table()
- run_ablation(cfg, skel, verbose) -> AblationReport
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.benchmark import config
from src.benchmark.scene import BenchmarkScene, make_scenes
from src.decoder.mlp import MlpParams
from src.decoder.trainer import TrainConfig, TrainingData, train
from src.errors import ConfigError, DivergenceError
from src.features.kinematic import FEATURE_DIMS, HAND_MODES, OBJECT_MODES, kinematic_features
from src.features.visual import VISUAL_MODES
from src.kinematics.skeleton import HandSkeleton, default_skeleton
from src.metrics.report import MetricReport, evaluate_sample
from src.reconstruct.extraction import denormalize_mesh, marching_cubes
from src.reconstruct.grid import decoder_field, evaluate_grid
from src.sdfdata.sampling import SampleSet

CUBE_BOUNDS = ((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))


@dataclass
class AblationConfig:
    seed: int = 0
    train_poses: int = config.TRAIN_POSES
    test_poses: int = config.TEST_POSES
    hand_modes: Sequence[str] = config.HAND_MODES
    object_modes: Sequence[str] = config.OBJECT_MODES
    visual_modes: Sequence[str] = config.VISUAL_MODES
    visual_kinematic_mode: str = config.VISUAL_KINEMATIC_MODE
    samples_per_scene: int = config.SAMPLES_PER_SCENE
    hidden_width: int = config.HIDDEN_WIDTH
    epochs: int = config.EPOCHS
    steps_per_epoch: int = config.STEPS_PER_EPOCH
    learning_rate: float = config.LEARNING_RATE
    batch_size: int = config.BATCH_SIZE
    grid_res: int = config.EVAL_GRID_RES
    surface_samples: int = config.EVAL_SURFACE_SAMPLES
    threads: int = 1

    def __post_init__(self):
        self.hand_modes = list(self.hand_modes)
        self.object_modes = list(self.object_modes)
        self.visual_modes = list(self.visual_modes)
        for m in self.hand_modes:
            if m not in HAND_MODES:
                raise ConfigError(f"unknown hand mode '{m}'", field="mode")
        for m in self.object_modes:
            if m not in OBJECT_MODES:
                raise ConfigError(f"unknown object mode '{m}'", field="mode")
        for m in self.visual_modes:
            if m not in VISUAL_MODES:
                raise ConfigError(f"unknown visual mode '{m}'", field="visual_mode")
        if self.visual_kinematic_mode not in HAND_MODES:
            raise ConfigError(f"visual rows pair with a hand mode, got '{self.visual_kinematic_mode}'",
                              field="visual_kinematic_mode")
        if self.train_poses < 1 or self.test_poses < 1:
            raise ConfigError("need at least one training and one test pose", field="train_poses")

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if k != "threads"}


@dataclass
class AblationReport:
    rows: List[Dict[str, Any]] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def row(self, mode: str) -> Dict[str, Any]:
        for r in self.rows:
            if r["mode"] == mode:
                return r
        raise KeyError(mode)

    def to_dict(self) -> Dict[str, Any]:
        return {"config": self.config, "rows": self.rows}

    def to_json(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    def to_csv(self, path: str):
        self.to_frame().to_csv(path, index=False)

    def print_table(self):
        print("=" * 60)
        print("📊 Feature-mode ablation")
        print("=" * 60)
        print(self.to_frame().to_string(index=False))
        print("=" * 60)


def _training_data(scenes: Sequence[BenchmarkScene], mode: str, visual_mode: Optional[str] = None) -> TrainingData:
    feats = [kinematic_features(s.samples.positions, s.cube_context(), mode) for s in scenes]
    samples = SampleSet(
        np.concatenate([s.samples.positions for s in scenes]),
        np.concatenate([s.samples.sdf_hand for s in scenes]),
        np.concatenate([s.samples.sdf_obj for s in scenes]),
    )
    ids = np.concatenate([np.full(len(s.samples), i) for i, s in enumerate(scenes)])
    visual = None
    if visual_mode:
        visual = np.concatenate([s.visual_features(s.samples.positions, visual_mode) for s in scenes])
    return TrainingData(samples, np.concatenate(feats), shape_ids=ids, visual=visual)


def _reconstruct(params: MlpParams, scene: BenchmarkScene, mode: str, res: int, visual_mode: Optional[str] = None):
    ctx = scene.cube_context()
    e_v = (lambda p: scene.visual_features(p, visual_mode)) if visual_mode else None
    grid = evaluate_grid(decoder_field(params, lambda p: kinematic_features(p, ctx, mode), e_v), CUBE_BOUNDS, res)
    iso = marching_cubes(grid, model_id=_label(mode, visual_mode))
    if iso.is_empty:
        return None
    return denormalize_mesh(iso, scene.normalization)


def _evaluate_mode(params: MlpParams, scenes: Sequence[BenchmarkScene], mode: str, target: str,
                   cfg: AblationConfig, visual_mode: Optional[str] = None) -> Dict[str, Any]:
    report = MetricReport()
    empty = 0
    for s in scenes:
        mesh = _reconstruct(params, s, mode, cfg.grid_res, visual_mode)
        seed = cfg.seed + s.index
        if target == "hand":
            if mesh is None:
                row = {"cd_h": float("inf"), "fs_h@1mm": 0.0, "fs_h@5mm": 0.0}
            else:
                row = evaluate_sample(pred_hand=mesh, gt_hand=s.hand_mesh, n_samples=cfg.surface_samples,
                                      seed=seed, interaction=False)
            row["e_h"] = evaluate_sample(pred_joints=s.pred_joints, gt_joints=s.joints)["e_h"]
        else:
            if mesh is None:
                row = {"cd_o": float("inf"), "fs_o@5mm": 0.0, "fs_o@10mm": 0.0}
            else:
                row = evaluate_sample(pred_obj=mesh, gt_obj=s.obj_mesh, n_samples=cfg.surface_samples,
                                      seed=seed, interaction=False)
            row["e_o"] = evaluate_sample(pred_center=s.pred_center, gt_center=s.obj.center)["e_o"]
        row["sample"] = s.index
        empty += mesh is None
        report.add(row)
    summary = report.summary()
    summary["empty_meshes"] = empty
    return summary


def _label(mode: str, visual_mode: Optional[str]) -> str:
    return f"{visual_mode}+{mode}" if visual_mode else mode


def _run_mode(train_scenes, test_scenes, mode: str, target: str, cfg: AblationConfig, verbose: bool,
              visual_mode: Optional[str] = None) -> Dict[str, Any]:
    label = _label(mode, visual_mode)
    row: Dict[str, Any] = {"mode": label, "target": target}
    data = _training_data(train_scenes, mode, visual_mode)
    visual_dim = 0 if data.visual is None else data.visual.shape[1]
    params = MlpParams.init(FEATURE_DIMS[mode], np.random.default_rng(cfg.seed), visual_dim=visual_dim,
                            hidden=cfg.hidden_width, feature_mode=mode)
    tcfg = TrainConfig(learning_rate=cfg.learning_rate, batch_size=cfg.batch_size, epochs=cfg.epochs,
                       steps_per_epoch=cfg.steps_per_epoch, seed=cfg.seed, target=target)
    try:
        result = train(params, data, tcfg, verbose=verbose)
    except DivergenceError as e:
        if verbose:
            print(f"❌ {label}: {e.message}")
        row.update({"status": "diverged", "message": e.message})
        return row
    row["train_l1"] = result.loss_trace[-1] if result.loss_trace else None
    row.update(_evaluate_mode(result.params, test_scenes, mode, target, cfg, visual_mode))
    row["status"] = "ok"
    if verbose:
        key = "cd_h" if target == "hand" else "cd_o"
        print(f"✅ {label}: median {key} = {row.get(key, float('nan')):.4f} cm^2")
    return row


def run_ablation(cfg: AblationConfig, skel: Optional[HandSkeleton] = None, verbose: bool = False) -> AblationReport:
    skel = skel or default_skeleton()
    if verbose:
        print(f"🚀 Building {cfg.train_poses} train / {cfg.test_poses} test scenes (seed {cfg.seed})")
    train_scenes = make_scenes(cfg.train_poses, cfg.seed, skel, cfg.threads, 0, cfg.samples_per_scene)
    test_scenes = make_scenes(cfg.test_poses, cfg.seed, skel, cfg.threads, cfg.train_poses, cfg.samples_per_scene)

    report = AblationReport(config=cfg.to_dict())
    for mode in cfg.hand_modes:
        report.rows.append(_run_mode(train_scenes, test_scenes, mode, "hand", cfg, verbose))
    for mode in cfg.object_modes:
        report.rows.append(_run_mode(train_scenes, test_scenes, mode, "object", cfg, verbose))
    for visual_mode in cfg.visual_modes:
        report.rows.append(_run_mode(train_scenes, test_scenes, cfg.visual_kinematic_mode, "hand", cfg, verbose,
                                     visual_mode))
    if verbose:
        report.print_table()
    return report
