"""
Command implementations. Each takes a validated RunConfig, writes its
artifact through write_artifact() plus a manifest, and returns the artifact
path (None when ablate runs without --out).

Public API:
- cmd_gensdf, cmd_fk, cmd_ik, cmd_features, cmd_fit, cmd_extract, cmd_eval, cmd_ablate
- COMMAND_TABLE: command name -> function
"""

from __future__ import annotations

import json
import os
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.benchmark.ablation import AblationConfig, run_ablation
from src.cli.artifacts import MANIFEST_SUFFIX, write_artifact, write_manifest
from src.cli.config import RunConfig, config_hash
from src.decoder.mlp import MlpParams, load_model, save_model
from src.decoder.trainer import TrainConfig, TrainingData, train, train_joint
from src.errors import ConfigError, DimensionMismatchError, InputParseError
from src.features.kinematic import FEATURE_DIMS, HAND_MODES, OBJECT_MODES, KinematicContext, kinematic_features
from src.features.visual import VisualSource, load_camera, load_feature_grid
from src.kinematics.chain import forward_kinematics, inverse_kinematics
from src.kinematics.skeleton import HandSkeleton, default_skeleton, load_joints, load_pose, load_skeleton, save_joints, save_pose
from src.metrics import config as met_config
from src.metrics.report import MetricReport, evaluate_sample
from src.reconstruct.extraction import denormalize_mesh, marching_cubes
from src.reconstruct.grid import decoder_field, evaluate_grid
from src.sdfdata.io import load_obj, load_sample_set, save_obj, save_sample_set
from src.sdfdata.sampling import NormalizationTransform, generate_dataset

CUBE_BOUNDS = ((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))


def _skeleton(cfg: RunConfig) -> HandSkeleton:
    path = cfg.get("skeleton")
    return load_skeleton(path) if path else default_skeleton()


def _context(cfg: RunConfig, norm: NormalizationTransform) -> KinematicContext:
    """Kinematic context of the pose file, mapped into the normalized cube."""
    skel = _skeleton(cfg)
    joints, globals_ = forward_kinematics(skel, load_pose(cfg["pose"], skel))
    center = cfg.get("center")
    center = np.zeros(3) if center is None else np.asarray(center, dtype=np.float64)
    ctx = KinematicContext(joints, globals_, center)
    return ctx.normalized(norm.offset, norm.scale)


def _finish(cfg: RunConfig, extra: Optional[dict] = None) -> str:
    write_manifest(cfg.output, cfg, extra)
    print(f"✅ Wrote {cfg.output}")
    return cfg.output


def cmd_gensdf(cfg: RunConfig) -> str:
    print(f"🚀 Generating {cfg['count']} SDF samples (seed {cfg.seed}, {cfg.threads} threads)")
    samples = generate_dataset(
        load_obj(cfg["hand"]),
        load_obj(cfg["object"]),
        count=int(cfg["count"]),
        seed=cfg.seed,
        near_fraction=float(cfg["near_fraction"]),
        sigmas=[float(s) for s in cfg["sigmas"]],
        threads=cfg.threads,
        sources={"hand": cfg["hand"], "object": cfg["object"]},
    )
    samples.metadata["config_hash"] = config_hash(cfg)
    samples.metadata["cm_per_unit"] = float(cfg["cm_per_unit"])
    for which, ok in samples.metadata["sign_reliable"].items():
        if not ok:
            print(f"⚠️ {which} mesh is not watertight; inside/outside signs may be unreliable")
    write_artifact(cfg.output, lambda p: save_sample_set(samples, p))
    return _finish(cfg, {"count": len(samples)})


def cmd_fk(cfg: RunConfig) -> str:
    skel = _skeleton(cfg)
    joints, _ = forward_kinematics(skel, load_pose(cfg["pose"], skel))
    write_artifact(cfg.output, lambda p: save_joints(joints, p))
    return _finish(cfg)


def cmd_ik(cfg: RunConfig) -> str:
    pose = inverse_kinematics(_skeleton(cfg), load_joints(cfg["joints"]))
    if pose.degenerate_joints:
        print(f"⚠️ zero-length bones at joints {list(pose.degenerate_joints)}; their rotations were set to zero")
    write_artifact(cfg.output, lambda p: save_pose(pose, p))
    return _finish(cfg)


def _visual(cfg: RunConfig, mode: Optional[str] = None) -> Optional[VisualSource]:
    if not cfg.get("grid"):
        return None
    return VisualSource(load_feature_grid(cfg["grid"]), load_camera(cfg["camera"]),
                        mode or cfg.get("visual_mode", "v2"))


def _world_visual(visual: Optional[VisualSource], norm: NormalizationTransform):
    """e_v provider over normalized-cube points (None without a grid)."""
    if visual is None:
        return None
    return lambda p: visual.features(norm.invert(p))


def cmd_features(cfg: RunConfig) -> str:
    samples = load_sample_set(cfg["samples"])
    mode = cfg["mode"]
    feats = kinematic_features(samples.positions, _context(cfg, samples.normalization), mode)
    columns = [f"{mode}_{i}" for i in range(feats.shape[1])]
    visual = _visual(cfg)
    if visual is not None:
        e_v = visual.features(samples.normalization.invert(samples.positions))
        feats = np.concatenate([e_v, feats], axis=1)
        columns = [f"{visual.mode}_{i}" for i in range(e_v.shape[1])] + columns
    frame = pd.DataFrame(feats, columns=columns)
    write_artifact(cfg.output, lambda p: frame.to_csv(p, index=False, float_format="%.9g"))
    return _finish(cfg, {"rows": len(frame), "dim": int(feats.shape[1])})


def _train_config(cfg: RunConfig, target: str) -> TrainConfig:
    return TrainConfig(
        learning_rate=float(cfg["learning_rate"]),
        decay_every=int(cfg["decay_every"]),
        batch_size=int(cfg["batch_size"]),
        epochs=int(cfg["epochs"]),
        steps_per_epoch=int(cfg["steps_per_epoch"]),
        seed=cfg.seed,
        target=target,
        loss_weights=tuple(float(w) for w in cfg["loss_weights"]),
    )


def _model_header(cfg: RunConfig, samples, target: str, tcfg: TrainConfig,
                  visual: Optional[VisualSource]) -> dict:
    header = {
        "normalization": samples.normalization.to_dict(),
        "target": target,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "train": tcfg.to_dict(),
    }
    if "cm_per_unit" in samples.metadata:
        header["cm_per_unit"] = samples.metadata["cm_per_unit"]
    if visual is not None:
        header["visual_mode"] = visual.mode
    return header


def cmd_fit(cfg: RunConfig) -> str:
    samples = load_sample_set(cfg["samples"])
    norm = samples.normalization
    ctx = _context(cfg, norm)
    visual = _visual(cfg)
    e_v = None if visual is None else visual.features(norm.invert(samples.positions))
    visual_dim = 0 if visual is None else visual.channels

    def setup(mode: str, seed_offset: int):
        params = MlpParams.init(FEATURE_DIMS[mode], np.random.default_rng(cfg.seed + seed_offset),
                                visual_dim=visual_dim, hidden=int(cfg["hidden"]), layers=int(cfg["layers"]),
                                feature_mode=mode)
        return params, TrainingData(samples, kinematic_features(samples.positions, ctx, mode), visual=e_v)

    mode = cfg["mode"]
    target = "hand" if mode in HAND_MODES else "object"
    params, data = setup(mode, 0)
    if cfg.get("object_mode"):
        obj_mode = cfg["object_mode"]
        tcfg = _train_config(cfg, "hand")
        obj_params, obj_data = setup(obj_mode, 1)
        print(f"🚀 Fitting {mode} + {obj_mode} decoders jointly on {len(samples)} samples")
        joint = train_joint(params, obj_params, data, obj_data, tcfg, verbose=True)
        header = _model_header(cfg, samples, "object", tcfg, visual)
        write_artifact(cfg["object_output"], lambda p: save_model(joint.obj_params, p, header))
        header = _model_header(cfg, samples, "hand", tcfg, visual)
        write_artifact(cfg.output, lambda p: save_model(joint.hand_params, p, header))
        final = {"final_shape_loss": joint.loss_trace[-1] if joint.loss_trace else None,
                 "final_l1_hand": joint.hand_trace[-1] if joint.hand_trace else None,
                 "final_l1_object": joint.object_trace[-1] if joint.object_trace else None}
        return _finish(cfg, final)

    tcfg = _train_config(cfg, target)
    print(f"🚀 Fitting {mode} decoder on {len(samples)} samples ({target})")
    result = train(params, data, tcfg, verbose=True)
    header = _model_header(cfg, samples, target, tcfg, visual)
    write_artifact(cfg.output, lambda p: save_model(result.params, p, header))
    final = result.loss_trace[-1] if result.loss_trace else None
    return _finish(cfg, {"final_l1": final})


def cmd_extract(cfg: RunConfig) -> str:
    params, header = load_model(cfg["model"])
    mode = params.feature_mode
    if mode in OBJECT_MODES and cfg.get("center") is None:
        raise ConfigError(f"extract: the {mode} model needs --center", field="center")
    if params.visual_dim and not cfg.get("grid"):
        print("⚠️ model takes a visual feature but no --grid/--camera was given; using zeros")
    norm = NormalizationTransform.from_dict(header["normalization"]) if "normalization" in header \
        else NormalizationTransform.identity()
    ctx = _context(cfg, norm)
    visual = _visual(cfg, header.get("visual_mode")) if params.visual_dim else None
    if visual is not None and visual.channels != params.visual_dim:
        raise DimensionMismatchError(
            f"feature grid has {visual.channels} channels, model expects {params.visual_dim}", field="grid")
    field = decoder_field(params, lambda p: kinematic_features(p, ctx, mode), _world_visual(visual, norm))
    grid = evaluate_grid(field, CUBE_BOUNDS, int(cfg["res"]), threads=cfg.threads)
    iso = marching_cubes(grid, float(cfg["iso"]), model_id=header.get("config_hash", ""))
    if iso.is_empty:
        print("⚠️ decoder field has no zero crossing in the unit cube; writing an empty mesh")
    mesh = denormalize_mesh(iso, norm)
    write_artifact(cfg.output, lambda p: save_obj(mesh, p))
    extra = {"extraction": iso.provenance(), "faces": len(mesh), "normalization": norm.to_dict()}
    if "cm_per_unit" in header:
        extra["cm_per_unit"] = header["cm_per_unit"]
    return _finish(cfg, extra)


def _vec(value) -> Optional[np.ndarray]:
    return None if value is None else np.asarray(value, dtype=np.float64).reshape(3)


def _recorded_units(cfg: RunConfig) -> Tuple[float, str]:
    """cm_per_unit from the flag, else from a mesh manifest written by extract, else the default."""
    if cfg.get("cm_per_unit") is not None:
        return float(cfg["cm_per_unit"]), "flag"
    for key in ("pred_hand", "pred_object", "gt_hand", "gt_object"):
        path = cfg.get(key)
        if not path or not os.path.isfile(path + MANIFEST_SUFFIX):
            continue
        try:
            with open(path + MANIFEST_SUFFIX, "r", encoding="utf-8") as f:
                manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise InputParseError(f"invalid manifest JSON: {e}", file=path + MANIFEST_SUFFIX, field="cm_per_unit")
        if manifest.get("cm_per_unit") is not None:
            return float(manifest["cm_per_unit"]), path + MANIFEST_SUFFIX
    print(f"⚠️ no --cm-per-unit and no recorded units; assuming {met_config.CM_PER_UNIT} cm per unit")
    return met_config.CM_PER_UNIT, "default"


def cmd_eval(cfg: RunConfig) -> str:
    def mesh(key):
        return load_obj(cfg[key]) if cfg.get(key) else None

    def joints(key):
        return load_joints(cfg[key]) if cfg.get(key) else None

    cm_per_unit, units_source = _recorded_units(cfg)
    row = evaluate_sample(
        pred_hand=mesh("pred_hand"), gt_hand=mesh("gt_hand"),
        pred_obj=mesh("pred_object"), gt_obj=mesh("gt_object"),
        pred_joints=joints("pred_joints"), gt_joints=joints("gt_joints"),
        pred_center=_vec(cfg.get("pred_center")), gt_center=_vec(cfg.get("gt_center")),
        cm_per_unit=cm_per_unit,
        n_samples=int(cfg["surface_samples"]),
        seed=cfg.seed,
        iters=int(cfg["align_iters"]),
        interaction=bool(cfg["interaction"]),
        voxel_cm=float(cfg["voxel_cm"]),
        sample_id=cfg.get("pred_hand") or cfg.get("pred_object") or "",
    )
    if row.get("sign_reliable") is False:
        print("⚠️ predicted meshes are not watertight; penetration and volume may be unreliable")
    report = MetricReport()
    report.add(row)
    print("📊 " + ", ".join(f"{k}={v:.4f}" for k, v in report.summary().items()))
    write_artifact(cfg.output, report.to_json)
    if cfg.get("csv"):
        write_artifact(cfg["csv"], report.to_csv)
    return _finish(cfg, {"cm_per_unit": cm_per_unit, "cm_per_unit_source": units_source})


def cmd_ablate(cfg: RunConfig) -> Optional[str]:
    acfg = AblationConfig(
        seed=cfg.seed,
        train_poses=int(cfg["train_poses"]),
        test_poses=int(cfg["test_poses"]),
        hand_modes=cfg["hand_modes"],
        object_modes=cfg["object_modes"],
        visual_modes=cfg["visual_modes"],
        samples_per_scene=int(cfg["samples_per_scene"]),
        hidden_width=int(cfg["hidden"]),
        epochs=int(cfg["epochs"]),
        steps_per_epoch=int(cfg["steps_per_epoch"]),
        grid_res=int(cfg["res"]),
        surface_samples=int(cfg["surface_samples"]),
        threads=cfg.threads,
    )
    report = run_ablation(acfg, verbose=True)
    if cfg.get("csv"):
        write_artifact(cfg["csv"], report.to_csv)
    if not cfg.output:
        return None
    write_artifact(cfg.output, report.to_json)
    return _finish(cfg)


COMMAND_TABLE: Dict[str, Callable[[RunConfig], Optional[str]]] = {
    "gensdf": cmd_gensdf,
    "fk": cmd_fk,
    "ik": cmd_ik,
    "features": cmd_features,
    "fit": cmd_fit,
    "extract": cmd_extract,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
}
