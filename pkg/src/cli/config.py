#!/usr/bin/env python3
"""
Run configuration for the command-line surface.

Resolution order, lowest to highest: built-in defaults, command-line flags,
then the optional --config JSON file. GSDF_SEED and GSDF_THREADS (read from
the environment or a .env file) replace the built-in seed/thread defaults.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from src.benchmark import config as bench_config
from src.decoder import config as dec_config
from src.errors import ConfigError, InputParseError
from src.features.kinematic import FEATURE_DIMS, HAND_MODES, OBJECT_MODES
from src.features.visual import VISUAL_MODES
from src.metrics import config as met_config
from src.sdfdata import config as sdf_config

load_dotenv()

COMMANDS = ("gensdf", "fk", "ik", "features", "fit", "extract", "eval", "ablate")

# image feature grid + camera; world coordinates are taken to be camera coordinates
VISUAL_DEFAULTS: Dict[str, Any] = {"grid": None, "camera": None, "visual_mode": "v2"}

COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "gensdf": {
        "hand": None,
        "object": None,
        "count": sdf_config.SAMPLE_COUNT,
        "near_fraction": sdf_config.NEAR_FRACTION,
        "sigmas": list(sdf_config.NOISE_SIGMAS),
        "cm_per_unit": met_config.CM_PER_UNIT,
    },
    "fk": {"pose": None, "skeleton": None},
    "ik": {"joints": None, "skeleton": None},
    "features": {"samples": None, "pose": None, "skeleton": None, "center": None, "mode": "k3", **VISUAL_DEFAULTS},
    "fit": {
        "samples": None,
        "pose": None,
        "skeleton": None,
        "center": None,
        "mode": "k3",
        "object_mode": None,
        "object_output": None,
        "loss_weights": list(dec_config.LOSS_WEIGHTS),
        **VISUAL_DEFAULTS,
        "epochs": 100,
        "steps_per_epoch": 10,
        "learning_rate": dec_config.LEARNING_RATE,
        "decay_every": dec_config.DECAY_EVERY,
        "batch_size": dec_config.BATCH_SIZE,
        "hidden": dec_config.HIDDEN_WIDTH,
        "layers": dec_config.LAYER_COUNT,
    },
    "extract": {"model": None, "pose": None, "skeleton": None, "center": None, "res": 64, "iso": 0.0,
                "grid": None, "camera": None},
    "eval": {
        "pred_hand": None,
        "gt_hand": None,
        "pred_object": None,
        "gt_object": None,
        "pred_joints": None,
        "gt_joints": None,
        "pred_center": None,
        "gt_center": None,
        "surface_samples": met_config.SURFACE_SAMPLES,
        "align_iters": met_config.ALIGN_ITERS,
        "cm_per_unit": None,
        "voxel_cm": met_config.VOXEL_CM,
        "interaction": True,
        "csv": None,
    },
    "ablate": {
        "train_poses": bench_config.TRAIN_POSES,
        "test_poses": bench_config.TEST_POSES,
        "hand_modes": list(bench_config.HAND_MODES),
        "object_modes": list(bench_config.OBJECT_MODES),
        "visual_modes": list(bench_config.VISUAL_MODES),
        "samples_per_scene": bench_config.SAMPLES_PER_SCENE,
        "epochs": bench_config.EPOCHS,
        "steps_per_epoch": bench_config.STEPS_PER_EPOCH,
        "hidden": bench_config.HIDDEN_WIDTH,
        "res": bench_config.EVAL_GRID_RES,
        "surface_samples": bench_config.EVAL_SURFACE_SAMPLES,
        "csv": None,
    },
}

REQUIRED_INPUTS: Dict[str, tuple] = {
    "gensdf": ("hand", "object"),
    "fk": ("pose",),
    "ik": ("joints",),
    "features": ("samples", "pose"),
    "fit": ("samples", "pose"),
    "extract": ("model", "pose"),
    "eval": (),
    "ablate": (),
}

INPUT_KEYS = ("hand", "object", "pose", "joints", "skeleton", "samples", "model", "grid", "camera",
              "pred_hand", "gt_hand", "pred_object", "gt_object", "pred_joints", "gt_joints")

# excluded from the config hash so artifacts do not depend on them
UNHASHED_KEYS = ("threads",)


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got '{raw}'", field=name)


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    threads: int = 1
    output: Optional[str] = None
    options: Dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.options[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.options.get(key, default)

    def to_dict(self) -> Dict[str, Any]:
        return {"command": self.command, "seed": self.seed, "threads": self.threads,
                "output": self.output, **self.options}

    def inputs(self) -> Dict[str, str]:
        return {k: self.options[k] for k in INPUT_KEYS if self.options.get(k)}

    def validate(self):
        """Check every referenced path before any work starts."""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command '{self.command}'", field="command")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}", field="threads")
        for key in REQUIRED_INPUTS[self.command]:
            if not self.options.get(key):
                raise ConfigError(f"{self.command}: --{key.replace('_', '-')} is required", field=key)
        for key, path in self.inputs().items():
            if not os.path.isfile(path):
                raise ConfigError(f"input file not found: {path}", file=path, field=key)
        if self.command != "ablate" and not self.output:
            raise ConfigError(f"{self.command}: --out is required", field="output")
        if self.output:
            parent = os.path.dirname(os.path.abspath(self.output))
            if not os.path.isdir(parent):
                raise ConfigError(f"output directory does not exist: {parent}", file=self.output, field="output")
        mode = self.options.get("mode")
        if mode is not None and mode not in FEATURE_DIMS:
            raise ConfigError(f"unknown feature mode '{mode}'", field="mode")
        center = self.options.get("center")
        if center is not None and len(center) != 3:
            raise ConfigError("center needs three coordinates", field="center")
        object_mode = self.options.get("object_mode")
        if object_mode is not None:
            if object_mode not in OBJECT_MODES or mode not in HAND_MODES:
                raise ConfigError("joint fitting pairs a hand --mode with an object --object-mode", field="object_mode")
            if not self.options.get("object_output"):
                raise ConfigError(f"{self.command}: --object-out is required with --object-mode", field="object_output")
            parent = os.path.dirname(os.path.abspath(self.options["object_output"]))
            if not os.path.isdir(parent):
                raise ConfigError(f"output directory does not exist: {parent}", file=self.options["object_output"],
                                  field="object_output")
        if center is None and (mode in OBJECT_MODES or object_mode is not None):
            raise ConfigError(f"{self.command}: object modes need --center", field="center")
        if bool(self.options.get("grid")) != bool(self.options.get("camera")):
            raise ConfigError("--grid and --camera must be given together", field="grid")
        visual_mode = self.options.get("visual_mode")
        if visual_mode is not None and visual_mode not in VISUAL_MODES:
            raise ConfigError(f"unknown visual mode '{visual_mode}'", field="visual_mode")
        return self


def config_hash(cfg: RunConfig) -> str:
    payload = {k: v for k, v in cfg.to_dict().items() if k not in UNHASHED_KEYS}
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _read_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", file=path, field="config")
    except json.JSONDecodeError as e:
        raise InputParseError(f"invalid config JSON: {e}", file=path, field="config")
    if not isinstance(data, dict):
        raise InputParseError("config file must hold a JSON object", file=path, field="config")
    return data


def resolve_config(command: str, flags: Optional[Dict[str, Any]] = None,
                   config_path: Optional[str] = None) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command '{command}'", field="command")
    merged: Dict[str, Any] = {
        "seed": _env_int("GSDF_SEED", 0),
        "threads": _env_int("GSDF_THREADS", 1),
        "output": None,
        **COMMAND_DEFAULTS[command],
    }
    merged.update({k: v for k, v in (flags or {}).items() if v is not None})
    if config_path:
        file_values = _read_config_file(config_path)
        unknown = sorted(set(file_values) - set(merged))
        if unknown:
            raise ConfigError(f"unknown keys in config file: {unknown}", file=config_path, field=unknown[0])
        merged.update(file_values)

    seed = merged.pop("seed")
    threads = merged.pop("threads")
    output = merged.pop("output")
    try:
        seed, threads = int(seed), int(threads)
    except (TypeError, ValueError):
        raise ConfigError("seed and threads must be integers", field="seed")
    return RunConfig(command, seed, threads, output, merged)


_run_config: Optional[RunConfig] = None


def set_run_config(cfg: RunConfig) -> RunConfig:
    global _run_config
    _run_config = cfg
    return cfg


def get_run_config() -> RunConfig:
    """Configuration of the command currently running (a bare ablate config if none was set)."""
    global _run_config
    if _run_config is None:
        _run_config = resolve_config("ablate")
    return _run_config
