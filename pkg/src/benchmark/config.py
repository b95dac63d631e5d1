#!/usr/bin/env python3
"""
Desk-scale synthetic benchmark settings (world units are meters).
"""

import math
from typing import Any, Dict, Tuple

# Scene synthesis
TRAIN_POSES: int = 64
TEST_POSES: int = 16
FINGER_LIMIT: float = math.pi / 4          # per-component bound on finger axis-angles
BONE_RADIUS: float = 0.008
PALM_RADIUS: float = 0.010
OBJECT_KINDS: Tuple[str, ...] = ("sphere", "box", "cylinder")
OBJECT_GAP: float = 0.012                  # palm surface to object surface along the palm normal
GT_MESH_RES: int = 48                      # marching-cubes resolution of the analytic fields
GT_MESH_MARGIN: float = 0.02

# Predicted joints: Gaussian heatmaps read out by soft-argmax, then IK
HEATMAP_RES: int = 32
HEATMAP_SIGMA: float = 0.01
HEATMAP_MARGIN: float = 0.03
SOFTARGMAX_TEMPERATURE: float = 0.02
JOINT_NOISE: float = 0.004
CENTER_NOISE: float = 0.005

# Synthetic image features: a camera looking down +z at the palm, and a grid of
# Gaussian blobs at the projected predicted joints and object center
CAMERA_DISTANCE: float = 0.5
CAMERA_FOCAL: float = 480.0
IMAGE_SIZE: int = 256
FEATURE_GRID_SIZE: int = 16
FEATURE_BLOB_SIGMA: float = 12.0         # pixels

# Samples per scene (same near/uniform protocol as dataset generation)
SAMPLES_PER_SCENE: int = 2048

# Decoder training
HIDDEN_WIDTH: int = 128
EPOCHS: int = 150
STEPS_PER_EPOCH: int = 10
LEARNING_RATE: float = 1e-3
BATCH_SIZE: int = 256

# Evaluation
EVAL_GRID_RES: int = 40
EVAL_SURFACE_SAMPLES: int = 4000
HAND_MODES: Tuple[str, ...] = ("k1", "k2", "k3")
OBJECT_MODES: Tuple[str, ...] = ("ko1", "ko2", "ko3")
VISUAL_MODES: Tuple[str, ...] = ("v1", "v2")   # rows "v1+k3" / "v2+k3": global vs geometry-aligned e_v
VISUAL_KINEMATIC_MODE: str = "k3"


def get_defaults() -> Dict[str, Any]:
    return {
        "train_poses": TRAIN_POSES,
        "test_poses": TEST_POSES,
        "finger_limit": FINGER_LIMIT,
        "bone_radius": BONE_RADIUS,
        "palm_radius": PALM_RADIUS,
        "object_kinds": list(OBJECT_KINDS),
        "object_gap": OBJECT_GAP,
        "gt_mesh_res": GT_MESH_RES,
        "gt_mesh_margin": GT_MESH_MARGIN,
        "heatmap_res": HEATMAP_RES,
        "heatmap_sigma": HEATMAP_SIGMA,
        "heatmap_margin": HEATMAP_MARGIN,
        "softargmax_temperature": SOFTARGMAX_TEMPERATURE,
        "joint_noise": JOINT_NOISE,
        "center_noise": CENTER_NOISE,
        "samples_per_scene": SAMPLES_PER_SCENE,
        "hidden_width": HIDDEN_WIDTH,
        "epochs": EPOCHS,
        "steps_per_epoch": STEPS_PER_EPOCH,
        "learning_rate": LEARNING_RATE,
        "batch_size": BATCH_SIZE,
        "eval_grid_res": EVAL_GRID_RES,
        "eval_surface_samples": EVAL_SURFACE_SAMPLES,
        "hand_modes": list(HAND_MODES),
        "object_modes": list(OBJECT_MODES),
        "visual_modes": list(VISUAL_MODES),
        "visual_kinematic_mode": VISUAL_KINEMATIC_MODE,
        "camera_distance": CAMERA_DISTANCE,
        "camera_focal": CAMERA_FOCAL,
        "image_size": IMAGE_SIZE,
        "feature_grid_size": FEATURE_GRID_SIZE,
        "feature_blob_sigma": FEATURE_BLOB_SIGMA,
    }
