#!/usr/bin/env python3
"""
Decoder and training defaults.

Layer widths are in -> HIDDEN_WIDTH x 4 -> 1; `in` is the visual feature
width plus the kinematic feature width of the chosen mode.
"""

from typing import Any, Dict, Tuple

# Architecture
HIDDEN_WIDTH: int = 512
LAYER_COUNT: int = 5              # fully-connected layers, last one linear
VISUAL_DIM: int = 256             # e_v width when a visual / latent code is used

# Optimizer (Adam)
LEARNING_RATE: float = 1e-4
DECAY_EVERY: int = 600            # epochs between learning-rate halvings
DECAY_FACTOR: float = 0.5
ADAM_BETAS: Tuple[float, float] = (0.9, 0.999)
ADAM_EPS: float = 1e-8
BATCH_SIZE: int = 256

# Losses
LOSS_WEIGHTS: Tuple[float, float, float] = (1.0, 0.5, 0.5)   # (w_op, w_hsdf, w_osdf)
ORDINAL_VIEWS: int = 20
ORDINAL_REDUCTION: str = "sum"    # "sum" over views, or "mean"

# Auto-decoder latent codes
LATENT_INIT_STD: float = 0.01
LATENT_REG: float = 1e-4
LATENT_FIT_STEPS: int = 200
LATENT_FIT_LR: float = 1e-2

# Inference
PREDICT_CHUNK: int = 65536


def get_defaults() -> Dict[str, Any]:
    return {
        "hidden_width": HIDDEN_WIDTH,
        "layer_count": LAYER_COUNT,
        "visual_dim": VISUAL_DIM,
        "learning_rate": LEARNING_RATE,
        "decay_every": DECAY_EVERY,
        "decay_factor": DECAY_FACTOR,
        "adam_betas": list(ADAM_BETAS),
        "adam_eps": ADAM_EPS,
        "batch_size": BATCH_SIZE,
        "loss_weights": list(LOSS_WEIGHTS),
        "ordinal_views": ORDINAL_VIEWS,
        "ordinal_reduction": ORDINAL_REDUCTION,
        "latent_init_std": LATENT_INIT_STD,
        "latent_reg": LATENT_REG,
        "latent_fit_steps": LATENT_FIT_STEPS,
        "latent_fit_lr": LATENT_FIT_LR,
    }
