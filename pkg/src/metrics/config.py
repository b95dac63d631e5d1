#!/usr/bin/env python3
"""
Evaluation protocol constants. Thresholds and voxel pitch are in centimeters.
"""

from typing import Any, Dict, Tuple

SURFACE_SAMPLES: int = 30000
ALIGN_ITERS: int = 10
ALIGN_MIN_EXTENT: float = 1e-12    # RMS spread below this counts as a single point
HAND_FSCORE_CM: Tuple[float, float] = (0.1, 0.5)       # 1 mm, 5 mm
OBJECT_FSCORE_CM: Tuple[float, float] = (0.5, 1.0)     # 5 mm, 10 mm
VOXEL_CM: float = 0.5
CM_PER_UNIT: float = 100.0        # world meshes and joints are in meters

# Per-metric aggregation over a test set; anything not listed uses the mean
AGGREGATION: Dict[str, str] = {
    "cd_h": "median",
    "cd_o": "median",
}


def get_defaults() -> Dict[str, Any]:
    return {
        "surface_samples": SURFACE_SAMPLES,
        "align_iters": ALIGN_ITERS,
        "hand_fscore_cm": list(HAND_FSCORE_CM),
        "object_fscore_cm": list(OBJECT_FSCORE_CM),
        "voxel_cm": VOXEL_CM,
        "cm_per_unit": CM_PER_UNIT,
        "aggregation": dict(AGGREGATION),
    }
