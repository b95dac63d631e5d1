#!/usr/bin/env python3
"""
Tunables for SDF ground-truth generation.

The near-surface mix and noise scales are not canonical; they are the
defaults the generator uses unless a run overrides them.
"""

from typing import Any, Dict, Tuple

# Dataset generation
SAMPLE_COUNT: int = 40000                 # points per hand-object pair
NEAR_FRACTION: float = 0.95               # share of surface-perturbed points (rest uniform in the cube)
NOISE_SIGMAS: Tuple[float, float] = (0.005, 0.05)   # alternating isotropic noise, cube units
CUBE_HALF_EXTENT: float = 0.5             # samples live in [-0.5, 0.5]^3

# Distance queries
CHUNK_SIZE: int = 2048                    # points per worker task
BRUTE_PAIR_BUDGET: int = 500_000          # point-triangle pairs per brute-force block
NEAREST_CENTROIDS: int = 8                # k for the distance upper bound
INDEX_BLOCK: int = 256                    # points per indexed candidate query

# Inside test
BARY_TOL: float = 1e-12                   # barycentric magnitude treated as an edge/vertex hit
PERTURB_SCALE: float = 1e-9               # retry offset, relative to the mesh extent
MAX_PERTURB_RETRIES: int = 8

# Mesh cleaning
DEGENERATE_AREA_TOL: float = 1e-14        # relative to the squared bounding-box diagonal


def get_defaults() -> Dict[str, Any]:
    return {
        "sample_count": SAMPLE_COUNT,
        "near_fraction": NEAR_FRACTION,
        "noise_sigmas": list(NOISE_SIGMAS),
        "cube_half_extent": CUBE_HALF_EXTENT,
        "chunk_size": CHUNK_SIZE,
        "brute_pair_budget": BRUTE_PAIR_BUDGET,
        "nearest_centroids": NEAREST_CENTROIDS,
        "index_block": INDEX_BLOCK,
        "bary_tol": BARY_TOL,
        "perturb_scale": PERTURB_SCALE,
        "max_perturb_retries": MAX_PERTURB_RETRIES,
        "degenerate_area_tol": DEGENERATE_AREA_TOL,
    }
