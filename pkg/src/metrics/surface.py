"""
Surface point sampling for mesh comparison.
"""

from __future__ import annotations

import numpy as np

from src.errors import ConfigError, DegenerateInputError
from src.metrics.config import SURFACE_SAMPLES
from src.sdfdata.mesh import TriMesh


def sample_surface(mesh: TriMesh, n: int = SURFACE_SAMPLES, seed: int = 0) -> np.ndarray:
    """Area-weighted uniform samples, (n, 3); same seed -> same points."""
    if n < 1:
        raise ConfigError(f"sample count must be at least 1, got {n}", field="n")
    if mesh.is_empty:
        raise DegenerateInputError("cannot sample the surface of an empty mesh", field="triangles")
    return mesh.sample_points(n, np.random.default_rng(seed))
