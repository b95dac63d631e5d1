"""
Dense scalar-field sampling on a corner-aligned lattice.

Lattice point (i, j, k) sits at lo + (i, j, k) * (hi - lo) / (n - 1): the
first sample is at `lo`, the last at `hi`.

Public API:
- ScalarGrid(values, lo, hi) with .resolution, .spacing, .axes(), .points()
- evaluate_grid(f, bounds, n, threads=1) -> ScalarGrid
- sphere_field(radius, center) -> vectorized analytic SDF
- decoder_field(params, features_fn, e_v=None) -> vectorized decoder SDF
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from src.decoder.mlp import MlpParams, predict
from src.errors import ConfigError, InputParseError, NonFiniteFieldError

DEFAULT_RESOLUTION = 64
GRID_CHUNK = 32768

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ScalarGrid:
    values: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3 or min(values.shape) < 2:
            raise InputParseError(f"grid must be 3D with at least 2 samples per axis, got {values.shape}", field="values")
        if not np.all(np.isfinite(values)):
            raise InputParseError("grid contains non-finite values", field="values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=np.float64).reshape(3))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=np.float64).reshape(3))

    @property
    def resolution(self) -> Tuple[int, int, int]:
        return tuple(self.values.shape)

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.array(self.values.shape) - 1)

    def axes(self):
        return [np.linspace(self.lo[a], self.hi[a], self.values.shape[a]) for a in range(3)]

    def points(self) -> np.ndarray:
        return _lattice(self.lo, self.hi, self.values.shape)


def _lattice(lo, hi, shape) -> np.ndarray:
    axes = [np.linspace(lo[a], hi[a], shape[a]) for a in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)


def evaluate_grid(f: Field, bounds, n: int = DEFAULT_RESOLUTION, threads: int = 1,
                  chunk: int = GRID_CHUNK) -> ScalarGrid:
    """Evaluate a vectorized field f((M, 3)) -> (M,) at every lattice point."""
    if n < 2:
        raise ConfigError(f"grid resolution must be at least 2, got {n}", field="res")
    lo, hi = (np.asarray(b, dtype=np.float64).reshape(3) for b in bounds)
    if np.any(hi <= lo):
        raise ConfigError("grid bounds need max > min on every axis", field="bounds")
    pts = _lattice(lo, hi, (n, n, n))
    chunks = [pts[s:s + chunk] for s in range(0, len(pts), chunk)]

    def run(block):
        return np.asarray(f(block), dtype=np.float64).reshape(len(block))

    if threads <= 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            parts = list(executor.map(run, chunks))
    values = np.concatenate(parts)

    bad = np.flatnonzero(~np.isfinite(values))
    if len(bad):
        i, j, k = np.unravel_index(bad[0], (n, n, n))
        raise NonFiniteFieldError(
            f"field value {values[bad[0]]} at lattice point ({i}, {j}, {k}) = {pts[bad[0]].tolist()}",
            field="values")
    return ScalarGrid(values.reshape(n, n, n), lo, hi)


def sphere_field(radius: float, center=(0.0, 0.0, 0.0)) -> Field:
    c = np.asarray(center, dtype=np.float64)
    return lambda p: np.linalg.norm(np.asarray(p) - c, axis=1) - radius


def decoder_field(params: MlpParams, features_fn: Callable[[np.ndarray], np.ndarray], e_v=None) -> Field:
    """e_v is a fixed vector, None (zeros) or a provider called on the same points as features_fn."""
    if callable(e_v):
        return lambda p: predict(params, features_fn(p), e_v(p))
    return lambda p: predict(params, features_fn(p), e_v)
