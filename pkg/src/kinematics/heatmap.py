"""
Volumetric heatmap readout.

Cell c of a D^3 grid spanning [lo, hi] has its center at lo + (c + 0.5) * (hi - lo) / D
along each axis. The soft-argmax is the softmax-weighted mean of those centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.errors import DegenerateInputError, InputParseError

DEFAULT_RESOLUTION = 64


@dataclass(frozen=True, eq=False)
class VolumetricHeatmap:
    values: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3 or len(set(values.shape)) != 1 or values.shape[0] < 2:
            raise InputParseError(f"heatmap must be D x D x D with D >= 2, got {values.shape}", field="values")
        if np.any(np.isnan(values)) or np.any(values == np.inf):
            raise InputParseError("heatmap values must be finite (or -inf for masked cells)", field="values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=np.float64).reshape(3))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=np.float64).reshape(3))

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    def axis_centers(self) -> np.ndarray:
        """(3, D) cell-center coordinates per axis."""
        d = self.resolution
        frac = (np.arange(d) + 0.5) / d
        return self.lo[:, None] + frac[None, :] * (self.hi - self.lo)[:, None]


def soft_argmax(h: VolumetricHeatmap, temperature: float = 1.0) -> np.ndarray:
    """
    Args:
        h: heatmap; -inf cells get zero weight.
        temperature: divides the logits before the softmax, must be positive.
    """
    if temperature <= 0:
        raise DegenerateInputError("soft_argmax: temperature must be positive", field="temperature")
    logits = h.values / temperature
    top = np.max(logits)
    if not np.isfinite(top):
        raise DegenerateInputError("soft_argmax: every heatmap cell is -inf", field="values")
    w = np.exp(logits - top)
    w /= w.sum()
    centers = h.axis_centers()
    # separable expectation: marginalize onto each axis
    return np.array([
        w.sum(axis=(1, 2)) @ centers[0],
        w.sum(axis=(0, 2)) @ centers[1],
        w.sum(axis=(0, 1)) @ centers[2],
    ])


def gaussian_heatmap(center, lo, hi, resolution: int = DEFAULT_RESOLUTION, sigma: float = 0.02,
                     noise: float = 0.0, rng: np.random.Generator = None) -> VolumetricHeatmap:
    """Non-negative Gaussian bump exp(-d^2 / 2 sigma^2), optionally with additive noise clipped at 0."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    frac = (np.arange(resolution) + 0.5) / resolution
    ax = [lo[i] + frac * (hi[i] - lo[i]) for i in range(3)]
    c = np.asarray(center, dtype=np.float64)
    d2 = ((ax[0] - c[0]) ** 2)[:, None, None] + ((ax[1] - c[1]) ** 2)[None, :, None] + ((ax[2] - c[2]) ** 2)[None, None, :]
    values = np.exp(-d2 / (2.0 * sigma ** 2))
    if noise > 0:
        values = np.maximum(values + rng.normal(scale=noise, size=values.shape), 0.0)
    return VolumetricHeatmap(values, lo, hi)
