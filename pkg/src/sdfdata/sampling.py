"""
Unit-cube normalization and SDF sample generation.

Samples are drawn in the normalized frame: `near_fraction` of them are
area-weighted surface points (split evenly between hand and object) pushed
off the surface by isotropic Gaussian noise whose sigma alternates between
the two configured scales; the rest are uniform in [-0.5, 0.5]^3. Positions
are clipped to the cube and rounded to float32 before distances are taken,
so a stored sample and its distances always agree.

Public API:
- NormalizationTransform(offset, scale) with .apply(p), .invert(p), .to_dict(), .from_dict(d)
- normalize_to_unit_cube(meshes) -> (NormalizationTransform, meshes)
- SdfSample, SampleSet
- draw_positions(hand, obj, count, rng, near_fraction, sigmas) -> (count, 3)
- generate_dataset(hand, obj, count, seed, near_fraction, ...) -> SampleSet
- balanced_indices(samples, n_per_side, which, seed) / balanced_batch(...) -> List[SdfSample]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConfigError, DegenerateInputError, ShortageError
from src.sdfdata import config
from src.sdfdata.distance import signed_distances
from src.sdfdata.mesh import TriMesh


@dataclass(frozen=True, eq=False)
class NormalizationTransform:
    offset: np.ndarray
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=np.float64).reshape(3))
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise DegenerateInputError(f"normalization scale must be positive, got {self.scale}", field="scale")
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def identity(cls) -> "NormalizationTransform":
        return cls(np.zeros(3), 1.0)

    def apply(self, p) -> np.ndarray:
        return (np.asarray(p, dtype=np.float64) - self.offset) * self.scale

    def invert(self, p) -> np.ndarray:
        return np.asarray(p, dtype=np.float64) / self.scale + self.offset

    def to_dict(self) -> Dict[str, Any]:
        return {"offset": self.offset.tolist(), "scale": self.scale}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NormalizationTransform":
        return cls(np.asarray(data["offset"], dtype=np.float64), float(data["scale"]))


def normalize_to_unit_cube(meshes: Sequence[TriMesh]) -> Tuple[NormalizationTransform, List[TriMesh]]:
    verts = [m.vertices for m in meshes if len(m.vertices)]
    if not verts:
        raise DegenerateInputError("cannot normalize: no vertices", field="vertices")
    allv = np.concatenate(verts)
    lo, hi = allv.min(axis=0), allv.max(axis=0)
    extent = float(np.max(hi - lo))
    if extent <= 0:
        raise DegenerateInputError("cannot normalize: bounding box has zero extent", field="vertices")
    t = NormalizationTransform((lo + hi) / 2.0, 1.0 / extent)
    return t, [m.with_vertices(t.apply(m.vertices)) for m in meshes]


@dataclass(frozen=True)
class SdfSample:
    position: Tuple[float, float, float]
    sdf_hand: float
    sdf_obj: float


@dataclass(eq=False)
class SampleSet:
    """Columnar sample storage: positions (N, 3), sdf_hand (N,), sdf_obj (N,)."""

    positions: np.ndarray
    sdf_hand: np.ndarray
    sdf_obj: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.sdf_hand = np.asarray(self.sdf_hand, dtype=np.float64).reshape(-1)
        self.sdf_obj = np.asarray(self.sdf_obj, dtype=np.float64).reshape(-1)
        n = len(self.positions)
        if len(self.sdf_hand) != n or len(self.sdf_obj) != n:
            raise ConfigError("sample columns have different lengths", field="count")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def seed(self) -> Optional[int]:
        return self.metadata.get("seed")

    @property
    def normalization(self) -> NormalizationTransform:
        if "offset" in self.metadata:
            return NormalizationTransform.from_dict(self.metadata)
        return NormalizationTransform.identity()

    def sdf(self, which: str) -> np.ndarray:
        if which == "hand":
            return self.sdf_hand
        if which == "object":
            return self.sdf_obj
        raise ConfigError(f"unknown target '{which}' (expected hand or object)", field="which")

    def sample(self, i: int) -> SdfSample:
        return SdfSample(tuple(float(c) for c in self.positions[i]), float(self.sdf_hand[i]), float(self.sdf_obj[i]))

    def samples(self) -> Iterator[SdfSample]:
        for i in range(len(self)):
            yield self.sample(i)

    def subset(self, idx) -> "SampleSet":
        idx = np.asarray(idx, dtype=np.int64)
        return SampleSet(self.positions[idx], self.sdf_hand[idx], self.sdf_obj[idx], dict(self.metadata))


def draw_positions(hand: TriMesh, obj: TriMesh, count: int, rng: np.random.Generator,
                   near_fraction: float = config.NEAR_FRACTION,
                   sigmas: Sequence[float] = config.NOISE_SIGMAS) -> np.ndarray:
    """Sample positions for already-normalized meshes, float32-representable, (count, 3)."""
    n_near = int(round(count * near_fraction))
    n_hand = (n_near + 1) // 2
    parts = []
    if n_hand:
        parts.append(hand.sample_points(n_hand, rng))
    if n_near - n_hand:
        parts.append(obj.sample_points(n_near - n_hand, rng))
    if n_near:
        sig = np.asarray(sigmas, dtype=np.float64)[np.arange(n_near) % len(sigmas)]
        parts = [np.concatenate(parts) + rng.normal(size=(n_near, 3)) * sig[:, None]]
    h = config.CUBE_HALF_EXTENT
    parts.append(rng.uniform(-h, h, size=(count - n_near, 3)))
    return np.clip(np.concatenate(parts), -h, h).astype(np.float32).astype(np.float64)


def generate_dataset(hand: TriMesh, obj: TriMesh, count: int = config.SAMPLE_COUNT, seed: int = 0,
                     near_fraction: float = config.NEAR_FRACTION,
                     sigmas: Sequence[float] = config.NOISE_SIGMAS, threads: int = 1,
                     sources: Optional[Dict[str, str]] = None) -> SampleSet:
    if count < 1:
        raise ConfigError(f"count must be at least 1, got {count}", field="count")
    if not 0.0 <= near_fraction <= 1.0:
        raise ConfigError(f"near_fraction must lie in [0, 1], got {near_fraction}", field="near_fraction")
    if len(sigmas) == 0 or any(s < 0 for s in sigmas):
        raise ConfigError("noise sigmas must be a non-empty list of non-negative values", field="sigmas")

    norm, (hand_n, obj_n) = normalize_to_unit_cube([hand, obj])
    positions = draw_positions(hand_n, obj_n, count, np.random.default_rng(seed), near_fraction, sigmas)
    sdf_hand = signed_distances(hand_n, positions, threads=threads)
    sdf_obj = signed_distances(obj_n, positions, threads=threads)

    metadata = {
        **norm.to_dict(),
        "seed": int(seed),
        "count": int(count),
        "near_fraction": float(near_fraction),
        "sigmas": [float(s) for s in sigmas],
        "sign_reliable": {"hand": hand_n.watertight, "object": obj_n.watertight},
        "paths": dict(sources or {}),
    }
    return SampleSet(positions, sdf_hand, sdf_obj, metadata)


def balanced_indices(samples: SampleSet, n_per_side: int, which: str, seed: int) -> np.ndarray:
    """n_per_side negative (inside) then n_per_side non-negative indices, drawn without replacement.

    A sample with sdf exactly 0 lies on the surface and is drawn with the outside half.
    """
    if n_per_side < 0:
        raise ConfigError(f"n_per_side must be non-negative, got {n_per_side}", field="n_per_side")
    sdf = samples.sdf(which)
    neg = np.flatnonzero(sdf < 0)
    pos = np.flatnonzero(sdf >= 0)
    if len(neg) < n_per_side:
        raise ShortageError(f"{which}: need {n_per_side} negative samples, only {len(neg)} available", "negative")
    if len(pos) < n_per_side:
        raise ShortageError(f"{which}: need {n_per_side} positive samples, only {len(pos)} available", "positive")
    rng = np.random.default_rng(seed)
    return np.concatenate([
        rng.choice(neg, size=n_per_side, replace=False),
        rng.choice(pos, size=n_per_side, replace=False),
    ]).astype(np.int64)


def balanced_batch(samples: SampleSet, n_per_side: int, which: str = "hand", seed: int = 0) -> List[SdfSample]:
    return [samples.sample(i) for i in balanced_indices(samples, n_per_side, which, seed)]
