"""
Rigid transforms (rotation + translation) acting on points.

A RigidTransform stands in for the 4x4 homogeneous matrix [[R, t], [0, 1]];
lifting a point to homogeneous coordinates and dropping it again is what
`apply` does, so no 4-vectors are ever materialized.

Public API:
- RigidTransform(r, t) with .apply(p), .inverse(), .compose(other), .as_matrix()
- transform_point(g, p), invert(g), compose(a, b)
- random_rotation(rng), random_transform(rng, translation_scale)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from src.errors import NotARotationError
from src.geomcore.rotations import is_rotation

RIGID_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class RigidTransform:
    r: np.ndarray
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.r, dtype=np.float64).reshape(3, 3)
        t = np.array(self.t, dtype=np.float64).reshape(3)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "RigidTransform":
        m = np.asarray(m, dtype=np.float64)
        return cls(m[:3, :3], m[:3, 3])

    def validate(self, tol: float = RIGID_TOL) -> "RigidTransform":
        if not is_rotation(self.r, tol):
            raise NotARotationError(f"rotation part fails R^T R = I / det = +1 within {tol}")
        return self

    def apply(self, p) -> np.ndarray:
        """Transform a (3,) point or an (N, 3) array of points."""
        p = np.asarray(p, dtype=np.float64)
        return p @ self.r.T + self.t

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.r.T, -(self.r.T @ self.t))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: x -> self(other(x))."""
        return RigidTransform(self.r @ other.r, self.r @ other.t + self.t)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.r
        m[:3, 3] = self.t
        return m


def transform_point(g: RigidTransform, p) -> np.ndarray:
    return g.apply(p)


def invert(g: RigidTransform) -> RigidTransform:
    return g.inverse()


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    return a.compose(b)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform rotation over SO(3) from a random unit quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def random_transform(rng: np.random.Generator, translation_scale: float = 1.0) -> RigidTransform:
    """
    Random rigid transform for tests and benchmarks.

    Args:
        rng: source of randomness; the rotation is drawn first.
        translation_scale: each translation component is uniform in +-scale.
    """
    return RigidTransform(random_rotation(rng), rng.uniform(-translation_scale, translation_scale, 3))
