"""
Rotation primitives: Rodrigues exp/log maps and the orthogonal Procrustes solve.

Rotations are plain (3, 3) float64 numpy arrays; axis-angle vectors are (3,)
arrays whose norm is the angle in radians.

Public API:
- skew(v) -> (3, 3)
- rodrigues_exp(v) -> (3, 3)
- rodrigues_log(r) -> (3,)
- canonical_axis_angle(v) -> (3,)
- is_rotation(r, tol) -> bool
- procrustes_rotation(src, dst) -> (3, 3)
- procrustes_objective(r, src, dst) -> float
"""

from __future__ import annotations

import numpy as np

from src.errors import DegenerateInputError, NotARotationError

SMALL_ANGLE = 1e-8
ROTATION_TOL = 1e-6
# Below this cosine the axis is read from the symmetric part of R
ANTIPODAL_COS = -0.9
RANK_TOL = 1e-10


def skew(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that skew(v) @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def rodrigues_exp(v) -> np.ndarray:
    """Axis-angle vector -> rotation matrix.

    Uses the second-order Taylor expansion I + K + K^2/2 below SMALL_ANGLE.
    """
    v = np.asarray(v, dtype=np.float64).reshape(3)
    theta = float(np.linalg.norm(v))
    k = skew(v)
    if theta < SMALL_ANGLE:
        return np.eye(3) + k + 0.5 * (k @ k)
    k = k / theta
    return np.eye(3) + np.sin(theta) * k + (1.0 - np.cos(theta)) * (k @ k)


def is_rotation(r: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
        return False
    return abs(np.linalg.det(r) - 1.0) <= tol


def _first_nonzero_positive(axis: np.ndarray) -> np.ndarray:
    for c in axis:
        if abs(c) > 1e-12:
            return axis if c > 0 else -axis
    return axis


def rodrigues_log(r) -> np.ndarray:
    """Rotation matrix -> axis-angle vector with angle in [0, pi].

    At exactly pi the two axis signs describe the same rotation; the one whose
    first nonzero component is positive is returned.

    Args:
        r: 3x3 matrix, orthonormal with det +1 to within ROTATION_TOL.

    Returns:
        Length-3 vector whose norm is the angle.

    Raises:
        NotARotationError: r is not a rotation.
    """
    r = np.asarray(r, dtype=np.float64)
    if not is_rotation(r):
        raise NotARotationError("rodrigues_log: input is not a rotation matrix within 1e-6")

    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    cos_t = 0.5 * (np.trace(r) - 1.0)
    sin_t = 0.5 * float(np.linalg.norm(w))
    theta = float(np.arctan2(sin_t, cos_t))

    if theta < SMALL_ANGLE:
        return 0.5 * w

    if cos_t > ANTIPODAL_COS:
        return theta * w / (2.0 * sin_t)

    # Near pi: w vanishes, recover the axis from a a^T = (S - cos I) / (1 - cos)
    s = 0.5 * (r + r.T)
    m = (s - cos_t * np.eye(3)) / (1.0 - cos_t)
    i = int(np.argmax(np.diag(m)))
    axis = m[:, i] / np.sqrt(max(m[i, i], 0.0))
    axis = axis / np.linalg.norm(axis)
    proj = float(axis @ w)
    if abs(proj) > 1e-12:
        axis = axis if proj > 0 else -axis
    else:
        axis = _first_nonzero_positive(axis)
    return theta * axis


def canonical_axis_angle(v) -> np.ndarray:
    """Wrap an axis-angle vector to the representative with angle in [0, pi]."""
    return rodrigues_log(rodrigues_exp(v))


def procrustes_rotation(src, dst) -> np.ndarray:
    """R in SO(3) minimizing sum ||dst_i - R src_i||^2 (Kabsch with det correction).

    Args:
        src: (N, 3) points, already centered if translation should be ignored.
        dst: (N, 3) targets paired row by row with src.

    Raises DegenerateInputError when the cross-covariance has rank < 2.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    if src.shape != dst.shape:
        raise DegenerateInputError(
            f"procrustes_rotation: {len(src)} source points vs {len(dst)} target points")
    if len(src) < 2:
        raise DegenerateInputError("procrustes_rotation: need at least 2 point pairs")

    h = src.T @ dst
    u, s, vt = np.linalg.svd(h)
    if s[0] <= 0.0 or s[1] <= RANK_TOL * s[0]:
        raise DegenerateInputError("procrustes_rotation: point sets are collinear through the origin")

    v = vt.T
    d = np.sign(np.linalg.det(v @ u.T))
    if d == 0:
        d = 1.0
    return v @ np.diag([1.0, 1.0, d]) @ u.T


def procrustes_objective(r: np.ndarray, src, dst) -> float:
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    return float(np.sum((dst - src @ r.T) ** 2))
