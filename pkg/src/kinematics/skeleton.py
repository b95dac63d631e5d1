"""
Hand skeleton and pose containers.

Joint ordering (fixed): wrist = 0, then per finger (thumb, index, middle,
ring, pinky) proximal -> tip, so tips sit at 4, 8, 12, 16, 20. The 16 pose
joints are the wrist plus the 15 non-tip finger joints.

Public API:
- HandSkeleton (frozen) with .children(k), .pose_slot, .default_phi(), .bone_lengths()
- HandPose (frozen) with .identity(skel), .from_dict(d, skel), .to_dict()
- as_joint_set(a) -> (21, 3) array
- load_skeleton(path), default_skeleton(), skeleton_to_dict(skel)
- load_pose(path, skel), save_pose(pose, path)
- load_joints(path), save_joints(joints, path)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import ConfigError, InputParseError

JOINT_COUNT = 21
POSE_JOINT_COUNT = 16
FINGER_NAMES = ("thumb", "index", "middle", "ring", "pinky")
TIP_JOINTS = (4, 8, 12, 16, 20)

TEMPLATE_PATH = os.path.join(os.path.dirname(__file__), "data", "hand_template.json")


@dataclass(frozen=True, eq=False)
class HandSkeleton:
    parents: Tuple[int, ...]
    template: np.ndarray
    pose_joints: Tuple[int, ...]
    wrist_solve_set: Tuple[int, ...]

    def __post_init__(self):
        template = np.array(self.template, dtype=np.float64).reshape(-1, 3)
        template.setflags(write=False)
        object.__setattr__(self, "template", template)
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        object.__setattr__(self, "pose_joints", tuple(int(j) for j in self.pose_joints))
        object.__setattr__(self, "wrist_solve_set", tuple(int(j) for j in self.wrist_solve_set))
        self._validate()

    def _validate(self):
        if len(self.parents) != JOINT_COUNT or len(self.template) != JOINT_COUNT:
            raise ConfigError(f"skeleton needs {JOINT_COUNT} parents and template joints", field="parents")
        if self.parents[0] != -1:
            raise ConfigError("joint 0 (wrist) must be the root", field="parents")
        for k in range(1, JOINT_COUNT):
            if not 0 <= self.parents[k] < k:
                raise ConfigError(f"joint {k}: parent {self.parents[k]} must precede it", field="parents")
        if len(self.pose_joints) != POSE_JOINT_COUNT or self.pose_joints[0] != 0:
            raise ConfigError("pose_joints must list 16 joints starting with the wrist", field="pose_joints")
        if len(set(self.pose_joints)) != POSE_JOINT_COUNT:
            raise ConfigError("pose_joints contains duplicates", field="pose_joints")
        for k in self.pose_joints[1:]:
            if len(self.children(k)) != 1:
                raise ConfigError(f"articulated joint {k} must have exactly one child", field="pose_joints")
        roots = self.children(0)
        if len(roots) != 5:
            raise ConfigError("wrist must have five finger chains", field="parents")
        for root in roots:
            chain = [root]
            while self.children(chain[-1]):
                chain.append(self.children(chain[-1])[0])
            if len(chain) != 4 or chain[-1] in self.pose_joints or any(j not in self.pose_joints for j in chain[:-1]):
                raise ConfigError(f"finger starting at {root} is not a 3+tip chain", field="parents")
        if len(self.wrist_solve_set) != 3:
            raise ConfigError("wrist_solve_set must hold 3 joints", field="wrist_solve_set")
        if np.any(self.bone_lengths() <= 0.0):
            raise ConfigError("template bone lengths must be strictly positive", field="template")

    def children(self, k: int) -> List[int]:
        return [j for j, p in enumerate(self.parents) if p == k]

    @property
    def pose_slot(self) -> Dict[int, int]:
        """joint index -> position in the 16-entry pose arrays."""
        return {j: i for i, j in enumerate(self.pose_joints)}

    def bone_lengths(self) -> np.ndarray:
        idx = np.arange(1, JOINT_COUNT)
        par = np.array(self.parents[1:])
        return np.linalg.norm(self.template[idx] - self.template[par], axis=1)

    def default_phi(self) -> np.ndarray:
        """Template offsets psi_t,k - psi_t,pa(k); the wrist offset is its template position."""
        phi = np.zeros((POSE_JOINT_COUNT, 3))
        for slot, k in enumerate(self.pose_joints):
            p = self.parents[k]
            phi[slot] = self.template[k] - (self.template[p] if p >= 0 else 0.0)
        return phi


@dataclass(frozen=True, eq=False)
class HandPose:
    theta: np.ndarray
    phi: np.ndarray
    degenerate_joints: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64).reshape(POSE_JOINT_COUNT, 3)
        phi = np.array(self.phi, dtype=np.float64).reshape(POSE_JOINT_COUNT, 3)
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
            raise InputParseError("hand pose contains non-finite values", field="theta")
        theta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def identity(cls, skel: HandSkeleton) -> "HandPose":
        return cls(np.zeros((POSE_JOINT_COUNT, 3)), skel.default_phi())

    @classmethod
    def from_dict(cls, data: dict, skel: HandSkeleton) -> "HandPose":
        if "theta" not in data:
            raise InputParseError("pose JSON is missing 'theta'", field="theta")
        theta = np.asarray(data["theta"], dtype=np.float64)
        if theta.shape != (POSE_JOINT_COUNT, 3):
            raise InputParseError(f"theta must be 16x3, got {theta.shape}", field="theta")
        phi = data.get("phi")
        if phi is None:
            phi = skel.default_phi()
        else:
            phi = np.asarray(phi, dtype=np.float64)
            if phi.shape != (POSE_JOINT_COUNT, 3):
                raise InputParseError(f"phi must be 16x3, got {phi.shape}", field="phi")
        return cls(theta, phi)

    def to_dict(self) -> dict:
        out = {"theta": self.theta.tolist(), "phi": self.phi.tolist()}
        if self.degenerate_joints:
            out["degenerate_joints"] = list(self.degenerate_joints)
        return out


def as_joint_set(a) -> np.ndarray:
    joints = np.asarray(a, dtype=np.float64)
    if joints.shape != (JOINT_COUNT, 3):
        raise InputParseError(f"joint set must be 21x3, got {joints.shape}", field="joints")
    if not np.all(np.isfinite(joints)):
        raise InputParseError("joint set contains non-finite values", field="joints")
    return joints


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}", file=path)
    except json.JSONDecodeError as e:
        raise InputParseError(f"invalid JSON: {e}", file=path)


def skeleton_from_dict(data: dict, source: Optional[str] = None) -> HandSkeleton:
    for key in ("parents", "template", "pose_joints", "wrist_solve_set"):
        if key not in data:
            raise InputParseError(f"skeleton JSON is missing '{key}'", file=source, field=key)
    try:
        return HandSkeleton(
            parents=tuple(data["parents"]),
            template=np.asarray(data["template"], dtype=np.float64),
            pose_joints=tuple(data["pose_joints"]),
            wrist_solve_set=tuple(data["wrist_solve_set"]),
        )
    except ConfigError as e:
        e.file = source
        raise


def skeleton_to_dict(skel: HandSkeleton) -> dict:
    return {
        "parents": list(skel.parents),
        "template": skel.template.tolist(),
        "pose_joints": list(skel.pose_joints),
        "wrist_solve_set": list(skel.wrist_solve_set),
    }


def load_skeleton(path: str) -> HandSkeleton:
    return skeleton_from_dict(_read_json(path), source=path)


@lru_cache(maxsize=1)
def default_skeleton() -> HandSkeleton:
    return load_skeleton(TEMPLATE_PATH)


def load_pose(path: str, skel: HandSkeleton) -> HandPose:
    try:
        return HandPose.from_dict(_read_json(path), skel)
    except InputParseError as e:
        e.file = path
        raise


def save_pose(pose: HandPose, path: str):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(pose.to_dict(), f, indent=2)


def load_joints(path: str) -> np.ndarray:
    """Joint JSON: {"joints": [[x, y, z] * 21]} (a bare 21x3 list is accepted too)."""
    data = _read_json(path)
    try:
        return as_joint_set(data["joints"] if isinstance(data, dict) else data)
    except KeyError:
        raise InputParseError("joint JSON is missing 'joints'", file=path, field="joints")
    except InputParseError as e:
        e.file = path
        raise


def save_joints(joints: np.ndarray, path: str):
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"joints": as_joint_set(joints).tolist()}, f, indent=2)
