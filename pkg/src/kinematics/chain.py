"""
Forward and inverse kinematics over the hand skeleton.

Forward: walking the chain root -> tips, each pose joint k carries the global
rotation R_k = R_pa(k) exp(theta_k) and sits at R_pa(k) phi_k + psi_pa(k).
Fingertips are placed with their parent's rotation and the template bone.

Inverse: the wrist rotation comes from a Procrustes solve over the wrist solve
set (positions relative to the wrist); every other articulated joint gets the
minimal (zero-twist) rotation that turns its template bone onto the observed
bone direction expressed in the parent frame.

Public API:
- forward_kinematics(skel, pose) -> (joints (21, 3), list of 16 RigidTransform)
- inverse_kinematics(skel, observed) -> HandPose (degenerate_joints lists zero-length bones)
- align_vectors(a, b) -> axis-angle (3,)
- random_pose(skel, rng, limit) -> HandPose
"""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

from src.errors import DegenerateInputError
from src.geomcore.rotations import procrustes_rotation, rodrigues_exp, rodrigues_log
from src.geomcore.transforms import RigidTransform, random_rotation
from src.kinematics.skeleton import JOINT_COUNT, POSE_JOINT_COUNT, HandPose, HandSkeleton, as_joint_set

BONE_EPS = 1e-12


def forward_kinematics(skel: HandSkeleton, pose: HandPose) -> Tuple[np.ndarray, List[RigidTransform]]:
    """
    Place the 21 joints of a posed hand.

    Args:
        skel: bone tree and template joints.
        pose: per-joint axis-angle rotations theta plus translations phi.

    Returns:
        (joints, frames): (21, 3) world positions and each joint's world transform.
    """
    slot = skel.pose_slot
    rot = np.zeros((JOINT_COUNT, 3, 3))
    joints = np.zeros((JOINT_COUNT, 3))
    globals_: List[RigidTransform] = [None] * POSE_JOINT_COUNT

    for k in range(JOINT_COUNT):
        p = skel.parents[k]
        parent_rot = rot[p] if p >= 0 else np.eye(3)
        parent_pos = joints[p] if p >= 0 else np.zeros(3)
        if k in slot:
            i = slot[k]
            joints[k] = parent_rot @ pose.phi[i] + parent_pos
            rot[k] = parent_rot @ rodrigues_exp(pose.theta[i])
            globals_[i] = RigidTransform(rot[k], joints[k])
        else:
            # tip: no rotation of its own
            joints[k] = parent_rot @ (skel.template[k] - skel.template[p]) + parent_pos
            rot[k] = parent_rot
    return joints, globals_


def align_vectors(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimal rotation (axis-angle) taking direction a onto direction b."""
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    cross = np.cross(a, b)
    cos_t = float(np.clip(a @ b, -1.0, 1.0))
    angle = float(np.arccos(cos_t))
    norm = float(np.linalg.norm(cross))
    if norm < 1e-12:
        if cos_t > 0.0:
            return np.zeros(3)
        # antiparallel: any axis orthogonal to a
        helper = np.eye(3)[int(np.argmin(np.abs(a)))]
        axis = np.cross(a, helper)
        return np.pi * axis / np.linalg.norm(axis)
    return angle * cross / norm


def inverse_kinematics(skel: HandSkeleton, observed) -> HandPose:
    """
    Recover a pose whose forward kinematics reproduces `observed`.

    Args:
        skel: skeleton the pose refers to.
        observed: (21, 3) joint positions.

    Returns:
        HandPose; zero-length bones get theta = 0 and are listed in degenerate_joints.

    Raises:
        DegenerateInputError: the wrist solve joints are collinear with the wrist.
    """
    observed = as_joint_set(observed)
    slot = skel.pose_slot
    wrist = observed[0]

    src = skel.template[list(skel.wrist_solve_set)] - skel.template[0]
    dst = observed[list(skel.wrist_solve_set)] - wrist
    try:
        r_wrist = procrustes_rotation(src, dst)
    except DegenerateInputError:
        raise DegenerateInputError("inverse_kinematics: wrist solve joints are collinear with the wrist",
                                   field="wrist_solve_set")

    theta = np.zeros((POSE_JOINT_COUNT, 3))
    phi = skel.default_phi()
    theta[0] = rodrigues_log(r_wrist)
    phi[0] = wrist

    rot = {0: rodrigues_exp(theta[0])}
    degenerate = []
    for k in skel.pose_joints[1:]:
        child = skel.children(k)[0]
        parent_rot = rot[skel.parents[k]]
        bone_t = skel.template[child] - skel.template[k]
        bone_p = parent_rot.T @ (observed[child] - observed[k])
        if np.linalg.norm(bone_p) < BONE_EPS:
            degenerate.append(k)
            theta[slot[k]] = 0.0
        else:
            theta[slot[k]] = align_vectors(bone_t, bone_p)
        rot[k] = parent_rot @ rodrigues_exp(theta[slot[k]])

    return HandPose(theta, phi, degenerate_joints=tuple(degenerate))


def random_pose(skel: HandSkeleton, rng: np.random.Generator, limit: float = np.pi / 3) -> HandPose:
    """Wrist uniform over SO(3); finger joints componentwise uniform in [-limit, limit]."""
    theta = rng.uniform(-limit, limit, size=(POSE_JOINT_COUNT, 3))
    theta[0] = rodrigues_log(random_rotation(rng))
    return HandPose(theta, skel.default_phi())
