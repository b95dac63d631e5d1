"""
Synthetic hand-object scenes with analytic ground truth.

The "hand" is a union of capsules swept along the posed bones (thicker
capsules from the wrist to each finger root and across the knuckles). The
object is a sphere, box or cylinder placed against the palm side of the
hand. Predicted joints are read out of per-joint Gaussian heatmaps by
soft-argmax and re-solved through IK + FK, so features built from them carry
realistic pose error. Each scene also carries a synthetic camera view whose
feature grid holds one Gaussian blob per predicted joint and one for the
predicted object center. Ground-truth meshes come from marching cubes of the
analytic fields; SDF samples use the analytic fields directly.

Public API:
- capsule_union_sdf(points, a, b, radii)
- hand_capsules(joints, skel) -> (a, b, radii)
- ObjectShape (kind, center, rotation, size) with .sdf(points)
- BenchmarkScene with .hand_sdf, .obj_sdf, .context(predicted), .cube_context(), .visual_features(positions, mode)
- scene_camera(), render_feature_grid(points, cam, to_camera), scene_view(pred_joints, pred_center)
- make_scene(index, seed, skel) / make_scenes(count, seed, skel, threads, first_index)
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np

from src.benchmark import config
from src.features.kinematic import KinematicContext
from src.features.visual import Camera, FeatureGrid, VisualSource, project_point
from src.geomcore.transforms import RigidTransform, random_rotation
from src.kinematics.chain import forward_kinematics, inverse_kinematics, random_pose
from src.kinematics.heatmap import gaussian_heatmap, soft_argmax
from src.kinematics.skeleton import HandPose, HandSkeleton
from src.reconstruct.extraction import marching_cubes
from src.reconstruct.grid import evaluate_grid
from src.sdfdata.mesh import TriMesh
from src.sdfdata.sampling import NormalizationTransform, SampleSet, draw_positions, normalize_to_unit_cube

FINGER_ROOTS = (1, 5, 9, 13, 17)
KNUCKLE_PAIRS = ((1, 5), (5, 9), (9, 13), (13, 17))
PALM_JOINTS = (0, 5, 9, 13, 17)
SDF_CHUNK = 16384


def capsule_union_sdf(points, a: np.ndarray, b: np.ndarray, radii: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    ab = b - a
    ab2 = np.maximum((ab ** 2).sum(axis=1), np.finfo(float).tiny)
    out = np.empty(len(pts))
    for s in range(0, len(pts), SDF_CHUNK):
        ap = pts[s:s + SDF_CHUNK, None, :] - a[None, :, :]
        t = np.clip((ap * ab[None]).sum(axis=2) / ab2[None], 0.0, 1.0)
        d = np.linalg.norm(ap - t[:, :, None] * ab[None], axis=2) - radii[None]
        out[s:s + SDF_CHUNK] = d.min(axis=1)
    return out


def hand_capsules(joints: np.ndarray, skel: HandSkeleton) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    a, b, r = [], [], []
    for k in range(1, len(skel.parents)):
        a.append(joints[skel.parents[k]])
        b.append(joints[k])
        r.append(config.PALM_RADIUS if k in FINGER_ROOTS else config.BONE_RADIUS)
    for i, j in KNUCKLE_PAIRS:
        a.append(joints[i])
        b.append(joints[j])
        r.append(config.PALM_RADIUS)
    return np.array(a), np.array(b), np.array(r)


@dataclass(frozen=True, eq=False)
class ObjectShape:
    """size: sphere (r, r, r), box half extents, cylinder (r, r, half height) along local z."""

    kind: str
    center: np.ndarray
    rotation: np.ndarray
    size: np.ndarray

    def local(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64).reshape(-1, 3) - self.center) @ self.rotation

    def sdf(self, points) -> np.ndarray:
        q = self.local(points)
        if self.kind == "sphere":
            return np.linalg.norm(q, axis=1) - self.size[0]
        if self.kind == "box":
            d = np.abs(q) - self.size
        else:
            d = np.stack([np.linalg.norm(q[:, :2], axis=1) - self.size[0], np.abs(q[:, 2]) - self.size[2]], axis=1)
        return np.linalg.norm(np.maximum(d, 0.0), axis=1) + np.minimum(d.max(axis=1), 0.0)

    def support(self, direction: np.ndarray) -> float:
        """Extent of the shape along a unit direction, measured from its center."""
        u = self.rotation.T @ direction
        if self.kind == "sphere":
            return float(self.size[0])
        if self.kind == "box":
            return float(np.abs(u) @ self.size)
        return float(self.size[0] * np.sqrt(max(0.0, 1.0 - u[2] ** 2)) + self.size[2] * abs(u[2]))

    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.size) if self.kind != "sphere" else self.size[0])


def _random_object(rng: np.random.Generator) -> Tuple[str, np.ndarray]:
    kind = config.OBJECT_KINDS[int(rng.integers(len(config.OBJECT_KINDS)))]
    if kind == "sphere":
        r = rng.uniform(0.03, 0.045)
        return kind, np.array([r, r, r])
    if kind == "box":
        return kind, rng.uniform(0.02, 0.04, size=3)
    r = rng.uniform(0.02, 0.035)
    return kind, np.array([r, r, rng.uniform(0.03, 0.05)])


@dataclass(eq=False)
class BenchmarkScene:
    index: int
    pose: HandPose
    joints: np.ndarray
    globals_: List[RigidTransform]
    pred_joints: np.ndarray
    pred_globals: List[RigidTransform]
    obj: ObjectShape
    pred_center: np.ndarray
    capsules: Tuple[np.ndarray, np.ndarray, np.ndarray]
    hand_mesh: TriMesh = None
    obj_mesh: TriMesh = None
    normalization: NormalizationTransform = None
    samples: SampleSet = None
    view: VisualSource = None

    def hand_sdf(self, points) -> np.ndarray:
        return capsule_union_sdf(points, *self.capsules)

    def obj_sdf(self, points) -> np.ndarray:
        return self.obj.sdf(points)

    def context(self, predicted: bool = True) -> KinematicContext:
        if predicted:
            return KinematicContext(self.pred_joints, self.pred_globals, self.pred_center)
        return KinematicContext(self.joints, self.globals_, self.obj.center)

    def cube_context(self, predicted: bool = True) -> KinematicContext:
        return self.context(predicted).normalized(self.normalization.offset, self.normalization.scale)

    def visual_features(self, positions, mode: str) -> np.ndarray:
        """e_v rows for normalized-cube positions under visual mode "v1" or "v2"."""
        return replace(self.view, mode=mode).features(self.normalization.invert(positions))


def read_joints_from_heatmaps(joints: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    lo = joints.min(axis=0) - config.HEATMAP_MARGIN
    hi = joints.max(axis=0) + config.HEATMAP_MARGIN
    out = np.empty_like(joints)
    for k, j in enumerate(joints):
        center = j + rng.normal(scale=config.JOINT_NOISE, size=3)
        h = gaussian_heatmap(center, lo, hi, config.HEATMAP_RES, config.HEATMAP_SIGMA)
        out[k] = soft_argmax(h, config.SOFTARGMAX_TEMPERATURE)
    return out

def scene_camera() -> Camera:
    size = config.IMAGE_SIZE
    return Camera(config.CAMERA_FOCAL, config.CAMERA_FOCAL, size / 2.0, size / 2.0, size, size)


def render_feature_grid(points: np.ndarray, cam: Camera, to_camera: RigidTransform,
                        size: int = config.FEATURE_GRID_SIZE, sigma: float = config.FEATURE_BLOB_SIGMA) -> FeatureGrid:
    """One channel per point: a Gaussian blob (sigma in pixels) at its projection, sampled at cell centers."""
    pts = to_camera.apply(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    uv = np.array([project_point(cam, p) for p in pts])
    cu = (np.arange(size) + 0.5) * cam.width / size
    cv = (np.arange(size) + 0.5) * cam.height / size
    du = cu[None, :, None] - uv[None, None, :, 0]
    dv = cv[:, None, None] - uv[None, None, :, 1]
    return FeatureGrid(np.exp(-(du ** 2 + dv ** 2) / (2.0 * sigma ** 2)))


def scene_view(pred_joints: np.ndarray, pred_center: np.ndarray) -> VisualSource:
    """Camera on the -z side of the predicted palm, looking down +z, with its rendered grid."""
    palm = pred_joints[list(PALM_JOINTS)].mean(axis=0)
    to_camera = RigidTransform(np.eye(3), np.array([0.0, 0.0, config.CAMERA_DISTANCE]) - palm)
    cam = scene_camera()
    grid = render_feature_grid(np.vstack([pred_joints, pred_center[None]]), cam, to_camera)
    return VisualSource(grid, cam, "v2", to_camera)


def _field_mesh(f, lo: np.ndarray, hi: np.ndarray) -> TriMesh:
    grid = evaluate_grid(f, (lo, hi), config.GT_MESH_RES)
    return marching_cubes(grid).mesh


def make_scene(index: int, seed, skel: HandSkeleton, samples_per_scene: int = config.SAMPLES_PER_SCENE) -> BenchmarkScene:
    rng = np.random.default_rng(seed)
    pose = random_pose(skel, rng, config.FINGER_LIMIT)
    joints, globals_ = forward_kinematics(skel, pose)

    kind, size = _random_object(rng)
    rotation = random_rotation(rng)
    normal = globals_[0].r @ np.array([0.0, 0.0, 1.0])
    palm = joints[list(PALM_JOINTS)].mean(axis=0)
    shape = ObjectShape(kind, np.zeros(3), rotation, size)
    center = palm + normal * (config.PALM_RADIUS + config.OBJECT_GAP + shape.support(normal))
    obj = ObjectShape(kind, center, rotation, size)

    observed = read_joints_from_heatmaps(joints, rng)
    pred_pose = inverse_kinematics(skel, observed)
    pred_joints, pred_globals = forward_kinematics(skel, pred_pose)
    pred_center = center + rng.normal(scale=config.CENTER_NOISE, size=3)

    scene = BenchmarkScene(index, pose, joints, globals_, pred_joints, pred_globals, obj, pred_center,
                           hand_capsules(joints, skel))
    scene.view = scene_view(pred_joints, pred_center)

    pad = config.PALM_RADIUS + config.GT_MESH_MARGIN
    scene.hand_mesh = _field_mesh(scene.hand_sdf, joints.min(axis=0) - pad, joints.max(axis=0) + pad)
    reach = obj.bounding_radius() + config.GT_MESH_MARGIN
    scene.obj_mesh = _field_mesh(scene.obj_sdf, center - reach, center + reach)

    norm, (hand_n, obj_n) = normalize_to_unit_cube([scene.hand_mesh, scene.obj_mesh])
    positions = draw_positions(hand_n, obj_n, samples_per_scene, rng)
    world = norm.invert(positions)
    scene.normalization = norm
    scene.samples = SampleSet(positions, scene.hand_sdf(world) * norm.scale, scene.obj_sdf(world) * norm.scale,
                              {**norm.to_dict(), "scene": index, "object": kind})
    return scene


def make_scenes(count: int, seed: int, skel: HandSkeleton, threads: int = 1, first_index: int = 0,
                samples_per_scene: int = config.SAMPLES_PER_SCENE) -> List[BenchmarkScene]:
    """Scenes first_index .. first_index + count - 1 of the stream defined by seed."""
    seeds = np.random.SeedSequence(seed).spawn(first_index + count)[first_index:]
    jobs = list(zip(range(first_index, first_index + count), seeds))

    def build(job):
        return make_scene(job[0], job[1], skel, samples_per_scene)

    if threads <= 1:
        return [build(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(build, jobs))
