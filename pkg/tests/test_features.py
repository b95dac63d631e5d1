import json

import numpy as np
import pytest
from scipy.interpolate import RegularGridInterpolator

from src.errors import BehindCameraError, ConfigError, DimensionMismatchError, InputParseError
from src.features.kinematic import (
    FEATURE_DIMS,
    HAND_MODES,
    OBJECT_MODES,
    KinematicContext,
    hand_kinematic_feature,
    kinematic_features,
    object_kinematic_feature,
)
from src.features.visual import (
    Camera,
    FeatureGrid,
    VisualSource,
    load_camera,
    load_feature_grid,
    project_point,
    sample_bilinear,
    save_camera,
    save_feature_grid,
    visual_features,
)
from src.geomcore.transforms import RigidTransform, compose, random_transform
from src.kinematics.chain import forward_kinematics, inverse_kinematics, random_pose
from src.kinematics.skeleton import HandPose


@pytest.fixture
def posed(skel, rng):
    joints, globals_ = forward_kinematics(skel, random_pose(skel, rng))
    return joints, globals_


def test_feature_dimensions(posed, rng):
    joints, globals_ = posed
    x = rng.normal(size=3)
    assert hand_kinematic_feature(x, globals_).shape == (51,)
    assert object_kinematic_feature(x, np.zeros(3), joints, globals_[0]).shape == (72,)
    batch = rng.normal(size=(7, 3))
    assert hand_kinematic_feature(batch, globals_).shape == (7, 51)
    assert object_kinematic_feature(batch, np.zeros(3), joints, globals_[0]).shape == (7, 72)


def test_identity_pose_hand_feature_is_offset_from_joints(skel, rng):
    _, globals_ = forward_kinematics(skel, HandPose.identity(skel))
    x = rng.normal(size=3)
    feat = hand_kinematic_feature(x, globals_)
    assert np.allclose(feat[:3], x)
    expected = (x[None] - skel.template[list(skel.pose_joints)]).reshape(-1)
    assert np.allclose(feat[3:], expected, atol=1e-12)


def test_point_at_joint_has_zero_local_coordinates(skel, posed):
    joints, globals_ = posed
    feat = hand_kinematic_feature(joints[6], globals_)
    slot = skel.pose_slot[6]
    assert np.allclose(feat[3 + 3 * slot: 6 + 3 * slot], 0.0, atol=1e-12)


def test_hand_feature_rigid_invariance(posed, rng):
    _, globals_ = posed
    for _ in range(100):
        g = random_transform(rng, 0.5)
        x = rng.normal(scale=0.1, size=3)
        moved = [compose(g, gi) for gi in globals_]
        a = hand_kinematic_feature(x, globals_)[3:]
        b = hand_kinematic_feature(g.apply(x), moved)[3:]
        assert np.max(np.abs(a - b)) < 1e-5


def test_hand_feature_invariant_after_ik_resolve(skel, rng):
    joints, _ = forward_kinematics(skel, random_pose(skel, rng))
    for _ in range(20):
        g = random_transform(rng, 0.5)
        x = rng.normal(scale=0.1, size=3)
        _, base = forward_kinematics(skel, inverse_kinematics(skel, joints))
        _, moved = forward_kinematics(skel, inverse_kinematics(skel, g.apply(joints)))
        a = hand_kinematic_feature(x, base)[3:]
        b = hand_kinematic_feature(g.apply(x), moved)[3:]
        assert np.max(np.abs(a - b)) < 1e-5


def test_object_feature_wrist_frame_rigid_invariance(posed, rng):
    joints, globals_ = posed
    center = rng.normal(scale=0.1, size=3)
    for _ in range(100):
        g = random_transform(rng, 0.5)
        x = rng.normal(scale=0.1, size=3)
        a = object_kinematic_feature(x, center, joints, globals_[0])
        b = object_kinematic_feature(g.apply(x), g.apply(center), g.apply(joints), compose(g, globals_[0]))
        assert np.max(np.abs(a[-3:] - b[-3:])) < 1e-5
        # offsets only keep their length under rotation
        assert np.allclose(np.linalg.norm(a[3:6]), np.linalg.norm(b[3:6]))
        assert np.allclose(np.linalg.norm(a[6:69].reshape(21, 3), axis=1),
                           np.linalg.norm(b[6:69].reshape(21, 3), axis=1))


def test_object_feature_translation_invariance(posed, rng):
    joints, globals_ = posed
    center = rng.normal(scale=0.1, size=3)
    shift = RigidTransform(np.eye(3), rng.normal(size=3))
    x = rng.normal(scale=0.1, size=3)
    a = object_kinematic_feature(x, center, joints, globals_[0])
    b = object_kinematic_feature(shift.apply(x), shift.apply(center), shift.apply(joints), compose(shift, globals_[0]))
    assert np.allclose(a[3:], b[3:], atol=1e-12)


def test_object_feature_layout(posed):
    joints, globals_ = posed
    center = np.array([0.1, 0.2, 0.3])
    x = np.array([0.05, -0.1, 0.2])
    feat = object_kinematic_feature(x, center, joints, globals_[0])
    assert np.allclose(feat[:3], x)
    assert np.allclose(feat[3:6], x - center)
    assert np.allclose(feat[6:9], x - joints[0])
    assert np.allclose(feat[66:69], x - joints[20])
    assert np.allclose(feat[69:], globals_[0].r.T @ (x - globals_[0].t))


def test_feature_modes(posed, rng):
    joints, globals_ = posed
    ctx = KinematicContext(joints, globals_, np.zeros(3))
    pts = rng.normal(size=(5, 3))
    for mode in HAND_MODES + OBJECT_MODES:
        assert kinematic_features(pts, ctx, mode).shape == (5, FEATURE_DIMS[mode])
    assert np.allclose(kinematic_features(pts, ctx, "k3"), hand_kinematic_feature(pts, globals_))
    assert np.allclose(kinematic_features(pts, ctx, "k2"), kinematic_features(pts, ctx, "k3")[:, :6])
    assert np.allclose(kinematic_features(pts, ctx, "ko2"), kinematic_features(pts, ctx, "ko3")[:, :6])
    with pytest.raises(ConfigError):
        kinematic_features(pts, ctx, "k4")


def test_normalized_context_scales_features(posed, rng):
    joints, globals_ = posed
    ctx = KinematicContext(joints, globals_, np.array([0.1, 0.0, 0.0]))
    offset, scale = rng.normal(size=3), 2.5
    pts = rng.normal(size=(4, 3))
    raw = kinematic_features(pts, ctx, "ko3")
    norm = kinematic_features((pts - offset) * scale, ctx.normalized(offset, scale), "ko3")
    assert np.allclose(norm[:, 3:], raw[:, 3:] * scale, atol=1e-12)


def test_project_point():
    cam = Camera(100.0, 100.0, 50.0, 50.0, 100, 100)
    assert np.allclose(project_point(cam, [0.1, 0.2, 1.0]), (60.0, 70.0))
    assert np.allclose(project_point(cam, [0.0, 0.0, 2.0]), (50.0, 50.0))
    with pytest.raises(BehindCameraError):
        project_point(cam, [0.0, 0.0, 0.0])
    with pytest.raises(BehindCameraError):
        project_point(cam, [0.1, 0.1, -1.0])


def test_bilinear_cell_centers_and_midpoints():
    cam = Camera(1.0, 1.0, 0.0, 0.0, 4, 4)
    values = np.arange(2 * 2 * 3, dtype=np.float64).reshape(2, 2, 3)
    grid = FeatureGrid(values)
    assert np.allclose(sample_bilinear(grid, 1.0, 1.0, cam), values[0, 0])
    assert np.allclose(sample_bilinear(grid, 3.0, 3.0, cam), values[1, 1])
    assert np.allclose(sample_bilinear(grid, 2.0, 1.0, cam), 0.5 * (values[0, 0] + values[0, 1]))
    assert np.allclose(sample_bilinear(grid, 2.0, 2.0, cam), values.mean(axis=(0, 1)))


def test_bilinear_clamps_outside_span():
    cam = Camera(1.0, 1.0, 0.0, 0.0, 4, 4)
    values = np.arange(12, dtype=np.float64).reshape(2, 2, 3)
    grid = FeatureGrid(values)
    assert np.allclose(sample_bilinear(grid, -10.0, 1.0, cam), values[0, 0])
    assert np.allclose(sample_bilinear(grid, 50.0, 50.0, cam), values[1, 1])


def test_bilinear_matches_grid_interpolator(rng):
    cam = Camera(1.0, 1.0, 0.0, 0.0, 64, 48)
    values = rng.normal(size=(6, 8, 4))
    grid = FeatureGrid(values)
    ys = (np.arange(6) + 0.5) * 48 / 6
    xs = (np.arange(8) + 0.5) * 64 / 8
    oracle = RegularGridInterpolator((ys, xs), values)
    for _ in range(200):
        u = rng.uniform(xs[0], xs[-1])
        v = rng.uniform(ys[0], ys[-1])
        got = sample_bilinear(grid, u, v, cam)
        assert np.allclose(got, oracle([[v, u]])[0], atol=1e-12)
        assert np.all(got <= values.max(axis=(0, 1)) + 1e-12)
        assert np.all(got >= values.min(axis=(0, 1)) - 1e-12)


def test_aligned_visual_features_match_per_point_sampling(rng):
    cam = Camera(300.0, 280.0, 160.0, 120.0, 320, 240)
    grid = FeatureGrid(rng.normal(size=(16, 16, 5)))
    pts = np.column_stack([rng.uniform(-0.4, 0.4, size=(300, 2)), rng.uniform(0.5, 2.0, size=300)])
    got = visual_features(pts, grid, cam, "v2")
    assert got.shape == (300, 5)
    for p, row in zip(pts[::7], got[::7]):
        assert np.allclose(row, sample_bilinear(grid, *project_point(cam, p), cam), atol=1e-12)


def test_visual_features_with_camera_transform(rng):
    cam = Camera(300.0, 300.0, 160.0, 160.0, 320, 320)
    grid = FeatureGrid(rng.normal(size=(8, 8, 3)))
    to_camera = random_transform(rng, 0.1)
    world = to_camera.inverse().apply(
        np.column_stack([rng.uniform(-0.2, 0.2, size=(40, 2)), rng.uniform(1.0, 2.0, size=40)]))
    source = VisualSource(grid, cam, "v2", to_camera)
    assert np.allclose(source.features(world), visual_features(to_camera.apply(world), grid, cam, "v2"))
    assert source.channels == 3


def test_global_visual_feature_is_pooled_grid(rng):
    cam = Camera(1.0, 1.0, 0.0, 0.0, 4, 4)
    grid = FeatureGrid(rng.normal(size=(4, 4, 6)))
    # v1 never projects
    pts = rng.normal(size=(10, 3)) - [0.0, 0.0, 5.0]
    got = visual_features(pts, grid, cam, "v1")
    assert got.shape == (10, 6)
    assert np.allclose(got, grid.values.mean(axis=(0, 1)))


def test_visual_feature_errors(rng):
    cam = Camera(1.0, 1.0, 0.0, 0.0, 4, 4)
    grid = FeatureGrid(rng.normal(size=(2, 2, 2)))
    with pytest.raises(BehindCameraError):
        visual_features([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]], grid, cam, "v2")
    with pytest.raises(ConfigError):
        visual_features([[0.0, 0.0, 1.0]], grid, cam, "v3")
    with pytest.raises(DimensionMismatchError):
        visual_features([0.0, 0.0, 1.0], grid, cam, "v2")


def test_grid_and_camera_files(tmp_path, rng):
    grid = FeatureGrid(rng.normal(size=(4, 4, 2)).astype(np.float32))
    save_feature_grid(grid, str(tmp_path / "g.gsdg"))
    assert np.array_equal(load_feature_grid(str(tmp_path / "g.gsdg")).values, grid.values)

    cam = Camera(500.0, 510.0, 320.0, 240.0, 640, 480)
    save_camera(cam, str(tmp_path / "cam.json"))
    assert load_camera(str(tmp_path / "cam.json")) == cam


def test_grid_and_camera_file_errors(tmp_path):
    bad = tmp_path / "bad.gsdg"
    bad.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(InputParseError):
        load_feature_grid(str(bad))
    with pytest.raises(ConfigError):
        load_feature_grid(str(tmp_path / "missing.gsdg"))

    cam = tmp_path / "cam.json"
    cam.write_text(json.dumps({"fx": 1, "fy": 1, "cx": 0, "cy": 0, "width": 4}))
    with pytest.raises(InputParseError) as exc:
        load_camera(str(cam))
    assert exc.value.field == "height"
    with pytest.raises(ConfigError):
        Camera(0.0, 1.0, 0.0, 0.0, 4, 4)
