import json

import numpy as np
import pandas as pd
import pytest

from src.errors import ConfigError, DegenerateInputError
from src.metrics.alignment import align_scale_translation
from src.metrics.interaction import interaction_metrics, voxel_centers
from src.metrics.report import MetricReport, evaluate_sample
from src.metrics.scores import center_error, chamfer_distance, f_score, joint_errors, nearest_distances
from src.metrics.surface import sample_surface
from src.sdfdata.mesh import TriMesh
from src.sdfdata.primitives import box_mesh, icosphere


def test_chamfer_examples():
    assert chamfer_distance([[0, 0, 0]], [[1, 0, 0]]) == pytest.approx(2.0)
    assert chamfer_distance([[0, 0, 0], [2, 0, 0]], [[0, 0, 0]]) == pytest.approx(2.0)
    pts = np.random.default_rng(0).normal(size=(50, 3))
    assert chamfer_distance(pts, pts) == 0.0


def test_chamfer_ignores_point_order(rng):
    a, b = rng.normal(size=(120, 3)), rng.normal(size=(80, 3))
    ref = chamfer_distance(a, b)
    assert chamfer_distance(b, a) == pytest.approx(ref, rel=1e-12)
    assert chamfer_distance(a[rng.permutation(120)], b[rng.permutation(80)]) == pytest.approx(ref, rel=1e-12)


def test_tree_and_brute_nearest_agree(rng):
    a, b = rng.normal(size=(300, 3)), rng.normal(size=(200, 3))
    assert np.allclose(nearest_distances(a, b), nearest_distances(a, b, brute=True), atol=1e-12)
    assert chamfer_distance(a, b) == pytest.approx(chamfer_distance(a, b, brute=True))


def test_f_score_examples():
    pred = [[0, 0, 0], [1, 0, 0], [5, 0, 0]]
    gt = [[0, 0, 0], [1, 0, 0], [9, 0, 0]]
    f, p, r = f_score(pred, gt, 0.5)
    assert (p, r) == (pytest.approx(2 / 3), pytest.approx(2 / 3))
    assert f == pytest.approx(2 / 3)
    # the threshold itself is not a match
    assert f_score([[0.5, 0, 0]], [[0, 0, 0]], 0.5)[0] == 0.0
    with pytest.raises(ConfigError):
        f_score(pred, gt, 0.0)


def test_f_score_grows_with_threshold(rng):
    a, b = rng.normal(size=(200, 3)), rng.normal(size=(200, 3))
    scores = [f_score(a, b, th)[0] for th in (0.05, 0.1, 0.2, 0.5, 1.0, 5.0)]
    assert all(x <= y for x, y in zip(scores, scores[1:]))
    assert scores[-1] == 1.0


def test_surface_samples_on_one_triangle():
    tri = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    pts = sample_surface(tri, 20000, seed=5)
    assert np.all(pts[:, 2] == 0.0)
    assert np.all(pts[:, :2] >= -1e-12)
    assert np.all(pts[:, 0] + pts[:, 1] <= 1.0 + 1e-12)
    assert np.allclose(pts.mean(axis=0), [1 / 3, 1 / 3, 0.0], atol=0.01)
    assert np.array_equal(pts, sample_surface(tri, 20000, seed=5))
    with pytest.raises(ConfigError):
        sample_surface(tri, 0)


def test_empty_point_set_raises():
    with pytest.raises(DegenerateInputError):
        chamfer_distance(np.zeros((0, 3)), [[0, 0, 0]])


def test_joint_error_is_wrist_relative():
    gt = np.random.default_rng(3).normal(size=(21, 3))
    pred = gt.copy()
    pred[7] += [0.0, 2.1, 0.0]
    assert joint_errors(pred, gt) == pytest.approx(0.1)
    assert joint_errors(gt + [1.0, -2.0, 3.0], gt) == pytest.approx(0.0, abs=1e-12)
    assert center_error([3, 4, 0], [0, 0, 0]) == pytest.approx(5.0)


def test_alignment_recovers_scale_and_translation(rng):
    gt = rng.normal(size=(400, 3))
    s, t = 1.3, np.array([0.2, -0.1, 0.4])
    pred = (gt - t) / s
    res = align_scale_translation(pred, gt)
    assert res.scale == pytest.approx(s, rel=1e-9)
    assert np.allclose(res.translation, t, atol=1e-9)
    assert res.residual < 1e-12


def test_alignment_residual_never_grows(small_sphere):
    gt = sample_surface(small_sphere, 800, seed=0)
    pred = 0.8 * sample_surface(small_sphere, 800, seed=1) + [0.05, 0.0, -0.03]
    res = align_scale_translation(pred, gt, iters=10)
    assert np.all(np.diff(res.history) <= 0)
    assert res.residual <= chamfer_distance(pred, gt)
    assert res.scale == pytest.approx(1.25, rel=0.05)


@pytest.mark.parametrize("collapsed", ["gt", "pred", "both"])
def test_alignment_of_collapsed_sets_keeps_unit_scale(rng, collapsed):
    spread = rng.normal(size=(40, 3))
    point = np.tile([1.0, 2.0, 3.0], (5, 1))
    pred = point if collapsed in ("pred", "both") else spread
    gt = point if collapsed in ("gt", "both") else spread + [0.5, 0.0, 0.0]
    res = align_scale_translation(pred, gt)
    assert res.scale == 1.0
    assert np.allclose(res.translation, gt.mean(axis=0) - pred.mean(axis=0))
    assert np.isfinite(res.residual)


def test_alignment_scale_stays_positive():
    for seed in range(20):
        case = np.random.default_rng(seed)
        pred = case.normal(size=(30, 3))
        gt = case.normal(size=(25, 3)) * case.uniform(1e-9, 10.0)
        res = align_scale_translation(pred, gt)
        assert res.scale > 0
        assert np.all(np.diff(res.history) <= 0)


def test_voxel_centers():
    centers = voxel_centers(np.zeros(3), np.array([1.0, 0.5, 0.5]), 0.25)
    assert centers.shape == (4 * 2 * 2, 3)
    assert np.allclose(centers.min(axis=0), 0.125)


def test_disjoint_meshes_do_not_interact():
    res = interaction_metrics(box_mesh((0, 0, 0), (1, 1, 1)), box_mesh((2, 0, 0), (3, 1, 1)), 0.1)
    assert not res.contact
    assert res.penetration_depth == 0.0
    assert res.intersection_volume == 0.0
    assert res.sign_reliable


def test_overlapping_boxes():
    hand = box_mesh((0, 0, 0), (1, 1, 1))
    obj = box_mesh((0.5, -0.5, -0.5), (1.5, 1.5, 1.5))
    res = interaction_metrics(hand, obj, 0.05)
    assert res.contact
    assert res.penetration_depth == pytest.approx(0.5)
    assert res.intersection_volume == pytest.approx(0.5, rel=0.1)


def test_hand_inside_object():
    res = interaction_metrics(box_mesh((-0.2, -0.2, -0.2), (0.2, 0.2, 0.2)), box_mesh(), 0.02)
    assert res.penetration_depth == pytest.approx(0.3)
    assert res.intersection_volume == pytest.approx(0.064, rel=0.1)
    with pytest.raises(ConfigError):
        interaction_metrics(box_mesh(), box_mesh(), 0.0)


def test_identical_meshes_score_perfectly(small_sphere):
    obj = icosphere(0.2, 1, center=(0.8, 0.0, 0.0))
    row = evaluate_sample(small_sphere, small_sphere, obj, obj, cm_per_unit=1.0, n_samples=500, seed=4)
    assert row["cd_h"] == 0.0
    assert row["cd_o"] == 0.0
    assert all(row[k] == 1.0 for k in row if k.startswith("fs_"))
    assert row["contact"] is False
    assert row["i_v"] == 0.0


def test_evaluate_sample_units():
    gt = np.random.default_rng(5).normal(size=(21, 3))
    pred = gt.copy()
    pred[3] += [0.021, 0.0, 0.0]
    row = evaluate_sample(pred_joints=pred, gt_joints=gt, pred_center=[0.03, 0.04, 0.0],
                          gt_center=[0.0, 0.0, 0.0], cm_per_unit=100.0)
    assert row["e_h"] == pytest.approx(0.1)
    assert row["e_o"] == pytest.approx(5.0)
    assert "cd_h" not in row
    with pytest.raises(ConfigError):
        evaluate_sample(cm_per_unit=0.0)


def test_report_aggregation():
    report = MetricReport()
    for cd, fs, contact in ((1.0, 0.2, True), (2.0, 0.4, False), (100.0, 0.9, True), (3.0, 0.5, False)):
        report.add({"sample": "s", "cd_h": cd, "fs_h@1mm": fs, "contact": contact})
    summary = report.summary()
    assert summary["cd_h"] == pytest.approx(2.5)
    assert summary["fs_h@1mm"] == pytest.approx(0.5)
    assert summary["c_r"] == pytest.approx(0.5)
    assert report.to_dict()["aggregation"] == {"cd_h": "median", "fs_h@1mm": "mean", "c_r": "fraction"}


def test_median_metrics_shrug_off_outliers():
    report = MetricReport()
    for i in range(9):
        report.add({"sample": str(i), "cd_h": 1.0 + 0.1 * i, "fs_h@1mm": 0.5})
    before = report.summary()
    report.add({"sample": "bad", "cd_h": 1e6, "fs_h@1mm": 0.5})
    report.add({"sample": "worse", "cd_h": 1e9, "fs_h@1mm": 0.5})
    after = report.summary()
    assert before["cd_h"] == pytest.approx(1.4)
    assert after["cd_h"] == pytest.approx(1.5)
    assert after["fs_h@1mm"] == pytest.approx(0.5)


def test_report_files(tmp_path):
    report = MetricReport()
    report.add({"sample": "a", "cd_o": 1.5, "e_o": 2.0})
    report.add({"sample": "b", "cd_o": 0.5, "e_o": 4.0})
    report.to_json(str(tmp_path / "r.json"))
    report.to_csv(str(tmp_path / "r.csv"))
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["metrics"] == {"cd_o": 1.0, "e_o": 3.0}
    assert [r["sample"] for r in data["samples"]] == ["a", "b"]
    frame = pd.read_csv(tmp_path / "r.csv")
    assert list(frame.columns) == ["sample", "cd_o", "e_o"]


def test_unknown_aggregation_mode():
    report = MetricReport(aggregation={"cd_h": "max"})
    report.add({"cd_h": 1.0})
    with pytest.raises(ConfigError):
        report.summary()
