import json
import os

import numpy as np
import pandas as pd
import pytest

from src.cli.artifacts import MANIFEST_SUFFIX, PARTIAL_SUFFIX, write_artifact
from src.cli.config import RunConfig, config_hash, get_run_config, resolve_config
from src.cli.main import main
from src.decoder.mlp import load_model
from src.errors import ConfigError, InputParseError
from src.features.visual import Camera, FeatureGrid, save_camera, save_feature_grid
from src.kinematics.chain import forward_kinematics, random_pose
from src.kinematics.skeleton import HandPose, load_joints, load_pose, save_joints, save_pose
from src.sdfdata.io import load_obj, load_sample_set, save_obj
from src.sdfdata.primitives import box_mesh, icosphere


def _error(capsys) -> dict:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.strip()]
    return json.loads(lines[-1])


@pytest.fixture
def meshes(tmp_path):
    hand = str(tmp_path / "hand.obj")
    obj = str(tmp_path / "object.obj")
    save_obj(icosphere(0.3, 2, center=(-0.3, 0.0, 0.0)), hand)
    save_obj(box_mesh((0.05, -0.2, -0.2), (0.45, 0.2, 0.2)), obj)
    return hand, obj


@pytest.fixture
def pose_file(tmp_path, skel):
    path = str(tmp_path / "pose.json")
    save_pose(HandPose.identity(skel), path)
    return path


def test_fk_then_ik(tmp_path, skel, rng):
    pose = random_pose(skel, rng)
    save_pose(pose, str(tmp_path / "pose.json"))
    joints_path = str(tmp_path / "joints.json")
    assert main(["fk", "--pose", str(tmp_path / "pose.json"), "--out", joints_path]) == 0
    expected, _ = forward_kinematics(skel, pose)
    assert np.allclose(load_joints(joints_path), expected, atol=1e-12)

    manifest = json.loads(open(joints_path + MANIFEST_SUFFIX).read())
    assert manifest["command"] == "fk"
    assert manifest["inputs"]["pose"]["path"] == str(tmp_path / "pose.json")
    assert "threads" not in manifest["config"]
    assert manifest["defaults"]["sdfdata"]["sample_count"] == 40000
    assert manifest["defaults"]["decoder"]["loss_weights"] == [1.0, 0.5, 0.5]

    assert main(["ik", "--joints", joints_path, "--out", str(tmp_path / "solved.json")]) == 0
    assert get_run_config().command == "ik"
    again, _ = forward_kinematics(skel, load_pose(str(tmp_path / "solved.json"), skel))
    assert np.max(np.abs(again - expected)) < 1e-6


def test_gensdf(tmp_path, meshes):
    out = str(tmp_path / "samples.gsdf")
    assert main(["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "300", "--seed", "4",
                 "--out", out]) == 0
    samples = load_sample_set(out)
    assert len(samples) == 300
    assert samples.seed == 4
    assert samples.metadata["config_hash"] == json.loads(open(out + MANIFEST_SUFFIX).read())["config_hash"]
    assert not os.path.exists(out + PARTIAL_SUFFIX)


def test_gensdf_does_not_depend_on_threads(tmp_path, meshes):
    out = str(tmp_path / "samples.gsdf")
    args = ["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "500", "--out", out]
    assert main(args + ["--threads", "1"]) == 0
    first = open(out, "rb").read(), open(out + MANIFEST_SUFFIX, "rb").read()
    assert main(args + ["--threads", "3"]) == 0
    second = open(out, "rb").read(), open(out + MANIFEST_SUFFIX, "rb").read()
    assert first == second


def test_features_csv(tmp_path, meshes, pose_file):
    samples = str(tmp_path / "samples.gsdf")
    assert main(["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "50", "--out", samples]) == 0
    out = str(tmp_path / "feats.csv")
    assert main(["features", "--samples", samples, "--pose", pose_file, "--mode", "ko3", "--center", "0.2", "0", "0",
                 "--out", out]) == 0
    frame = pd.read_csv(out)
    assert frame.shape == (50, 72)
    assert list(frame.columns[:2]) == ["ko3_0", "ko3_1"]


def test_fit_extract_eval(tmp_path, meshes, pose_file):
    samples = str(tmp_path / "samples.gsdf")
    model = str(tmp_path / "hand.model")
    mesh_out = str(tmp_path / "hand_pred.obj")
    report = str(tmp_path / "report.json")
    assert main(["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "2000", "--out", samples]) == 0
    assert main(["fit", "--samples", samples, "--pose", pose_file, "--mode", "k1", "--epochs", "2",
                 "--steps-per-epoch", "3", "--batch-size", "32", "--hidden", "16", "--layers", "3",
                 "--out", model]) == 0
    assert main(["extract", "--model", model, "--pose", pose_file, "--res", "16", "--out", mesh_out]) == 0
    load_obj(mesh_out)
    extraction = json.loads(open(mesh_out + MANIFEST_SUFFIX).read())["extraction"]
    assert extraction["resolution"] == [16, 16, 16]

    assert main(["eval", "--pred-hand", meshes[0], "--gt-hand", meshes[0], "--surface-samples", "300",
                 "--no-interaction", "--csv", str(tmp_path / "report.csv"), "--out", report]) == 0
    data = json.loads(open(report).read())
    assert data["metrics"]["cd_h"] == 0.0
    assert os.path.exists(tmp_path / "report.csv")
    assert json.loads(open(report + MANIFEST_SUFFIX).read())["cm_per_unit_source"] == "default"


def test_missing_input_exits_with_config_error(tmp_path, capsys):
    code = main(["fk", "--pose", str(tmp_path / "missing.json"), "--out", str(tmp_path / "j.json")])
    assert code == 2
    err = _error(capsys)
    assert err["error"] == "ConfigError"
    assert err["exit_code"] == 2
    assert err["field"] == "pose"


def test_missing_out_is_config_error(pose_file, capsys):
    assert main(["fk", "--pose", pose_file]) == 2
    assert _error(capsys)["field"] == "output"


def test_malformed_input_exits_with_parse_error(tmp_path, capsys):
    bad = tmp_path / "pose.json"
    bad.write_text("{")
    assert main(["fk", "--pose", str(bad), "--out", str(tmp_path / "j.json")]) == 3
    err = _error(capsys)
    assert err["error"] == "InputParseError"
    assert err["file"] == str(bad)
    assert not os.path.exists(tmp_path / "j.json")


@pytest.mark.parametrize("command", ["features", "fit"])
def test_object_mode_without_center_is_usage_error(tmp_path, meshes, pose_file, capsys, command):
    samples = str(tmp_path / "samples.gsdf")
    assert main(["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "50", "--out", samples]) == 0
    out = str(tmp_path / "out.bin")
    assert main([command, "--samples", samples, "--pose", pose_file, "--mode", "ko2", "--out", out]) == 2
    err = _error(capsys)
    assert err["error"] == "ConfigError"
    assert err["field"] == "center"
    assert not os.path.exists(out)


def test_extract_object_model_without_center_is_usage_error(tmp_path, meshes, pose_file, capsys):
    samples = str(tmp_path / "samples.gsdf")
    model = str(tmp_path / "obj.model")
    assert main(["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "400", "--out", samples]) == 0
    assert main(["fit", "--samples", samples, "--pose", pose_file, "--mode", "ko2", "--center", "0.25", "0", "0",
                 "--epochs", "1", "--steps-per-epoch", "1", "--batch-size", "8", "--hidden", "8", "--layers", "2",
                 "--out", model]) == 0
    out = str(tmp_path / "obj.obj")
    assert main(["extract", "--model", model, "--pose", pose_file, "--res", "8", "--out", out]) == 2
    assert _error(capsys)["field"] == "center"
    assert main(["extract", "--model", model, "--pose", pose_file, "--center", "0.25", "0", "0", "--res", "8",
                 "--out", out]) == 0


def test_joint_fit_writes_both_decoders(tmp_path, meshes, pose_file):
    samples = str(tmp_path / "samples.gsdf")
    hand_model = str(tmp_path / "hand.model")
    obj_model = str(tmp_path / "obj.model")
    assert main(["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "600", "--out", samples]) == 0
    assert main(["fit", "--samples", samples, "--pose", pose_file, "--center", "0.25", "0", "0",
                 "--mode", "k2", "--object-mode", "ko2", "--loss-weights", "1", "0.25", "0.75",
                 "--epochs", "2", "--steps-per-epoch", "2", "--batch-size", "16", "--hidden", "8", "--layers", "3",
                 "--out", hand_model, "--object-out", obj_model]) == 0
    hand, hand_header = load_model(hand_model)
    obj, obj_header = load_model(obj_model)
    assert (hand.feature_mode, obj.feature_mode) == ("k2", "ko2")
    assert (hand_header["target"], obj_header["target"]) == ("hand", "object")
    assert hand_header["train"]["loss_weights"] == [1.0, 0.25, 0.75]
    manifest = json.loads(open(hand_model + MANIFEST_SUFFIX).read())
    assert np.isfinite(manifest["final_shape_loss"])


def test_joint_fit_needs_an_object_output(tmp_path, meshes, pose_file, capsys):
    samples = str(tmp_path / "samples.gsdf")
    assert main(["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "50", "--out", samples]) == 0
    assert main(["fit", "--samples", samples, "--pose", pose_file, "--center", "0", "0", "0", "--mode", "k2",
                 "--object-mode", "ko2", "--out", str(tmp_path / "hand.model")]) == 2
    assert _error(capsys)["field"] == "object_output"


@pytest.fixture
def camera_view(tmp_path, rng):
    grid = str(tmp_path / "view.gsdg")
    camera = str(tmp_path / "camera.json")
    save_feature_grid(FeatureGrid(rng.normal(size=(8, 8, 4))), grid)
    save_camera(Camera(200.0, 200.0, 100.0, 100.0, 200, 200), camera)
    return grid, camera


@pytest.fixture
def far_meshes(tmp_path):
    hand = str(tmp_path / "far_hand.obj")
    obj = str(tmp_path / "far_object.obj")
    save_obj(icosphere(0.3, 2, center=(-0.3, 0.0, 1.5)), hand)
    save_obj(box_mesh((0.05, -0.2, 1.3), (0.45, 0.2, 1.7)), obj)
    return hand, obj


def test_visual_features_flow_into_the_decoder(tmp_path, far_meshes, pose_file, camera_view, capsys):
    grid, camera = camera_view
    samples = str(tmp_path / "samples.gsdf")
    assert main(["gensdf", "--hand", far_meshes[0], "--object", far_meshes[1], "--count", "400",
                 "--out", samples]) == 0

    feats = str(tmp_path / "feats.csv")
    assert main(["features", "--samples", samples, "--pose", pose_file, "--mode", "k1", "--grid", grid,
                 "--camera", camera, "--out", feats]) == 0
    frame = pd.read_csv(feats)
    assert frame.shape == (400, 4 + 3)
    assert list(frame.columns[:5]) == ["v2_0", "v2_1", "v2_2", "v2_3", "k1_0"]

    model = str(tmp_path / "hand.model")
    assert main(["fit", "--samples", samples, "--pose", pose_file, "--mode", "k1", "--grid", grid,
                 "--camera", camera, "--visual-mode", "v1", "--epochs", "1", "--steps-per-epoch", "2",
                 "--batch-size", "16", "--hidden", "8", "--layers", "3", "--out", model]) == 0
    params, header = load_model(model)
    assert params.visual_dim == 4
    assert params.widths[0] == 4 + 3
    assert header["visual_mode"] == "v1"

    out = str(tmp_path / "hand.obj")
    assert main(["extract", "--model", model, "--pose", pose_file, "--grid", grid, "--camera", camera,
                 "--res", "8", "--out", out]) == 0
    assert main(["extract", "--model", model, "--pose", pose_file, "--res", "8", "--out", out]) == 0
    assert "no --grid/--camera" in capsys.readouterr().out


def test_grid_without_camera_is_usage_error(tmp_path, pose_file, camera_view, capsys):
    code = main(["features", "--samples", pose_file, "--pose", pose_file, "--grid", camera_view[0],
                 "--out", str(tmp_path / "f.csv")])
    assert code == 2
    assert _error(capsys)["field"] == "grid"


def test_visual_points_behind_camera_fail_numerically(tmp_path, meshes, pose_file, camera_view, capsys):
    samples = str(tmp_path / "samples.gsdf")
    assert main(["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "100", "--out", samples]) == 0
    code = main(["features", "--samples", samples, "--pose", pose_file, "--mode", "k1", "--grid", camera_view[0],
                 "--camera", camera_view[1], "--out", str(tmp_path / "f.csv")])
    assert code == 4
    assert _error(capsys)["error"] == "BehindCameraError"


def test_eval_reads_units_from_extracted_mesh(tmp_path, meshes, pose_file):
    samples = str(tmp_path / "samples.gsdf")
    model = str(tmp_path / "hand.model")
    mesh_out = str(tmp_path / "hand_pred.obj")
    assert main(["gensdf", "--hand", meshes[0], "--object", meshes[1], "--count", "600", "--cm-per-unit", "2.5",
                 "--out", samples]) == 0
    assert load_sample_set(samples).metadata["cm_per_unit"] == 2.5
    assert main(["fit", "--samples", samples, "--pose", pose_file, "--mode", "k1", "--epochs", "1",
                 "--steps-per-epoch", "1", "--batch-size", "16", "--hidden", "8", "--layers", "2",
                 "--out", model]) == 0
    assert load_model(model)[1]["cm_per_unit"] == 2.5
    assert main(["extract", "--model", model, "--pose", pose_file, "--res", "8", "--out", mesh_out]) == 0
    extract_manifest = json.loads(open(mesh_out + MANIFEST_SUFFIX).read())
    assert extract_manifest["cm_per_unit"] == 2.5
    assert "offset" in extract_manifest["normalization"]
    # score a known mesh under the extracted mesh's manifest
    save_obj(load_obj(meshes[0]), mesh_out)

    report = str(tmp_path / "report.json")
    assert main(["eval", "--pred-hand", mesh_out, "--gt-hand", meshes[0], "--no-interaction",
                 "--surface-samples", "100", "--out", report]) == 0
    manifest = json.loads(open(report + MANIFEST_SUFFIX).read())
    assert manifest["cm_per_unit"] == 2.5
    assert manifest["cm_per_unit_source"] == mesh_out + MANIFEST_SUFFIX

    assert main(["eval", "--pred-hand", mesh_out, "--gt-hand", meshes[0], "--no-interaction", "--cm-per-unit", "1",
                 "--surface-samples", "100", "--out", report]) == 0
    manifest = json.loads(open(report + MANIFEST_SUFFIX).read())
    assert (manifest["cm_per_unit"], manifest["cm_per_unit_source"]) == (1.0, "flag")


def test_numerical_failure_exit_code(tmp_path, capsys):
    path = str(tmp_path / "joints.json")
    save_joints(np.outer(np.arange(21) * 0.01, [1.0, 0.0, 0.0]), path)
    assert main(["ik", "--joints", path, "--out", str(tmp_path / "pose.json")]) == 4
    assert _error(capsys)["error"] == "DegenerateInputError"


def test_failed_writer_leaves_only_partial(tmp_path):
    target = str(tmp_path / "artifact.bin")

    def writer(p):
        with open(p, "wb") as f:
            f.write(b"half")
        raise OSError("disk full")

    with pytest.raises(OSError):
        write_artifact(target, writer)
    assert not os.path.exists(target)
    assert os.path.exists(target + PARTIAL_SUFFIX)


def test_config_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("GSDF_SEED", "11")
    monkeypatch.setenv("GSDF_THREADS", "2")
    cfg = resolve_config("gensdf", {"count": None, "near_fraction": 0.5})
    assert (cfg.seed, cfg.threads) == (11, 2)
    assert cfg["count"] == 40000
    assert cfg["near_fraction"] == 0.5

    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"seed": 3, "near_fraction": 0.8}))
    cfg = resolve_config("gensdf", {"seed": 7, "near_fraction": 0.5}, str(cfg_file))
    assert cfg.seed == 3
    assert cfg["near_fraction"] == 0.8


def test_config_file_errors(tmp_path):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"colour": "red"}))
    with pytest.raises(ConfigError) as exc:
        resolve_config("fk", {}, str(cfg_file))
    assert exc.value.field == "colour"
    cfg_file.write_text("[1, 2")
    with pytest.raises(InputParseError):
        resolve_config("fk", {}, str(cfg_file))
    with pytest.raises(ConfigError):
        resolve_config("fk", {}, str(tmp_path / "missing.json"))
    cfg = resolve_config("fk", {"threads": 0})
    with pytest.raises(ConfigError):
        cfg.validate()


def test_config_hash_ignores_threads():
    a = RunConfig("fk", seed=1, threads=1, output="x.json", options={"pose": "p.json"})
    b = RunConfig("fk", seed=1, threads=8, output="x.json", options={"pose": "p.json"})
    c = RunConfig("fk", seed=2, threads=1, output="x.json", options={"pose": "p.json"})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)


def test_ablate_command(tmp_path):
    out = str(tmp_path / "ablation.json")
    csv = str(tmp_path / "ablation.csv")
    assert main(["ablate", "--train-poses", "1", "--test-poses", "1", "--mode", "k1", "--epochs", "1",
                 "--steps-per-epoch", "1", "--hidden", "8", "--res", "16", "--surface-samples", "100",
                 "--out", out, "--csv", csv]) == 0
    data = json.loads(open(out).read())
    assert [r["mode"] for r in data["rows"]] == ["k1"]
    assert data["config"]["object_modes"] == []
    assert list(pd.read_csv(csv)["mode"]) == ["k1"]
    assert json.loads(open(out + MANIFEST_SUFFIX).read())["command"] == "ablate"
