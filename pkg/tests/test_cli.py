"""
Tests for the command line.
"""

import numpy as np
import pytest

from graspalign.cli import main
from graspalign.models.geometry import Transform3
from graspalign.models.pointmap import ConfidenceMap, PairPrediction, Pointmap
from graspalign.services.dataset import DatasetService
from graspalign.services.kinematics import KinematicsService
from graspalign.services.se3 import apply_points
from graspalign.utils.serialization import read_json, write_json

SPEC = {"object": {"kind": "block", "n_points": 2000}, "n_train": 3, "n_test": 1, "alpha_true": 2.5, "seed": 3}
FAST = {"coord_align": {"max_iters": 0, "n_starts": 1, "polish": False, "divergence_px": 1e12},
        "regressor": {"epochs": 5}}


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    """Directory holding one exported scenario and a fast run configuration."""
    root = tmp_path_factory.mktemp("cli")
    write_json(root / "spec.json", SPEC)
    write_json(root / "fast.json", FAST)
    assert main(["simulate", str(root / "spec.json"), str(root / "scene")]) == 0
    return root


def test_help_exits_cleanly():
    """Test that --help exits with status 0."""
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0


def test_bad_spec_is_input_error(tmp_path, capsys):
    """Test that an invalid spec exits with status 2."""
    write_json(tmp_path / "spec.json", {"object": {"kind": "spoon"}})
    assert main(["simulate", str(tmp_path / "spec.json"), str(tmp_path / "out")]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_missing_file_is_input_error(tmp_path):
    """Test that a missing problem file exits with status 2."""
    assert main(["solve", str(tmp_path / "none.json"), str(tmp_path / "sol.json")]) == 2


def test_nonpositive_threads(scenario_dir, tmp_path):
    """Test that --threads 0 is rejected."""
    args = ["--threads", "0", "solve", str(scenario_dir / "scene" / "problem.json"), str(tmp_path / "s.json")]
    assert main(args) == 2


def test_simulate_output(scenario_dir, capsys):
    """Test the simulate summary and the exported files."""
    out = scenario_dir / "again"
    assert main(["simulate", str(scenario_dir / "spec.json"), str(out)]) == 0
    printed = capsys.readouterr().out
    assert "alpha: 2.5" in printed
    assert "train poses: 3" in printed
    assert (out / "spec.json").exists()
    assert (out / "problem.json").read_bytes() == (scenario_dir / "scene" / "problem.json").read_bytes()


def test_simulate_seed_flag(scenario_dir):
    """Test that --seed overrides the spec seed."""
    out = scenario_dir / "seeded"
    assert main(["--seed", "8", "simulate", str(scenario_dir / "spec.json"), str(out)]) == 0
    assert read_json(out / "ground_truth.json")["seed"] == 8


def test_align_writes_problem(scenario_dir, capsys):
    """Test that align writes the dense cloud, camera poses and a problem."""
    out = scenario_dir / "aligned"
    assert main(["align", str(scenario_dir / "scene" / "manifest.json"), str(out), "--max-iters", "20"]) == 0
    printed = capsys.readouterr().out
    assert "dense points:" in printed
    poses = read_json(out / "camera_poses.json")
    assert len(poses["camera_poses"]) == 3
    assert poses["image_ids"] == [0, 1, 2]
    assert (out / "problem.json").exists()
    assert (out / "dense.ply").exists()


def test_align_zero_budget(scenario_dir, capsys):
    """Test that an exhausted budget is reported."""
    out = scenario_dir / "aligned0"
    assert main(["align", str(scenario_dir / "scene" / "manifest.json"), str(out), "--max-iters", "0"]) == 0
    assert "no (iteration budget exhausted)" in capsys.readouterr().out


def test_solve_reports_against_ground_truth(scenario_dir, capsys):
    """Test the solve summary and the solution file."""
    scene = scenario_dir / "scene"
    solution = scenario_dir / "solution.json"
    args = ["--config", str(scenario_dir / "fast.json"), "solve", str(scene / "problem.json"), str(solution),
            "--ground-truth", str(scene / "ground_truth.json")]
    assert main(args) == 0
    printed = capsys.readouterr().out
    assert "method: rendered" in printed
    assert "converged: no" in printed
    assert "H rot err deg:" in printed
    data = read_json(solution)
    assert data["problem"] == "scene/problem.json"
    assert data["iterations"] == 0


def test_evaluate_true_solution(scenario_dir, capsys):
    """Test evaluate on a solution carrying the true grasp and scale."""
    scene = scenario_dir / "scene"
    truth = read_json(scene / "ground_truth.json")
    solution = write_json(scenario_dir / "truth_solution.json", {
        "H": truth["H_true"], "alpha": truth["alpha_true"], "problem": "scene/problem.json",
    })
    report = scenario_dir / "report.json"
    overlays = scenario_dir / "overlays"
    assert main(["evaluate", str(solution), str(scene / "testset"), str(report), "--overlays", str(overlays)]) == 0
    assert "rendered mean D_hat:" in capsys.readouterr().out
    rows = read_json(report)["rows"]
    assert rows[0]["method"] == "rendered"
    assert len(rows[0]["per_pose"]) == 1
    assert rows[0]["mean_D_hat"] < 0.5
    assert (overlays / "rendered_000.ppm").exists()


def test_regress_solve_and_evaluate(scenario_dir):
    """Test the regression baseline through the command line."""
    scene = scenario_dir / "scene"
    solution = scenario_dir / "regress.json"
    args = ["--config", str(scenario_dir / "fast.json"), "solve", str(scene / "problem.json"), str(solution),
            "--method", "regress"]
    assert main(args) == 0
    assert (scenario_dir / "regress_regressor.json").exists()
    report = scenario_dir / "regress_report.json"
    assert main(["evaluate", str(solution), str(scene / "testset"), str(report)]) == 0
    assert read_json(report)["rows"][0]["method"] == "regress"
    assert main(["pour", str(solution), "desk6r", "--pivot", "0", "0", "0", "--q0", "0", "0", "0", "0", "0", "0"]) == 2


def test_pour_with_true_grasp(scenario_dir, capsys):
    """Test a small pour using a solution that carries the true grasp."""
    truth = read_json(scenario_dir / "scene" / "ground_truth.json")
    solution = write_json(scenario_dir / "true.json", {"H": truth["H_true"], "alpha": truth["alpha_true"]})
    q0 = [str(v) for v in truth["train_configs"][0]]
    args = ["pour", str(solution), str(scenario_dir / "scene" / "chain.json"), "--pivot", "0", "0", "0",
            "--angle-deg", "5", "--q0", *q0, "--ground-truth", str(scenario_dir / "scene" / "ground_truth.json")]
    assert main(args) == 0
    printed = capsys.readouterr().out
    assert "goal q:" in printed
    assert "true pivot displacement mm:" in printed


def test_align_disconnected_graph_exits_3(tmp_path, capsys):
    """Test that a manifest whose pairs form two separate groups exits with status 3."""
    rng = np.random.default_rng(5)

    def pair(n, m):
        return PairPrediction(
            n=n, m=m,
            x_nn=Pointmap(rng.normal(size=(2, 3, 3))), x_nm=Pointmap(rng.normal(size=(2, 3, 3))),
            c_nn=ConfidenceMap(np.full((2, 3), 2.0)), c_nm=ConfidenceMap(np.full((2, 3), 2.0)),
        )

    manifest = DatasetService.save_manifest([pair(0, 1), pair(2, 3)], tmp_path / "split")
    assert main(["align", str(manifest), str(tmp_path / "out")]) == 3
    assert "error:" in capsys.readouterr().err
    assert not (tmp_path / "out" / "camera_poses.json").exists()


def test_pour_to_unreachable_goal_exits_5(scenario_dir, capsys):
    """Test that a pivot far from the gripper, turned half a revolution, exits with status 5."""
    scene = scenario_dir / "scene"
    truth = read_json(scene / "ground_truth.json")
    H_true = Transform3.from_json(truth["H_true"])
    q0 = truth["train_configs"][0]
    current = KinematicsService.object_pose(DatasetService.load_chain(scene / "chain.json"), q0, H_true)
    # a half turn about z through this point moves the end effector by 10 m
    center = H_true.inverse().t - np.array([5.0, 0.0, 0.0])
    pivot = apply_points(center, current.inverse())
    solution = write_json(scenario_dir / "far_pivot.json", {"H": truth["H_true"], "alpha": truth["alpha_true"]})
    args = ["pour", str(solution), str(scene / "chain.json"), "--pivot", *[str(v) for v in pivot],
            "--axis", "0", "0", "1", "--angle-deg", "180", "--q0", *[str(v) for v in q0]]
    assert main(args) == 5
    assert "reach" in capsys.readouterr().err


def test_solve_is_reproducible_for_a_seed(scenario_dir):
    """Test that two solves with the same seed write byte-identical solutions."""
    scene = scenario_dir / "scene"
    outputs = []
    for name in ("seeded_a", "seeded_b"):
        out = scenario_dir / name / "solution.json"
        args = ["--seed", "4", "--threads", "1", "solve", str(scene / "problem.json"), str(out),
                "--starts", "2", "--max-iters", "15"]
        assert main(args) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
