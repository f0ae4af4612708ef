"""
Command-line entry point.

Sub-commands:
    simulate   generate a synthetic scenario and export every artifact
    align      pairwise pointmap alignment of a manifest
    solve      recover H and alpha (or train the direct regressor)
    evaluate   test-set pixel distances and overlays for a solution
    pour       joint configuration for a pivot rotation of the held object
    benchmark  desk-scale method comparison and data-reduction runs
    serve      run the HTTP API

Results go to standard output with six significant digits; logs go to
standard error. Exit codes: 0 ok, 2 input, 3 graph, 4 divergence, 5 IK.
"""
import argparse
import os
import shutil
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
from pydantic import ValidationError

from graspalign import __version__
from graspalign.core.config import LOG_LEVELS, settings
from graspalign.core.errors import GraspAlignError, InputError
from graspalign.core.logging import logger, setup_logging
from graspalign.models.alignment import AlignmentProblem
from graspalign.models.geometry import Transform3
from graspalign.models.kinematics import PointsOfInterest
from graspalign.schemas.files import ScenarioSpec
from graspalign.schemas.run_config import RunConfig
from graspalign.services.baselines import BaselineService
from graspalign.services.coord_align import CoordinateAlignmentService
from graspalign.services.dataset import DatasetService
from graspalign.services.evaluation import EvaluationService
from graspalign.services.experiments import ExperimentService
from graspalign.services.kinematics import KinematicsService
from graspalign.services.ope import ObjectPoseService
from graspalign.services.pointmap_align import PointmapAlignmentService
from graspalign.services.se3 import geodesic_angle
from graspalign.services.simulation import SimulationService
from graspalign.utils.formats import write_ply
from graspalign.utils.serialization import fmt, read_json, write_json


def _out(label: str, value) -> None:
    if isinstance(value, (float, np.floating)):
        value = fmt(float(value))
    elif isinstance(value, (list, tuple, np.ndarray)):
        value = " ".join(fmt(float(v)) for v in value)
    print(f"{label}: {value}")


def _relative(target: Path, start_dir: Path) -> str:
    return Path(os.path.relpath(Path(target).resolve(), Path(start_dir).resolve())).as_posix()


def _load_problem_for(header_problem: Optional[str], solution_path: Path, override: Optional[str]):
    if override is not None:
        return DatasetService.load_problem(override)
    if header_problem is None:
        raise InputError(f"{solution_path}: solution names no problem file; pass --problem")
    return DatasetService.load_problem(solution_path.parent / header_problem)


def cmd_simulate(args: argparse.Namespace, cfg: RunConfig) -> int:
    """
    Generate a scenario from a spec and export it.

    Args:
        args: spec, out
        cfg: Run configuration

    Returns:
        Exit code
    """
    spec = DatasetService.parse(ScenarioSpec, args.spec)
    if args.seed is not None:
        spec = spec.model_copy(update={"seed": args.seed})
    scenario = SimulationService.make_scenario(spec)
    outputs = SimulationService.generate(scenario, spec.render_subsample)
    out_dir = Path(args.out)
    paths = SimulationService.export(outputs, out_dir)
    shutil.copyfile(args.spec, out_dir / "spec.json")
    _out("object", scenario.object_kind)
    _out("train poses", outputs.problem.n_poses)
    _out("test poses", len(outputs.truth.test_ee_poses))
    _out("alpha", outputs.truth.alpha_true)
    _out("problem", paths["problem"])
    return 0


def cmd_align(args: argparse.Namespace, cfg: RunConfig) -> int:
    """
    Pairwise pointmap alignment of a manifest.

    Writes dense.ply and camera_poses.json under OUT, plus problem.json when
    the manifest carries end-effector poses and intrinsics.
    """
    manifest = DatasetService.load_manifest(args.manifest)
    preds = manifest.predictions
    if manifest.masks and not args.no_masks:
        preds = PointmapAlignmentService.apply_masks(preds, manifest.masks)
    result = PointmapAlignmentService.global_align(preds, cfg.global_align)

    out_dir = Path(args.out)
    write_json(out_dir / "camera_poses.json", {
        "camera_poses": [p.to_json()["matrix"] for p in result.camera_poses],
        "image_ids": result.image_ids,
        "final_loss": result.final_loss,
        "converged": result.converged,
        "iterations": result.iterations,
        "n_dense": len(result.dense),
    })
    if args.per_pose:
        ObjectPoseService.export_ply(ObjectPoseService.reinterpret(result), out_dir / "poses")
    if manifest.ee_poses is not None and manifest.intrinsics is not None:
        problem = ObjectPoseService.build_problem(
            result, manifest.ee_poses, manifest.intrinsics, manifest.render_subsample
        )
        DatasetService.save_problem(problem, out_dir / "problem.json")
    else:
        write_ply(out_dir / "dense.ply", result.dense)

    _out("final loss", result.final_loss)
    _out("iterations", result.iterations)
    _out("converged", "yes" if result.converged else "no (iteration budget exhausted)")
    _out("dense points", len(result.dense))
    return 0


def cmd_solve(args: argparse.Namespace, cfg: RunConfig) -> int:
    """
    Solve an alignment problem with the chosen method.

    Args:
        args: problem, out, method, ground_truth
        cfg: Run configuration (coord_align, regressor)

    Returns:
        Exit code
    """
    problem_path = Path(args.problem)
    problem = DatasetService.load_problem(problem_path)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    problem_ref = _relative(problem_path, out_path.parent)

    if args.method == "regress":
        params = BaselineService.train_direct(problem.ee_poses, problem.cam_obj_poses, cfg.regressor)
        regressor_path = out_path.parent / f"{out_path.stem}_regressor.json"
        write_json(regressor_path, params.to_json())
        write_json(out_path, {"method": "regress", "problem": problem_ref, "regressor": regressor_path.name})
        _out("method", "regress")
        _out("training poses", problem.n_poses)
        _out("regressor", regressor_path)
        return 0

    if args.method == "rendered":
        solution = CoordinateAlignmentService.solve(problem, cfg.coord_align)
    else:
        solution = BaselineService.solve_no_render(problem, cfg.coord_align)
    data = solution.to_json()
    data["problem"] = problem_ref
    write_json(out_path, data)

    _out("method", solution.method)
    _out("alpha", solution.alpha)
    _out("loss px", solution.final_loss)
    _out("start losses", solution.start_losses)
    _out("best of starts", min(solution.start_losses) if solution.start_losses else solution.final_loss)
    _out("converged", "yes" if solution.converged else "no")
    if args.ground_truth:
        truth = read_json(args.ground_truth)
        H_true = Transform3.from_json(truth["H_true"])
        alpha_true = float(truth["alpha_true"])
        _out("alpha true", alpha_true)
        _out("alpha rel err", abs(solution.alpha - alpha_true) / alpha_true)
        _out("H rot err deg", np.rad2deg(geodesic_angle(solution.H.R, H_true.R)))
        _out("H trans err mm", 1e3 * float(np.linalg.norm(solution.H.t - H_true.t)))
    return 0


def cmd_evaluate(args: argparse.Namespace, cfg: RunConfig) -> int:
    """
    Score a solution on a test set and write the report.

    The report holds one row per method with per-pose and mean D̂.
    """
    solution_path = Path(args.solution)
    header, solution, params = DatasetService.load_solution(solution_path)
    problem = _load_problem_for(header.problem, solution_path, args.problem)
    testset = DatasetService.load_evaluation_set(args.testset)
    K = testset.intrinsics or problem.intrinsics
    if K != problem.intrinsics:
        problem = AlignmentProblem(problem.ee_poses, problem.cam_obj_poses, problem.dense, K, problem.render_subsample)

    if params is not None:
        poses = [BaselineService.predict_direct(params, e) for e in testset.ee_poses]
        report = EvaluationService.evaluate_poses(
            problem.dense, poses, testset.masks, K, "regress", args.subsample, args.overlays
        )
    else:
        report = EvaluationService.evaluate_solution(
            solution, problem, testset.ee_poses, testset.masks, args.subsample, args.overlays,
            mean=cfg.coord_align.mean,
        )
    write_json(args.report, {"rows": [report]})
    for row in report["per_pose"]:
        _out(f"pose {row['index']} D_hat", row["D_hat"])
    _out(f"{report['method']} mean D_hat", report["mean_D_hat"])
    return 0


def cmd_pour(args: argparse.Namespace, cfg: RunConfig) -> int:
    """
    Rotate the held object about a pivot and solve for the joint configuration.

    Prints the goal configuration and how far the pivot moves when the robot
    is sent there (predicted with the solution's H; also with the true H when
    --ground-truth is given).
    """
    solution_path = Path(args.solution)
    header, solution, _ = DatasetService.load_solution(solution_path)
    if solution is None:
        raise InputError("pour needs a structured solution carrying H; regress solutions have none")
    chain = DatasetService.load_chain(args.chain)
    q0 = np.asarray(args.q0, dtype=np.float64)
    pivot = PointsOfInterest(np.asarray(args.pivot, dtype=np.float64))
    axis = np.asarray(args.axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if norm == 0:
        raise InputError("pivot axis must be nonzero")
    axis = axis / norm

    H = solution.H
    current = KinematicsService.object_pose(chain, q0, H)
    goal = KinematicsService.pivot_goal(current, pivot.points[0], axis, np.deg2rad(args.angle_deg))
    q = KinematicsService.psi_inverse(chain, goal, H, q0, cfg.ik)

    before = KinematicsService.psi(chain, q0, H, pivot)[0]
    after = KinematicsService.psi(chain, q, H, pivot)[0]
    _out("goal q", q.q)
    _out("pivot displacement mm", 1e3 * float(np.linalg.norm(after - before)))
    if args.ground_truth:
        H_true = Transform3.from_json(read_json(args.ground_truth)["H_true"])
        moved = KinematicsService.psi(chain, q, H_true, pivot)[0] - KinematicsService.psi(chain, q0, H_true, pivot)[0]
        _out("true pivot displacement mm", 1e3 * float(np.linalg.norm(moved)))
    return 0


def cmd_benchmark(args: argparse.Namespace, cfg: RunConfig) -> int:
    """Run the method comparison and/or the data-reduction study and write a JSON table."""
    seeds = list(range(cfg.seed, cfg.seed + args.seeds))
    table = {"seeds": seeds}
    if args.experiment in ("compare", "all"):
        table["compare"] = ExperimentService.compare_methods(
            seeds, args.object, args.n_train, cfg.coord_align, cfg.regressor
        )
        for method, value in table["compare"]["mean"].items():
            _out(f"{method} mean D_hat", value)
    if args.experiment in ("reduction", "all"):
        table["reduction"] = ExperimentService.data_reduction(seeds, args.sizes, args.object, cfg.coord_align)
        for key, value in table["reduction"]["mean"].items():
            _out(f"{key} mean D_hat", value)
    write_json(args.out, table)
    return 0


def cmd_serve(args: argparse.Namespace, cfg: RunConfig) -> int:
    import uvicorn

    host = args.host or settings.api.host
    port = args.port or settings.api.port
    logger.info(f"Starting {settings.api.title} on {host}:{port}")
    uvicorn.run(
        "graspalign.main:app",
        host=host,
        port=port,
        reload=settings.debug,
        log_level=settings.logging.level.lower(),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graspalign",
        description="Geometry and pose of a grasped object from pointmaps and end-effector poses.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="seed for every random choice")
    parser.add_argument("--threads", type=int, default=None, help="torch intra-op threads (default 1)")
    parser.add_argument("--config", default=None, help="JSON run configuration; flags override it")
    parser.add_argument("--log-level", choices=sorted(LOG_LEVELS), default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scenario")
    p.add_argument("spec")
    p.add_argument("out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("align", help="pairwise pointmap alignment")
    p.add_argument("manifest")
    p.add_argument("out")
    p.add_argument("--conf-threshold", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--no-masks", action="store_true", help="ignore the manifest's object masks")
    p.add_argument("--per-pose", action="store_true", help="also write the cloud in every camera frame")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("solve", help="recover H and alpha")
    p.add_argument("problem")
    p.add_argument("out")
    p.add_argument("--method", choices=["rendered", "no-render", "regress"], default="rendered")
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--ground-truth", default=None, help="ground_truth.json to compare against")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="test-set pixel distances")
    p.add_argument("solution")
    p.add_argument("testset")
    p.add_argument("report")
    p.add_argument("--problem", default=None, help="problem file (default: the one the solution names)")
    p.add_argument("--overlays", default=None, help="directory for overlay PPMs")
    p.add_argument("--subsample", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pour", help="pivot rotation of the held object")
    p.add_argument("solution")
    p.add_argument("chain", help="chain JSON file or built-in chain name")
    p.add_argument("--pivot", type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--axis", type=float, nargs=3, default=[0.0, 1.0, 0.0], metavar=("X", "Y", "Z"))
    p.add_argument("--angle-deg", type=float, default=45.0)
    p.add_argument("--q0", type=float, nargs="+", required=True)
    p.add_argument("--ground-truth", default=None)
    p.set_defaults(func=cmd_pour)

    p = sub.add_parser("benchmark", help="desk-scale method comparison")
    p.add_argument("out")
    p.add_argument("--experiment", choices=["compare", "reduction", "all"], default="all")
    p.add_argument("--seeds", type=int, default=10, help="number of scenario seeds")
    p.add_argument("--object", default="hammer")
    p.add_argument("--n-train", type=int, default=9)
    p.add_argument("--sizes", type=int, nargs="+", default=[3, 6, 9])
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    seed = args.seed
    coord = {"seed": seed}
    if args.command == "solve":
        coord.update({"n_starts": args.starts, "max_iters": args.max_iters})
    overrides = {
        "seed": seed,
        "threads": args.threads,
        "log_level": args.log_level,
        "coord_align": coord,
        "regressor": {"seed": seed},
    }
    if args.command == "align":
        overrides["global_align"] = {"conf_threshold": args.conf_threshold, "max_iters": args.max_iters}
    return RunConfig.load(args.config, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run one sub-command and map failures to exit codes.

    Args:
        argv: Argument list (defaults to sys.argv[1:])

    Returns:
        Process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is not None and args.threads < 1:
            raise InputError("--threads must be >= 1")
        cfg = _run_config(args)
        setup_logging(cfg.log_level)
        torch.set_num_threads(args.threads or cfg.threads or settings.solver.threads)
        logger.debug(f"{args.command}: seed {cfg.seed}, threads {torch.get_num_threads()}")
        return args.func(args, cfg)
    except GraspAlignError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return InputError.exit_code
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
