"""
Service layer for the desk-scale comparison runs.

compare_methods   structured rendered solver against the no-render and
                  direct-regression baselines on noisy scenarios
data_reduction    rendered solver trained on the first 3, 6, 9 poses

Both report per-seed mean test D̂ and one-sided sign tests across seeds.
"""
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from graspalign.core.config import CoordAlignOptions, RegressorOptions
from graspalign.core.errors import InputError
from graspalign.core.logging import logger
from graspalign.models.alignment import AlignmentProblem
from graspalign.models.scenario import ScenarioOutputs
from graspalign.schemas.files import NoiseSchema, ObjectSpec, ScenarioSpec
from graspalign.services.baselines import BaselineService
from graspalign.services.coord_align import CoordinateAlignmentService
from graspalign.services.evaluation import EvaluationService
from graspalign.services.simulation import SimulationService

METHODS = ("rendered", "no-render", "regress")
BENCHMARK_NOISE = NoiseSchema(
    point_sigma=0.001,
    pose_rot_sigma=0.01,
    pose_trans_sigma=0.004,
    distance_scaling=True,
    reference_depth=0.5,
)


def sign_test(smaller: Sequence[float], larger: Sequence[float]) -> Dict[str, float]:
    """
    One-sided sign test of "smaller[i] < larger[i]" over paired runs.

    Returns:
        {"wins", "n", "p_value"}; ties are dropped
    """
    a = np.asarray(smaller, dtype=np.float64)
    b = np.asarray(larger, dtype=np.float64)
    if a.shape != b.shape:
        raise InputError(f"sign test needs paired samples, got {a.shape} and {b.shape}")
    decided = a != b
    n = int(decided.sum())
    wins = int((a[decided] < b[decided]).sum())
    p = binomtest(wins, n, 0.5, alternative="greater").pvalue if n else 1.0
    return {"wins": wins, "n": n, "p_value": float(p)}


class ExperimentService:
    """Service class for benchmark reproductions."""

    @staticmethod
    def benchmark_spec(seed: int, kind: str = "hammer", n_train: int = 9, n_test: int = 5,
                       noise: Optional[NoiseSchema] = None) -> ScenarioSpec:
        """Noisy desk-scale scenario; pose noise grows with the square of camera distance."""
        return ScenarioSpec(
            object=ObjectSpec(kind=kind),
            n_train=n_train,
            n_test=n_test,
            seed=seed,
            noise=noise or BENCHMARK_NOISE,
            config_spread=0.2,
        )

    @staticmethod
    def evaluate_method(
        method: str,
        problem: AlignmentProblem,
        outputs: ScenarioOutputs,
        coord_opts: Optional[CoordAlignOptions] = None,
        reg_opts: Optional[RegressorOptions] = None,
    ) -> float:
        """
        Fit one method on `problem` and score it on the scenario's test set.

        Returns:
            Mean D̂ over the test poses (pixels)
        """
        coord_opts = coord_opts or CoordAlignOptions()
        truth = outputs.truth
        K = problem.intrinsics
        if method == "rendered":
            solution = CoordinateAlignmentService.solve(problem, coord_opts)
        elif method == "no-render":
            solution = BaselineService.solve_no_render(problem, coord_opts)
        elif method == "regress":
            params = BaselineService.train_direct(problem.ee_poses, problem.cam_obj_poses, reg_opts)
            poses = [BaselineService.predict_direct(params, e) for e in truth.test_ee_poses]
            return EvaluationService.evaluate_poses(problem.dense, poses, truth.test_masks, K, method)["mean_D_hat"]
        else:
            raise InputError(f"method must be one of {METHODS}, got {method!r}")
        report = EvaluationService.evaluate_solution(
            solution, problem, truth.test_ee_poses, truth.test_masks, mean=coord_opts.mean
        )
        return report["mean_D_hat"]

    @staticmethod
    def compare_methods(
        seeds: Sequence[int],
        kind: str = "hammer",
        n_train: int = 9,
        coord_opts: Optional[CoordAlignOptions] = None,
        reg_opts: Optional[RegressorOptions] = None,
        noise: Optional[NoiseSchema] = None,
    ) -> dict:
        """
        Run all three methods on one scenario per seed.

        Args:
            seeds: Scenario seeds
            kind: Object kind
            n_train: Training poses per scenario
            coord_opts: Options for both structured solvers
            reg_opts: Options for the regressor
            noise: Noise model (defaults to distance-scaled benchmark noise)

        Returns:
            {"rows": [{"seed", <method>: D̂}], "mean": {...}, "sign_tests": {...},
             "regress_over_rendered": ratio of means}
        """
        rows: List[dict] = []
        for seed in seeds:
            outputs = SimulationService.generate(
                SimulationService.make_scenario(ExperimentService.benchmark_spec(seed, kind, n_train, noise=noise))
            )
            row = {"seed": int(seed)}
            for method in METHODS:
                row[method] = ExperimentService.evaluate_method(method, outputs.problem, outputs, coord_opts, reg_opts)
            logger.info(f"compare seed {seed}: " + ", ".join(f"{m} {row[m]:.4g}" for m in METHODS))
            rows.append(row)
        mean = {m: float(np.mean([r[m] for r in rows])) for m in METHODS}
        return {
            "object": kind,
            "n_train": n_train,
            "rows": rows,
            "mean": mean,
            "sign_tests": {
                "rendered<no-render": sign_test([r["rendered"] for r in rows], [r["no-render"] for r in rows]),
                "no-render<regress": sign_test([r["no-render"] for r in rows], [r["regress"] for r in rows]),
                "rendered<regress": sign_test([r["rendered"] for r in rows], [r["regress"] for r in rows]),
            },
            "regress_over_rendered": mean["regress"] / mean["rendered"] if mean["rendered"] > 0 else float("inf"),
        }

    @staticmethod
    def data_reduction(
        seeds: Sequence[int],
        sizes: Sequence[int] = (3, 6, 9),
        kind: str = "hammer",
        coord_opts: Optional[CoordAlignOptions] = None,
        noise: Optional[NoiseSchema] = None,
    ) -> dict:
        """
        Rendered solver trained on the first N poses of one scenario per seed.

        Returns:
            {"rows": [{"seed", "N=<n>": D̂}], "mean": {...}, "sign_tests": {...}}
        """
        sizes = sorted(int(s) for s in sizes)
        if sizes[0] < 2:
            raise InputError("every training size must be at least 2")
        rows: List[dict] = []
        for seed in seeds:
            outputs = SimulationService.generate(
                SimulationService.make_scenario(ExperimentService.benchmark_spec(seed, kind, sizes[-1], noise=noise))
            )
            row = {"seed": int(seed)}
            for size in sizes:
                subset = outputs.problem.subset(range(size))
                row[f"N={size}"] = ExperimentService.evaluate_method("rendered", subset, outputs, coord_opts)
            logger.info(f"reduction seed {seed}: " + ", ".join(f"{k} {v:.4g}" for k, v in row.items() if k != "seed"))
            rows.append(row)
        keys = [f"N={s}" for s in sizes]
        tests = {
            f"{big}<{small}": sign_test([r[big] for r in rows], [r[small] for r in rows])
            for small, big in zip(keys[:-1], keys[1:])
        }
        return {
            "object": kind,
            "rows": rows,
            "mean": {k: float(np.mean([r[k] for r in rows])) for k in keys},
            "sign_tests": tests,
        }
