"""
Service layer for reading and writing datasets.

Every JSON file is validated against its schema in graspalign.schemas; schema
violations surface as InputError. Paths inside files are relative to the file.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from graspalign.core.errors import InputError
from graspalign.core.logging import logger
from graspalign.models.alignment import AlignmentProblem, AlignmentSolution, CameraObjectPose
from graspalign.models.geometry import Intrinsics, Transform3
from graspalign.models.kinematics import ChainSpec
from graspalign.models.pointmap import ConfidenceMap, PairPrediction, Pointmap
from graspalign.models.regressor import RegressorParams
from graspalign.schemas.files import EvaluationSetFile, ManifestFile, ProblemFile, SolutionFile
from graspalign.services.kinematics import KinematicsService
from graspalign.utils.formats import read_mask, read_pmap, read_ply, write_pgm, write_pmap, write_ply
from graspalign.utils.serialization import read_json, write_json

PathLike = Union[str, Path]
SchemaT = TypeVar("SchemaT", bound=BaseModel)


@dataclass
class Manifest:
    """Pair predictions plus whatever else the manifest carried."""

    predictions: List[PairPrediction]
    masks: Dict[int, np.ndarray] = field(default_factory=dict)
    ee_poses: Optional[List[Transform3]] = None
    intrinsics: Optional[Intrinsics] = None
    render_subsample: int = 8


@dataclass
class EvaluationSet:
    ee_poses: List[Transform3]
    masks: List[np.ndarray]
    intrinsics: Optional[Intrinsics] = None


def _intrinsics(schema) -> Optional[Intrinsics]:
    return None if schema is None else Intrinsics(**schema.model_dump())


def _matrices(transforms: Sequence[Transform3]) -> List[List[float]]:
    return [t.to_json()["matrix"] for t in transforms]


class DatasetService:
    """Service class for dataset files."""

    @staticmethod
    def parse(schema: Type[SchemaT], path: PathLike) -> SchemaT:
        """Read a JSON file and validate it against `schema`."""
        data = read_json(path)
        try:
            return schema.model_validate(data)
        except ValidationError as e:
            raise InputError(f"{path}: {e}") from e

    @staticmethod
    def load_problem(path: PathLike) -> AlignmentProblem:
        """
        Load an alignment problem.

        Args:
            path: Problem JSON; its "dense" entry names a PLY next to it

        Returns:
            AlignmentProblem
        """
        path = Path(path)
        spec = DatasetService.parse(ProblemFile, path)
        dense = read_ply(path.parent / spec.dense)
        return AlignmentProblem(
            ee_poses=[Transform3.from_json(m) for m in spec.ee_poses],
            cam_obj_poses=[CameraObjectPose.from_transform(Transform3.from_json(m)) for m in spec.cam_obj_poses],
            dense=dense,
            intrinsics=_intrinsics(spec.intrinsics),
            render_subsample=spec.render_subsample,
        )

    @staticmethod
    def save_problem(problem: AlignmentProblem, path: PathLike, dense_name: str = "dense.ply") -> Path:
        path = Path(path)
        write_ply(path.parent / dense_name, problem.dense)
        write_json(path, {
            "ee_poses": _matrices(problem.ee_poses),
            "cam_obj_poses": _matrices([p.as_transform() for p in problem.cam_obj_poses]),
            "dense": dense_name,
            "intrinsics": problem.intrinsics.to_json(),
            "render_subsample": problem.render_subsample,
        })
        logger.info(f"Wrote problem with {problem.n_poses} poses to {path}")
        return path

    @staticmethod
    def load_manifest(path: PathLike) -> Manifest:
        """
        Load the pair predictions named by a manifest.

        Args:
            path: Manifest JSON

        Returns:
            Manifest with predictions in file order and masks keyed by image index
        """
        path = Path(path)
        spec = DatasetService.parse(ManifestFile, path)
        preds = []
        for entry in spec.pairs:
            x_nn, c_nn = read_pmap(path.parent / entry.x_nn)
            x_nm, c_nm = read_pmap(path.parent / entry.x_nm)
            preds.append(PairPrediction(
                n=entry.n, m=entry.m,
                x_nn=Pointmap(x_nn), x_nm=Pointmap(x_nm),
                c_nn=ConfidenceMap(c_nn), c_nm=ConfidenceMap(c_nm),
            ))
        shape = preds[0].shape
        masks = {}
        for key, rel in spec.masks.items():
            try:
                index = int(key)
            except ValueError as e:
                raise InputError(f"{path}: mask key {key!r} is not an image index") from e
            masks[index] = read_mask(path.parent / rel, shape)
        ee_poses = None if spec.ee_poses is None else [Transform3.from_json(m) for m in spec.ee_poses]
        logger.info(f"Loaded {len(preds)} pairs and {len(masks)} masks from {path}")
        return Manifest(preds, masks, ee_poses, _intrinsics(spec.intrinsics), spec.render_subsample)

    @staticmethod
    def save_manifest(
        preds: Sequence[PairPrediction],
        out_dir: PathLike,
        masks: Optional[Dict[int, np.ndarray]] = None,
        ee_poses: Optional[Sequence[Transform3]] = None,
        intrinsics: Optional[Intrinsics] = None,
        render_subsample: int = 8,
    ) -> Path:
        """Write one PMAP per pair member plus manifest.json; returns the manifest path."""
        out_dir = Path(out_dir)
        pairs = []
        for e, pred in enumerate(preds):
            names = []
            for i, x, c in pred.members():
                rel = f"pointmaps/pair_{e:03d}_{pred.n:03d}_{pred.m:03d}_img{i:03d}.pmap"
                write_pmap(out_dir / rel, x.coords, c.values)
                names.append(rel)
            pairs.append({"n": pred.n, "m": pred.m, "x_nn": names[0], "x_nm": names[1]})
        mask_files = {}
        for i, mask in sorted((masks or {}).items()):
            rel = f"masks/image_{i:03d}.pgm"
            write_pgm(out_dir / rel, mask)
            mask_files[str(i)] = rel
        data = {"pairs": pairs, "masks": mask_files, "render_subsample": render_subsample}
        if ee_poses is not None:
            data["ee_poses"] = _matrices(ee_poses)
        if intrinsics is not None:
            data["intrinsics"] = intrinsics.to_json()
        return write_json(out_dir / "manifest.json", data)

    @staticmethod
    def load_evaluation_set(path: PathLike) -> EvaluationSet:
        """Load a test set; `path` is the JSON file or the directory holding testset.json."""
        path = Path(path)
        if path.is_dir():
            path = path / "testset.json"
        spec = DatasetService.parse(EvaluationSetFile, path)
        masks = [read_mask(path.parent / rel) for rel in spec.masks]
        return EvaluationSet([Transform3.from_json(m) for m in spec.ee_poses], masks, _intrinsics(spec.intrinsics))

    @staticmethod
    def save_evaluation_set(
        out_dir: PathLike, ee_poses: Sequence[Transform3], masks: Sequence[np.ndarray],
        intrinsics: Optional[Intrinsics] = None,
    ) -> Path:
        out_dir = Path(out_dir)
        names = []
        for k, mask in enumerate(masks):
            names.append(f"mask_{k:03d}.pgm")
            write_pgm(out_dir / names[-1], mask)
        data = {"ee_poses": _matrices(ee_poses), "masks": names}
        if intrinsics is not None:
            data["intrinsics"] = intrinsics.to_json()
        return write_json(out_dir / "testset.json", data)

    @staticmethod
    def load_solution(path: PathLike) -> Tuple[SolutionFile, Optional[AlignmentSolution], Optional[RegressorParams]]:
        """
        Load a solution written by the solve command.

        Returns:
            The validated header, the structured solution (None for regress)
            and the regressor weights (None otherwise)
        """
        path = Path(path)
        header = DatasetService.parse(SolutionFile, path)
        if header.method == "regress":
            params = RegressorParams.from_json(read_json(path.parent / header.regressor))
            return header, None, params
        return header, AlignmentSolution.from_json(read_json(path)), None

    @staticmethod
    def load_chain(source: PathLike) -> ChainSpec:
        """A built-in chain name or a chain JSON file."""
        path = Path(source)
        if not path.exists() and not path.suffix:
            return KinematicsService.builtin(str(source))
        data = read_json(path)
        if not isinstance(data, dict):
            raise InputError(f"{path}: chain file must be a JSON object")
        return ChainSpec.from_json(data)
