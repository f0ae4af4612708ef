"""
Service layer for pairwise pointmap alignment.

Pair predictions are brought into one common frame by solving for a global
raster per image together with one rigid pose and one positive scale per pair.
The first pair is the gauge anchor (identity pose, unit scale).
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from graspalign.core.config import GlobalAlignOptions
from graspalign.core.errors import GraphError, InputError, NoSupervisionError
from graspalign.core.logging import logger
from graspalign.models.geometry import DenseCloud, Rotation3, Transform3
from graspalign.models.pointmap import (
    ConfidenceMap,
    GlobalAlignmentResult,
    GlobalAlignmentVariables,
    PairPrediction,
)
from graspalign.services import autodiff
from graspalign.services.optim import ParamGroup, run_adam
from graspalign.services.se3 import mean_transform, umeyama

Member = Tuple[int, torch.Tensor, torch.Tensor]


class PointmapAlignmentService:
    """Service class for the pairwise pointmap alignment."""

    @staticmethod
    def mask_confidences(pred: PairPrediction, mask_n: np.ndarray, mask_m: np.ndarray) -> PairPrediction:
        """
        Zero the confidence of every masked-out pixel.

        Args:
            pred: Pair prediction
            mask_n: Binary (H, W) raster for image n
            mask_m: Binary (H, W) raster for image m

        Returns:
            A new prediction; coordinates are untouched
        """
        mask_n = np.asarray(mask_n)
        mask_m = np.asarray(mask_m)
        for name, mask in (("mask_n", mask_n), ("mask_m", mask_m)):
            if mask.shape != pred.shape:
                raise InputError(f"{name} has size {mask.shape}, pair ({pred.n},{pred.m}) rasters are {pred.shape}")
        return PairPrediction(
            n=pred.n,
            m=pred.m,
            x_nn=pred.x_nn,
            x_nm=pred.x_nm,
            c_nn=ConfidenceMap(np.where(mask_n.astype(bool), pred.c_nn.values, 0.0)),
            c_nm=ConfidenceMap(np.where(mask_m.astype(bool), pred.c_nm.values, 0.0)),
        )

    @staticmethod
    def apply_masks(preds: Sequence[PairPrediction], masks: Dict[int, np.ndarray]) -> List[PairPrediction]:
        """mask_confidences over a pair list with one mask per image; images without a mask stay unmasked."""
        out = []
        for pred in preds:
            ones = np.ones(pred.shape, dtype=bool)
            out.append(PointmapAlignmentService.mask_confidences(
                pred, masks.get(pred.n, ones), masks.get(pred.m, ones)
            ))
        return out

    @staticmethod
    def members_as_tensors(preds: Sequence[PairPrediction]) -> List[List[Member]]:
        return [
            [(i, autodiff.as_tensor(x.flat()), autodiff.as_tensor(c.flat())) for i, x, c in pred.members()]
            for pred in preds
        ]

    @staticmethod
    def loss_tensor(
        maps: Dict[int, torch.Tensor],
        rotations: torch.Tensor,
        translations: torch.Tensor,
        log_scales: torch.Tensor,
        members: List[List[Member]],
    ) -> torch.Tensor:
        """
        Differentiable alignment objective.

        Args:
            maps: Global raster per image, flattened to (H*W, 3)
            rotations: (E, 3, 3) pair rotations
            translations: (E, 3) pair translations
            log_scales: (E,) log of the pair scales
            members: Per pair, (image, coords, confidence) of both members

        Returns:
            Confidence-weighted sum of point distances, accumulated in pair order
        """
        total = torch.zeros((), dtype=autodiff.DTYPE)
        for e, pair in enumerate(members):
            sigma = torch.exp(log_scales[e])
            for i, x, c in pair:
                aligned = sigma * (x @ rotations[e].T) + translations[e]
                dist = torch.linalg.vector_norm(maps[i] - aligned, dim=-1)
                total = total + (c * dist).sum()
        return total

    @staticmethod
    def alignment_loss(variables: GlobalAlignmentVariables, preds: Sequence[PairPrediction]) -> float:
        """
        Evaluate the alignment objective for fixed variables.

        Args:
            variables: Global rasters, pair poses and pair scales
            preds: Pair predictions, in the same order as the pair variables

        Returns:
            Nonnegative loss
        """
        if len(variables.pair_poses) != len(preds):
            raise InputError(f"{len(variables.pair_poses)} pair poses for {len(preds)} pairs")
        for pred in preds:
            for i in (pred.n, pred.m):
                if i not in variables.global_maps:
                    raise InputError(f"pair ({pred.n},{pred.m}) refers to image {i} with no global raster")
        maps = {i: autodiff.as_tensor(np.asarray(v).reshape(-1, 3)) for i, v in variables.global_maps.items()}
        rotations = autodiff.as_tensor(np.stack([p.R for p in variables.pair_poses]))
        translations = autodiff.as_tensor(np.stack([p.t for p in variables.pair_poses]))
        log_scales = autodiff.as_tensor(np.log(variables.pair_scales))
        with torch.no_grad():
            value = PointmapAlignmentService.loss_tensor(
                maps, rotations, translations, log_scales, PointmapAlignmentService.members_as_tensors(preds)
            )
        return float(value)

    @staticmethod
    def image_ids(preds: Sequence[PairPrediction]) -> List[int]:
        """Sorted image indices; they must be 0..N-1 with N >= 2 and the pair graph connected."""
        if len(preds) == 0:
            raise InputError("no pair predictions given")
        ids = sorted({p.n for p in preds} | {p.m for p in preds})
        if ids != list(range(len(ids))):
            raise InputError(f"image indices must be 0..N-1, got {ids}")
        if len(ids) < 2:
            raise InputError("alignment needs at least 2 images")
        rows = [p.n for p in preds]
        cols = [p.m for p in preds]
        graph = coo_matrix((np.ones(len(preds)), (rows, cols)), shape=(len(ids), len(ids)))
        n_comp, labels = connected_components(graph, directed=False)
        if n_comp > 1:
            raise GraphError(
                f"pair graph is disconnected: {n_comp} components, image labels {labels.tolist()}"
            )
        shapes = {p.shape for p in preds}
        if len(shapes) != 1:
            raise InputError(f"all rasters must share one size, got {sorted(shapes)}")
        return ids

    @staticmethod
    def initialize(preds: Sequence[PairPrediction]) -> GlobalAlignmentVariables:
        """
        Chain confidence-weighted similarity fits outward from the anchor pair.

        Args:
            preds: Pair predictions (graph already checked)

        Returns:
            Initial variables with the anchor pair at identity and unit scale
        """
        maps: Dict[int, np.ndarray] = {}
        poses: List[Optional[Transform3]] = [None] * len(preds)
        scales: List[Optional[float]] = [None] * len(preds)

        first = preds[0]
        maps[first.n] = first.x_nn.flat().copy()
        maps[first.m] = first.x_nm.flat().copy()
        poses[0] = Transform3.identity()
        scales[0] = 1.0

        pending = set(range(1, len(preds)))
        while pending:
            ready = [e for e in sorted(pending) if preds[e].n in maps or preds[e].m in maps]
            if not ready:
                raise GraphError(f"pairs {sorted(pending)} are not connected to the anchor pair")
            e = ready[0]
            pending.discard(e)
            src, dst, w = [], [], []
            for i, x, c in preds[e].members():
                if i in maps:
                    src.append(x.flat())
                    dst.append(maps[i])
                    w.append(c.flat())
            weights = np.concatenate(w)
            if weights.sum() <= 0:
                weights = np.ones_like(weights)
            sigma, rot, trans = umeyama(np.concatenate(src), np.concatenate(dst), weights)
            if not np.isfinite(sigma) or sigma <= 0:
                sigma = 1.0
            poses[e] = Transform3(Rotation3(rot), trans)
            scales[e] = sigma
            for i, x, _ in preds[e].members():
                if i not in maps:
                    maps[i] = sigma * x.flat() @ rot.T + trans
            logger.debug(f"Initialized pair {e} ({preds[e].n},{preds[e].m}) with scale {sigma:.6g}")

        return GlobalAlignmentVariables(global_maps=maps, pair_poses=poses, pair_scales=scales)

    @staticmethod
    def camera_poses(preds: Sequence[PairPrediction], pair_poses: Sequence[Transform3], n_images: int) -> List[Transform3]:
        """P̄_n from the pairs in which n is the first member (averaged when several)."""
        out = []
        for n in range(n_images):
            refs = [pair_poses[e] for e, p in enumerate(preds) if p.n == n]
            if not refs:
                raise GraphError(f"image {n} is never the first member of a pair, so it has no camera pose")
            pose, spread = mean_transform(refs)
            if spread > 1e-3:
                logger.debug(f"Camera {n}: {len(refs)} reference pairs disagree by {spread:.3g}")
            out.append(pose)
        return out

    @staticmethod
    def extract_dense(
        preds: Sequence[PairPrediction], maps: Dict[int, np.ndarray], n_images: int, threshold: float
    ) -> DenseCloud:
        """Global-raster points whose per-image confidence (max over that image's rasters) exceeds threshold."""
        pts, confs = [], []
        for i in range(n_images):
            conf = None
            for pred in preds:
                for j, _, c in pred.members():
                    if j == i:
                        conf = c.flat() if conf is None else np.maximum(conf, c.flat())
            keep = conf > threshold
            pts.append(np.asarray(maps[i]).reshape(-1, 3)[keep])
            confs.append(conf[keep])
        points = np.concatenate(pts)
        if points.shape[0] == 0:
            raise NoSupervisionError(f"no supervising pixels: no confidence exceeds the threshold {threshold:g}")
        return DenseCloud(points, np.concatenate(confs))

    @staticmethod
    def global_align(preds: Sequence[PairPrediction], opts: Optional[GlobalAlignOptions] = None) -> GlobalAlignmentResult:
        """
        Solve the pairwise alignment and extract the dense cloud and camera poses.

        Args:
            preds: Pair predictions over a connected image graph
            opts: Solver options

        Returns:
            GlobalAlignmentResult; `converged` is False when the iteration
            budget ran out first
        """
        opts = opts or GlobalAlignOptions()
        preds = list(preds)
        ids = PointmapAlignmentService.image_ids(preds)
        if all(np.all(c.values == 0) for p in preds for c in (p.c_nn, p.c_nm)):
            raise NoSupervisionError("no supervising pixels: every confidence is zero")
        logger.info(f"Aligning {len(preds)} pairs over {len(ids)} images")

        init = PointmapAlignmentService.initialize(preds)
        members = PointmapAlignmentService.members_as_tensors(preds)

        maps = {i: autodiff.as_tensor(init.global_maps[i], requires_grad=True) for i in ids}
        n_free = len(preds) - 1
        rot_raw = autodiff.as_tensor(
            np.stack([p.R for p in init.pair_poses[1:]]) if n_free else np.zeros((0, 3, 3)), requires_grad=True
        )
        trans = autodiff.as_tensor(
            np.stack([p.t for p in init.pair_poses[1:]]) if n_free else np.zeros((0, 3)), requires_grad=True
        )
        log_scales = autodiff.as_tensor(np.log(init.pair_scales[1:]), requires_grad=True)
        eye = torch.eye(3, dtype=autodiff.DTYPE).unsqueeze(0)
        zero3 = torch.zeros((1, 3), dtype=autodiff.DTYPE)
        zero1 = torch.zeros((1,), dtype=autodiff.DTYPE)

        def assemble():
            rots = torch.cat([eye, autodiff.procrustes(rot_raw)], dim=0) if n_free else eye
            return rots, torch.cat([zero3, trans], dim=0), torch.cat([zero1, log_scales], dim=0)

        def objective():
            rots, ts, ls = assemble()
            return PointmapAlignmentService.loss_tensor(maps, rots, ts, ls, members)

        def reproject():
            if n_free:
                rot_raw.copy_(autodiff.procrustes(rot_raw))

        groups = [ParamGroup(list(maps.values()), opts.step, "maps")]
        if n_free:
            groups.append(ParamGroup([rot_raw, trans, log_scales], opts.step, "pairs"))
        result = run_adam(
            groups,
            objective,
            max_iters=opts.max_iters,
            backoff=opts.backoff,
            min_step=opts.min_step,
            cosine_decay=opts.cosine_decay,
            converge_tol=opts.converge_tol,
            post_step=reproject,
            log_every=opts.log_every,
            label="global_align",
        )

        with torch.no_grad():
            rots, ts, ls = assemble()
        pair_poses = [Transform3(Rotation3(r), t) for r, t in zip(rots.numpy(), ts.numpy())]
        final_maps = {i: maps[i].detach().numpy().reshape(preds[0].shape + (3,)) for i in ids}
        variables = GlobalAlignmentVariables(
            global_maps=final_maps, pair_poses=pair_poses, pair_scales=np.exp(ls.numpy()).tolist()
        )
        camera_poses = PointmapAlignmentService.camera_poses(preds, pair_poses, len(ids))
        dense = PointmapAlignmentService.extract_dense(preds, final_maps, len(ids), opts.conf_threshold)

        if not result.converged:
            logger.warning(f"global_align stopped after {result.iterations} iterations without converging")
        logger.info(f"global_align finished: loss {result.loss:.6g}, {len(dense)} dense points")
        return GlobalAlignmentResult(
            dense=dense,
            camera_poses=camera_poses,
            final_loss=result.loss,
            converged=result.converged,
            iterations=result.iterations,
            variables=variables,
            image_ids=ids,
            loss_history=list(result.history),
        )
