"""
Service layer for synthetic scenarios.

Stands in for both the robot and the pointmap network: a known object, held at
a known H by a known chain, seen by a camera that never moves relative to the
base. The generator emits exactly what the pipeline consumes (an alignment
problem in gauge units and raw pair predictions) together with the ground
truth needed to score it.

    [C T_O]_n* = H*^-1 E_n^-1 [C T_B]*
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation

from graspalign.core.errors import InputError, VisibilityError
from graspalign.core.logging import logger
from graspalign.models.alignment import AlignmentProblem, CameraObjectPose
from graspalign.models.geometry import DenseCloud, Intrinsics, Rotation3, Transform3
from graspalign.models.kinematics import ChainSpec, Configuration
from graspalign.models.pointmap import ConfidenceMap, PairPrediction, Pointmap
from graspalign.models.scenario import MIN_DEPTH, GroundTruth, NoiseSpec, Scenario, ScenarioOutputs
from graspalign.schemas.files import ScenarioSpec
from graspalign.services.dataset import DatasetService
from graspalign.services.kinematics import KinematicsService
from graspalign.services.se3 import apply_points, compose
from graspalign.utils.formats import write_ply
from graspalign.utils.serialization import write_json

OBJECT_DEFAULTS: Dict[str, Dict[str, object]] = {
    "block": {"size": (0.1, 0.1, 0.1)},
    "tape": {"R": 0.05, "r": 0.01},
    "hammer": {"handle_length": 0.28, "handle_radius": 0.012, "head": (0.03, 0.11, 0.03)},
    "teapot": {"body": (0.07, 0.07, 0.055), "spout_length": 0.08, "spout_radius": 0.008, "spout_tilt_deg": 40.0},
    "screwdriver": {"handle_length": 0.1, "handle_radius": 0.014, "shaft_length": 0.1, "shaft_radius": 0.003},
    "wrench": {"length": 0.18, "width": 0.022, "thickness": 0.006, "ring_radius": 0.018},
    "brush": {"handle": (0.16, 0.02, 0.012), "bristles": (0.05, 0.03, 0.025)},
}
POINT_RANGE = (2000, 20000)

NOMINAL_CONFIGS = {
    "desk6r": (0.0, 0.5, -0.9, 0.0, 0.6, 0.0),
    "planar2": (0.4, 0.8),
}
DEFAULT_DEPTH = 0.6
TEAPOT_DEPTH = 0.45
VIEW_MARGIN_PX = 4.0
MAX_DRAWS = 500

BACKGROUND_DEPTH = 1.5
BACKGROUND_CONFIDENCE = 1.0
CONFIDENCE_NOISE_SCALE = 1e-3
PAIR_SCALE_RANGE = (0.5, 2.0)


def _box(rng: np.random.Generator, n: int, size, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Area-weighted samples on the surface of an axis-aligned box."""
    size = np.asarray(size, dtype=np.float64)
    sx, sy, sz = size
    areas = np.array([sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy])
    face = rng.choice(6, size=n, p=areas / areas.sum())
    pts = rng.uniform(-0.5, 0.5, size=(n, 3)) * size
    axis = face // 2
    sign = np.where(face % 2 == 0, -1.0, 1.0)
    pts[np.arange(n), axis] = sign * size[axis] / 2
    return pts + np.asarray(center)


def _axis_rotation(direction) -> np.ndarray:
    """Rotation taking +z onto `direction`."""
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    axis = np.cross([0.0, 0.0, 1.0], d)
    s = np.linalg.norm(axis)
    if s < 1e-12:
        return np.eye(3) if d[2] > 0 else np.diag([1.0, -1.0, -1.0])
    return Rotation.from_rotvec(axis / s * np.arctan2(s, d[2])).as_matrix()


def _cylinder(rng: np.random.Generator, n: int, radius: float, length: float, direction=(1.0, 0.0, 0.0),
              center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Side and both caps of a closed cylinder."""
    side = 2 * np.pi * radius * length
    cap = np.pi * radius ** 2
    part = rng.choice(3, size=n, p=np.array([side, cap, cap]) / (side + 2 * cap))
    theta = rng.uniform(0.0, 2 * np.pi, size=n)
    rho = np.where(part == 0, radius, radius * np.sqrt(rng.uniform(0.0, 1.0, size=n)))
    h = np.where(part == 0, rng.uniform(-length / 2, length / 2, size=n),
                 np.where(part == 1, -length / 2, length / 2))
    local = np.stack([rho * np.cos(theta), rho * np.sin(theta), h], axis=1)
    return local @ _axis_rotation(direction).T + np.asarray(center)


def _ellipsoid(rng: np.random.Generator, n: int, radii, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * np.asarray(radii) + np.asarray(center)


def _torus(rng: np.random.Generator, n: int, R: float, r: float, direction=(0.0, 0.0, 1.0),
           center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Torus surface around `direction`; the tube angle is drawn by rejection so samples are area-uniform."""
    phis = []
    while sum(p.size for p in phis) < n:
        cand = rng.uniform(0.0, 2 * np.pi, size=n)
        keep = rng.uniform(0.0, R + r, size=n) < R + r * np.cos(cand)
        phis.append(cand[keep])
    phi = np.concatenate(phis)[:n]
    theta = rng.uniform(0.0, 2 * np.pi, size=n)
    ring = R + r * np.cos(phi)
    local = np.stack([ring * np.cos(theta), ring * np.sin(theta), r * np.sin(phi)], axis=1)
    return local @ _axis_rotation(direction).T + np.asarray(center)


def _split(n: int, weights: Sequence[float]) -> List[int]:
    w = np.asarray(weights, dtype=np.float64)
    counts = np.floor(n * w / w.sum()).astype(int)
    counts[0] += n - counts.sum()
    return counts.tolist()


def _spout(p: Dict[str, object]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Start, direction and tip of the teapot spout."""
    tilt = np.deg2rad(float(p["spout_tilt_deg"]))
    direction = np.array([np.cos(tilt), 0.0, np.sin(tilt)])
    start = np.array([0.8 * float(p["body"][0]), 0.0, 0.0])
    return start, direction, start + float(p["spout_length"]) * direction


def keypoints(kind: str, params: Optional[Dict[str, object]] = None) -> Optional[np.ndarray]:
    """Designated points on the object (object frame); for the teapot, the spout tip."""
    if kind not in OBJECT_DEFAULTS:
        return None
    p = {**OBJECT_DEFAULTS[kind], **(params or {})}
    if kind == "teapot":
        return _spout(p)[2].reshape(1, 3)
    if kind == "hammer":
        return np.array([[float(p["handle_length"]) - 0.08 + float(p["head"][0]) / 2, 0.0, 0.0]])
    if kind == "screwdriver":
        return np.array([[float(p["handle_length"]) / 2 + float(p["shaft_length"]), 0.0, 0.0]])
    return None


def _check_params(kind: str, params: Dict[str, object]) -> Dict[str, object]:
    unknown = set(params) - set(OBJECT_DEFAULTS[kind])
    if unknown:
        raise InputError(f"unknown {kind} parameters {sorted(unknown)}; expected {sorted(OBJECT_DEFAULTS[kind])}")
    merged = {**OBJECT_DEFAULTS[kind], **params}
    for name, value in merged.items():
        try:
            values = np.atleast_1d(np.asarray(value, dtype=np.float64))
        except (TypeError, ValueError) as e:
            raise InputError(f"{kind}.{name} must be numeric, got {value!r}") from e
        expected = np.atleast_1d(np.asarray(OBJECT_DEFAULTS[kind][name])).shape
        if values.shape != expected:
            raise InputError(f"{kind}.{name} must have {expected[0]} entries, got {values.size}")
        if name == "spout_tilt_deg":
            if not (np.all(np.isfinite(values)) and 0.0 <= values[0] <= 90.0):
                raise InputError(f"{kind}.{name} must lie in [0, 90], got {value}")
            continue
        if not np.all(np.isfinite(values)) or np.any(values <= 0) or np.any(values > 1.0):
            raise InputError(f"{kind}.{name} must be positive and at most 1 m, got {value}")
    if kind == "tape" and not float(merged["r"]) < float(merged["R"]):
        raise InputError(f"tape needs r < R, got r={merged['r']}, R={merged['R']}")
    return merged


class SimulationService:
    """Service class for the synthetic oracle."""

    @staticmethod
    def make_object(kind: str, params: Optional[Dict[str, object]] = None, n_points: int = 4000,
                    seed: int = 0) -> DenseCloud:
        """
        Parametric point cloud of one of the built-in objects.

        Args:
            kind: hammer, block, tape, teapot, screwdriver, wrench, brush or custom
            params: Shape parameters (metres); custom takes {"points": N x 3}
            n_points: Number of surface samples, 2000 to 20000
            seed: Sampling seed

        Returns:
            DenseCloud in the object frame, metres
        """
        params = dict(params or {})
        if kind == "custom":
            if "points" not in params:
                raise InputError("a custom object needs params {'points': [[x, y, z], ...]}")
            return DenseCloud(np.asarray(params["points"], dtype=np.float64))
        if kind not in OBJECT_DEFAULTS:
            raise InputError(f"unknown object kind {kind!r}; expected one of {sorted(OBJECT_DEFAULTS) + ['custom']}")
        lo, hi = POINT_RANGE
        if not lo <= n_points <= hi:
            raise InputError(f"n_points must lie in [{lo}, {hi}], got {n_points}")
        p = _check_params(kind, params)
        rng = np.random.default_rng(seed)

        if kind == "block":
            pts = _box(rng, n_points, p["size"])
        elif kind == "tape":
            pts = _torus(rng, n_points, float(p["R"]), float(p["r"]))
        elif kind == "hammer":
            length, radius = float(p["handle_length"]), float(p["handle_radius"])
            head = np.asarray(p["head"], dtype=np.float64)
            a, b = _split(n_points, [0.55, 0.45])
            pts = np.vstack([
                _cylinder(rng, a, radius, length, center=(length / 2 - 0.08, 0.0, 0.0)),
                _box(rng, b, head, center=(length - 0.08 + head[0] / 2, 0.0, 0.0)),
            ])
        elif kind == "screwdriver":
            hl, hr = float(p["handle_length"]), float(p["handle_radius"])
            sl, sr = float(p["shaft_length"]), float(p["shaft_radius"])
            a, b = _split(n_points, [0.75, 0.25])
            pts = np.vstack([
                _cylinder(rng, a, hr, hl),
                _cylinder(rng, b, sr, sl, center=(hl / 2 + sl / 2, 0.0, 0.0)),
            ])
        elif kind == "wrench":
            length, width, thick = float(p["length"]), float(p["width"]), float(p["thickness"])
            ring = float(p["ring_radius"])
            a, b, c = _split(n_points, [0.5, 0.25, 0.25])
            pts = np.vstack([
                _box(rng, a, (length, width, thick)),
                _torus(rng, b, ring, thick / 2, center=(-length / 2, 0.0, 0.0)),
                _torus(rng, c, ring, thick / 2, center=(length / 2, 0.0, 0.0)),
            ])
        elif kind == "brush":
            handle = np.asarray(p["handle"], dtype=np.float64)
            bristles = np.asarray(p["bristles"], dtype=np.float64)
            a, b = _split(n_points, [0.55, 0.45])
            pts = np.vstack([
                _box(rng, a, handle),
                _box(rng, b, bristles, center=(handle[0] / 2 - bristles[0] / 2, 0.0,
                                               -(handle[2] + bristles[2]) / 2)),
            ])
        else:
            body = np.asarray(p["body"], dtype=np.float64)
            start, direction, _ = _spout(p)
            length = float(p["spout_length"])
            a, b, c = _split(n_points, [0.7, 0.1, 0.2])
            pts = np.vstack([
                _ellipsoid(rng, a, body),
                _cylinder(rng, b, float(p["spout_radius"]), length, direction, start + direction * length / 2),
                _torus(rng, c, 0.45 * body[0], 0.1 * body[0], direction=(0.0, 1.0, 0.0),
                       center=(-1.1 * body[0], 0.0, 0.0)),
            ])
        logger.debug(f"Built {kind} with {pts.shape[0]} points")
        return DenseCloud(pts)

    @staticmethod
    def visible(cloud: np.ndarray, pose: Transform3, K: Intrinsics, image_size: Tuple[int, int],
                margin: float = 0.0) -> bool:
        """True when every point lies in front of the camera and inside the frame (with margin)."""
        pts = apply_points(cloud, pose)
        if np.any(pts[:, 2] <= MIN_DEPTH):
            return False
        u = K.fx * pts[:, 0] / pts[:, 2] + K.cx
        v = K.fy * pts[:, 1] / pts[:, 2] + K.cy
        w, h = image_size
        return bool(np.all((u >= margin) & (u <= w - 1 - margin) & (v >= margin) & (v <= h - 1 - margin)))

    @staticmethod
    def object_in_camera(chain: ChainSpec, q, H: Transform3, cam_base: Transform3) -> Transform3:
        """[C T_O] = H^-1 E^-1 [C T_B]."""
        E = KinematicsService.fk(chain, q)
        return compose(compose(H.inverse(), E.inverse()), cam_base)

    @staticmethod
    def make_scenario(spec: ScenarioSpec) -> Scenario:
        """
        Build a scenario from a simulate spec.

        H and the object's orientation in view are drawn from the seed; the
        camera is then placed so the object centroid sits on the optical axis
        at the requested depth for the nominal configuration. Configurations
        are drawn around the nominal one until every point is in view.

        Args:
            spec: Validated scenario spec

        Returns:
            Scenario
        """
        rng = np.random.default_rng(spec.seed)
        kind = spec.object.kind
        cloud = SimulationService.make_object(kind, spec.object.params, spec.object.n_points, spec.seed)
        chain = KinematicsService.builtin(spec.chain) if isinstance(spec.chain, str) else ChainSpec.from_json(spec.chain)
        if spec.q_nominal is not None:
            q_nom = np.asarray(spec.q_nominal, dtype=np.float64)
        else:
            q_nom = np.asarray(NOMINAL_CONFIGS.get(chain.name, np.zeros(chain.dof)), dtype=np.float64)
        Configuration(q_nom).check_limits(chain)
        K = Intrinsics(**spec.intrinsics.model_dump())
        size = tuple(spec.image_size)

        H = Transform3(Rotation3(Rotation.random(random_state=rng).as_matrix()), rng.uniform(-0.05, 0.05, size=3))
        view = Rotation.random(random_state=rng).as_matrix()
        depth = spec.depth or (TEAPOT_DEPTH if kind == "teapot" else DEFAULT_DEPTH)
        centroid = cloud.points.mean(axis=0)
        cam_obj_nominal = Transform3(Rotation3(view), np.array([0.0, 0.0, depth]) - view @ centroid)
        cam_base = compose(compose(KinematicsService.fk(chain, q_nom), H), cam_obj_nominal)
        if not SimulationService.visible(cloud.points, cam_obj_nominal, K, size, VIEW_MARGIN_PX):
            raise VisibilityError(
                f"the {kind} does not fit in a {size[0]}x{size[1]} frame at depth {depth:g} m; increase depth"
            )

        configs = []
        for k in range(spec.n_train + spec.n_test):
            for _ in range(MAX_DRAWS):
                q = np.clip(q_nom + rng.uniform(-spec.config_spread, spec.config_spread, size=chain.dof),
                            chain.lower, chain.upper)
                pose = SimulationService.object_in_camera(chain, q, H, cam_base)
                if SimulationService.visible(cloud.points, pose, K, size, VIEW_MARGIN_PX):
                    configs.append(Configuration(q))
                    break
            else:
                raise VisibilityError(
                    f"configuration {k}: no draw within {spec.config_spread:g} rad of {q_nom.tolist()} "
                    f"kept the object in view after {MAX_DRAWS} attempts"
                )

        return Scenario(
            object_cloud=cloud,
            H_true=H,
            cam_base_true=cam_base,
            alpha_true=spec.alpha_true,
            chain=chain,
            train_configs=configs[:spec.n_train],
            test_configs=configs[spec.n_train:],
            noise=NoiseSpec(**spec.noise.model_dump()),
            seed=spec.seed,
            intrinsics=K,
            image_size=size,
            pointmap_stride=spec.pointmap_stride,
            pair_layout=spec.pair_layout,
            object_kind=kind,
            points_of_interest=keypoints(kind, spec.object.params),
        )

    @staticmethod
    def pair_layout(n_images: int, layout: str) -> List[Tuple[int, int]]:
        """All ordered pairs, or the ring n -> n+1."""
        if layout == "all":
            return [(n, m) for n in range(n_images) for m in range(n_images) if n != m]
        if layout == "ring":
            return [(n, (n + 1) % n_images) for n in range(n_images)]
        raise InputError(f"pair_layout must be 'all' or 'ring', got {layout!r}")

    @staticmethod
    def raster_hits(cam_points: np.ndarray, K: Intrinsics, shape: Tuple[int, int], stride: int) -> np.ndarray:
        """
        Z-buffered splat: for each raster cell, the index of the nearest point landing in it (-1 if none).

        Args:
            cam_points: Points in the camera frame
            K: Intrinsics
            shape: Raster (rows, cols)
            stride: Image pixels per raster cell

        Returns:
            (rows, cols) integer array
        """
        rows, cols = shape
        z = cam_points[:, 2]
        front = z > MIN_DEPTH
        zs = np.where(front, z, 1.0)
        u = K.fx * cam_points[:, 0] / zs + K.cx
        v = K.fy * cam_points[:, 1] / zs + K.cy
        c = np.floor((u + 0.5) / stride)
        r = np.floor((v + 0.5) / stride)
        inside = front & (c >= 0) & (c < cols) & (r >= 0) & (r < rows)
        c = np.where(inside, c, 0).astype(np.int64)
        r = np.where(inside, r, 0).astype(np.int64)
        idx = np.nonzero(inside)[0]
        cell = r[idx] * cols + c[idx]
        order = np.lexsort((z[idx], cell))
        cell, idx = cell[order], idx[order]
        first = np.ones(cell.shape[0], dtype=bool)
        first[1:] = cell[1:] != cell[:-1]
        hits = np.full(rows * cols, -1, dtype=np.int64)
        hits[cell[first]] = idx[first]
        return hits.reshape(rows, cols)

    @staticmethod
    def background(K: Intrinsics, shape: Tuple[int, int], stride: int) -> np.ndarray:
        """Static plane at BACKGROUND_DEPTH behind every raster cell, camera frame."""
        rows, cols = shape
        u = (np.arange(cols) + 0.5) * stride - 0.5
        v = (np.arange(rows) + 0.5) * stride - 0.5
        uu, vv = np.meshgrid(u, v)
        return np.stack([
            (uu - K.cx) / K.fx * BACKGROUND_DEPTH,
            (vv - K.cy) / K.fy * BACKGROUND_DEPTH,
            np.full_like(uu, BACKGROUND_DEPTH),
        ], axis=-1)

    @staticmethod
    def confidence(sigma: float) -> float:
        """Object-pixel confidence, 3 for exact points and falling toward 1 as noise grows."""
        return 1.0 + 2.0 / (1.0 + sigma / CONFIDENCE_NOISE_SCALE)

    @staticmethod
    def silhouette(cloud: np.ndarray, pose: Transform3, K: Intrinsics, image_size: Tuple[int, int]) -> np.ndarray:
        """Full-resolution mask of the pixels the posed cloud lands on."""
        pts = apply_points(cloud, pose)
        u = np.rint(K.fx * pts[:, 0] / pts[:, 2] + K.cx).astype(np.int64)
        v = np.rint(K.fy * pts[:, 1] / pts[:, 2] + K.cy).astype(np.int64)
        w, h = image_size
        inside = (u >= 0) & (u < w) & (v >= 0) & (v < h)
        mask = np.zeros((h, w), dtype=bool)
        mask[v[inside], u[inside]] = True
        return mask

    @staticmethod
    def generate(scn: Scenario, render_subsample: int = 8) -> ScenarioOutputs:
        """
        Run the forward model.

        Args:
            scn: Scenario
            render_subsample: Subsample stored in the emitted problem

        Returns:
            ScenarioOutputs with the gauge-unit problem, the pair predictions
            and the ground truth
        """
        rng = np.random.default_rng([scn.seed, 1])
        K = scn.intrinsics
        size = tuple(scn.image_size)
        noise = scn.noise
        alpha = scn.alpha_true
        cloud = scn.object_cloud.points

        ee_poses, truth_poses = [], []
        for n, q in enumerate(scn.train_configs):
            pose = SimulationService.object_in_camera(scn.chain, q, scn.H_true, scn.cam_base_true)
            if not SimulationService.visible(cloud, pose, K, size):
                raise VisibilityError(f"training configuration {n} {q.q.tolist()} puts the object out of view")
            ee_poses.append(KinematicsService.fk(scn.chain, q))
            truth_poses.append(pose)
        depths = [float(apply_points(cloud.mean(axis=0), T)[2]) for T in truth_poses]

        cam_obj = []
        for T, depth in zip(truth_poses, depths):
            f = noise.factor(depth)
            R, t = T.R, T.t
            if noise.pose_rot_sigma > 0:
                R = Rotation.from_rotvec(rng.normal(0.0, noise.pose_rot_sigma * f, size=3)).as_matrix() @ R
            if noise.pose_trans_sigma > 0:
                t = t + rng.normal(0.0, noise.pose_trans_sigma * f, size=3)
            cam_obj.append(CameraObjectPose(Rotation3(R), t / alpha))

        dense_pts = cloud
        if noise.point_sigma > 0:
            dense_pts = cloud + rng.normal(0.0, noise.point_sigma, size=cloud.shape)
        dense = DenseCloud(dense_pts / alpha, np.full(cloud.shape[0], SimulationService.confidence(noise.point_sigma)))
        problem = AlignmentProblem(ee_poses, cam_obj, dense, K, render_subsample)

        shape = (size[1] // scn.pointmap_stride, size[0] // scn.pointmap_stride)
        if shape[0] < 1 or shape[1] < 1:
            raise InputError(f"pointmap_stride {scn.pointmap_stride} leaves an empty raster for {size}")
        bg = SimulationService.background(K, shape, scn.pointmap_stride)
        hits, conf, sigmas = [], [], []
        for T, depth in zip(truth_poses, depths):
            h = SimulationService.raster_hits(apply_points(cloud, T), K, shape, scn.pointmap_stride)
            sigma = noise.point_sigma * noise.factor(depth)
            c = np.full(shape, BACKGROUND_CONFIDENCE)
            c[h >= 0] = SimulationService.confidence(sigma)
            hits.append(h)
            conf.append(c)
            sigmas.append(sigma)

        def member(frame: Transform3, image: int) -> np.ndarray:
            h = hits[image]
            out = bg.copy()
            obj = h >= 0
            out[obj] = apply_points(cloud[h[obj]], frame)
            if sigmas[image] > 0:
                out[obj] += rng.normal(0.0, sigmas[image], size=(int(obj.sum()), 3))
            return out

        preds = []
        for e, (n, m) in enumerate(SimulationService.pair_layout(len(truth_poses), scn.pair_layout)):
            scale = 1.0 if e == 0 else float(rng.uniform(*PAIR_SCALE_RANGE))
            frame = truth_poses[n]
            preds.append(PairPrediction(
                n=n, m=m,
                x_nn=Pointmap(member(frame, n) * scale / alpha),
                x_nm=Pointmap(member(frame, m) * scale / alpha),
                c_nn=ConfidenceMap(conf[n]),
                c_nm=ConfidenceMap(conf[m]),
            ))

        test_ee, test_poses, test_masks = [], [], []
        for k, q in enumerate(scn.test_configs):
            pose = SimulationService.object_in_camera(scn.chain, q, scn.H_true, scn.cam_base_true)
            if not SimulationService.visible(cloud, pose, K, size):
                raise VisibilityError(f"test configuration {k} {q.q.tolist()} puts the object out of view")
            test_ee.append(KinematicsService.fk(scn.chain, q))
            test_poses.append(pose)
            test_masks.append(SimulationService.silhouette(cloud, pose, K, size))

        truth = GroundTruth(
            H_true=scn.H_true,
            alpha_true=alpha,
            cam_base_true=scn.cam_base_true,
            train_cam_obj=truth_poses,
            test_ee_poses=test_ee,
            test_cam_obj=test_poses,
            test_masks=test_masks,
            image_masks={i: h >= 0 for i, h in enumerate(hits)},
            test_configs=list(scn.test_configs),
        )
        logger.info(
            f"Generated {scn.object_kind}: {problem.n_poses} training poses, {len(preds)} pairs, "
            f"{len(test_ee)} test poses, alpha {alpha:g}"
        )
        return ScenarioOutputs(scenario=scn, problem=problem, predictions=preds, truth=truth)

    @staticmethod
    def export(outputs: ScenarioOutputs, out_dir: Union[str, Path]) -> Dict[str, Path]:
        """
        Write every artifact of a generated scenario.

        Layout:
            problem.json, dense.ply      alignment problem (gauge units)
            manifest.json, pointmaps/,   pair predictions, per-image masks,
            masks/                       training end-effector poses
            object.ply, chain.json       true geometry (metres) and chain
            testset/                     test poses and full-resolution silhouettes
            ground_truth.json

        Returns:
            Paths of the top-level files, keyed by role
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        scn, problem, truth = outputs.scenario, outputs.problem, outputs.truth
        paths = {
            "problem": DatasetService.save_problem(problem, out_dir / "problem.json"),
            "manifest": DatasetService.save_manifest(
                outputs.predictions, out_dir, truth.image_masks, problem.ee_poses, problem.intrinsics,
                problem.render_subsample,
            ),
            "object": write_ply(out_dir / "object.ply", scn.object_cloud),
            "chain": write_json(out_dir / "chain.json", scn.chain.to_json()),
            "testset": DatasetService.save_evaluation_set(
                out_dir / "testset", truth.test_ee_poses, truth.test_masks, problem.intrinsics
            ),
        }
        gt = truth.to_json()
        gt.update({
            "object_kind": scn.object_kind,
            "seed": scn.seed,
            "image_size": list(scn.image_size),
            "chain": "chain.json",
            "train_configs": [c.q.tolist() for c in scn.train_configs],
            "points_of_interest": None if scn.points_of_interest is None else np.asarray(scn.points_of_interest).tolist(),
        })
        paths["ground_truth"] = write_json(out_dir / "ground_truth.json", gt)
        logger.info(f"Exported scenario to {out_dir}")
        return paths
