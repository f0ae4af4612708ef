"""
Readers and writers for the raster and point-cloud files.

PMAP  binary pointmap container (little-endian, float32 payload)
PLY   ASCII point clouds (float x, y, z, optional confidence) via plyfile
PGM   8-bit greymap masks (P5) via Pillow, thresholded at 128
PPM   8-bit pixmap overlays (P6) via Pillow
"""
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from plyfile import PlyData, PlyElement, PlyParseError

from graspalign.core.errors import InputError
from graspalign.core.logging import logger
from graspalign.models.geometry import DenseCloud

PathLike = Union[str, Path]

PMAP_MAGIC = b"PMAP"
PMAP_VERSION = 1
MASK_THRESHOLD = 128


def write_pmap(path: PathLike, coords: np.ndarray, confidence: np.ndarray) -> Path:
    """Write one (pair, member) raster.

    Args:
        path: Output file
        coords: (H, W, 3) coordinates
        confidence: (H, W) confidences

    Returns:
        The written path
    """
    coords = np.asarray(coords)
    confidence = np.asarray(confidence)
    if coords.ndim != 3 or coords.shape[2] != 3 or confidence.shape != coords.shape[:2]:
        raise InputError(f"PMAP needs (H, W, 3) coords and (H, W) confidence, got {coords.shape} and {confidence.shape}")
    h, w = confidence.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(PMAP_MAGIC)
        f.write(np.array([PMAP_VERSION, w, h], dtype="<u4").tobytes())
        f.write(coords.astype("<f4").tobytes(order="C"))
        f.write(confidence.astype("<f4").tobytes(order="C"))
    return path


def read_pmap(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """Read a PMAP file into float64 (H, W, 3) coords and (H, W) confidence."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError as e:
        raise InputError(f"pointmap file not found: {path}") from e
    if len(raw) < 16 or raw[:4] != PMAP_MAGIC:
        raise InputError(f"{path} is not a PMAP file")
    version, w, h = np.frombuffer(raw[4:16], dtype="<u4")
    if version != PMAP_VERSION:
        raise InputError(f"{path}: unsupported PMAP version {version}")
    n = int(w) * int(h)
    expected = 16 + 4 * n * 3 + 4 * n
    if len(raw) != expected:
        raise InputError(f"{path}: expected {expected} bytes for {w}x{h} raster, got {len(raw)}")
    coords = np.frombuffer(raw[16:16 + 12 * n], dtype="<f4").astype(np.float64).reshape(int(h), int(w), 3)
    conf = np.frombuffer(raw[16 + 12 * n:], dtype="<f4").astype(np.float64).reshape(int(h), int(w))
    return coords, conf


def write_ply(path: PathLike, cloud: DenseCloud) -> Path:
    """Write an ASCII PLY with single-precision x, y, z and optional confidence."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = [("x", "f4"), ("y", "f4"), ("z", "f4")]
    if cloud.confidence is not None:
        fields.append(("confidence", "f4"))
    vertex = np.empty(len(cloud), dtype=fields)
    for i, axis in enumerate("xyz"):
        vertex[axis] = cloud.points[:, i]
    if cloud.confidence is not None:
        vertex["confidence"] = cloud.confidence
    PlyData([PlyElement.describe(vertex, "vertex")], text=True).write(str(path))
    return path


def read_ply(path: PathLike) -> DenseCloud:
    path = Path(path)
    if not path.exists():
        raise InputError(f"PLY file not found: {path}")
    try:
        ply = PlyData.read(str(path))
        vertex = ply["vertex"].data
    except KeyError as e:
        raise InputError(f"{path}: PLY has no vertex element") from e
    except (PlyParseError, ValueError) as e:
        raise InputError(f"{path} is not a readable PLY file: {e}") from e
    names = vertex.dtype.names or ()
    if not {"x", "y", "z"} <= set(names):
        raise InputError(f"{path}: PLY vertices need x, y and z")
    points = np.column_stack([vertex[a] for a in "xyz"]).astype(np.float64)
    conf = np.asarray(vertex["confidence"], dtype=np.float64) if "confidence" in names else None
    return DenseCloud(points.reshape(-1, 3), conf)


def _save_netpbm(path: PathLike, pixels: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        Image.fromarray(pixels).save(path, format="PPM")
    except OSError as e:
        logger.error(f"Could not write image {path}: {e}")
        raise
    return path


def _open_netpbm(path: PathLike, mode: str) -> np.ndarray:
    path = Path(path)
    try:
        with Image.open(path) as image:
            if image.format != "PPM":
                raise InputError(f"{path}: expected a PGM/PPM image, got {image.format}")
            if image.mode != mode:
                raise InputError(f"{path}: expected an 8-bit {mode} image, got mode {image.mode}")
            return np.asarray(image, dtype=np.uint8).copy()
    except FileNotFoundError as e:
        raise InputError(f"image file not found: {path}") from e
    except UnidentifiedImageError as e:
        raise InputError(f"{path} is not a readable image") from e


def write_pgm(path: PathLike, mask: np.ndarray) -> Path:
    """Write a binary mask as an 8-bit P5 greymap (set pixels 255)."""
    mask = np.asarray(mask).astype(bool)
    if mask.ndim != 2:
        raise InputError(f"mask must be 2-D, got shape {mask.shape}")
    return _save_netpbm(path, mask.astype(np.uint8) * 255)


def read_pgm(path: PathLike, threshold: int = MASK_THRESHOLD) -> np.ndarray:
    """Read a P5 greymap as a boolean mask (value >= threshold)."""
    return _open_netpbm(path, "L") >= threshold


def write_ppm(path: PathLike, rgb: np.ndarray) -> Path:
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise InputError(f"PPM needs an (H, W, 3) array, got {rgb.shape}")
    return _save_netpbm(path, rgb)


def read_ppm(path: PathLike) -> np.ndarray:
    return _open_netpbm(path, "RGB")


def read_mask(path: PathLike, shape: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Read a PGM mask and optionally check its (H, W)."""
    mask = read_pgm(path)
    if shape is not None and mask.shape != tuple(shape):
        raise InputError(f"mask {path} has size {mask.shape}, expected {tuple(shape)}")
    return mask
