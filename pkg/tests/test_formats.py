"""
Tests for the file formats and JSON helpers.
"""

import numpy as np
import pytest
from plyfile import PlyData, PlyElement

from graspalign.core.errors import InputError
from graspalign.models.geometry import DenseCloud
from graspalign.utils.formats import (
    read_mask,
    read_pgm,
    read_pmap,
    read_ply,
    read_ppm,
    write_pgm,
    write_pmap,
    write_ply,
    write_ppm,
)
from graspalign.utils.serialization import fmt, read_json, write_json


def test_pmap_header_layout(tmp_path):
    """Test the PMAP magic, version and size fields."""
    coords = np.zeros((2, 5, 3))
    path = write_pmap(tmp_path / "a.pmap", coords, np.ones((2, 5)))
    raw = path.read_bytes()
    assert raw[:4] == b"PMAP"
    assert np.frombuffer(raw[4:16], dtype="<u4").tolist() == [1, 5, 2]
    assert len(raw) == 16 + 4 * 10 * 3 + 4 * 10


def test_pmap_values_are_float32(tmp_path, rng):
    """Test that PMAP stores single precision."""
    coords = rng.normal(size=(3, 4, 3))
    conf = rng.uniform(size=(3, 4))
    x, c = read_pmap(write_pmap(tmp_path / "a.pmap", coords, conf))
    assert np.allclose(x, coords.astype(np.float32))
    assert np.allclose(c, conf.astype(np.float32))


def test_pmap_rejects_truncated_file(tmp_path):
    """Test that a short PMAP file is rejected."""
    path = write_pmap(tmp_path / "a.pmap", np.zeros((2, 2, 3)), np.ones((2, 2)))
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(InputError):
        read_pmap(path)


def test_ply_layout_is_single_precision(tmp_path):
    """Test the ASCII header and float32 vertex values."""
    pts = np.array([[0.1, 1.0 / 3.0, -2.5e-7], [1e6, 0.0, 3.141592653589793]])
    path = write_ply(tmp_path / "c.ply", DenseCloud(pts, np.array([1.0, 2.0])))
    header = path.read_text().split("end_header")[0]
    assert "format ascii 1.0" in header
    assert "element vertex 2" in header
    for name in ("x", "y", "z", "confidence"):
        assert f"property float {name}" in header
    cloud = read_ply(path)
    assert cloud.points.dtype == np.float64
    assert np.array_equal(cloud.points, pts.astype(np.float32).astype(np.float64))
    assert np.array_equal(cloud.confidence, [1.0, 2.0])


def test_ply_without_confidence(tmp_path):
    """Test that a cloud without confidence reads back without one."""
    cloud = read_ply(write_ply(tmp_path / "c.ply", DenseCloud(np.eye(3))))
    assert cloud.confidence is None
    assert np.array_equal(cloud.points, np.eye(3))


def test_ply_reads_binary(tmp_path):
    """Test that binary PLY files from other tools load too."""
    vertex = np.array([(1.0, 2.0, 3.0)], dtype=[("x", "f8"), ("y", "f8"), ("z", "f8")])
    path = tmp_path / "b.ply"
    PlyData([PlyElement.describe(vertex, "vertex")], text=False).write(str(path))
    assert np.array_equal(read_ply(path).points, [[1.0, 2.0, 3.0]])


def test_ply_rejects_other_files(tmp_path):
    """Test that a non-PLY file and a PLY without x, y, z are refused."""
    bad = tmp_path / "bad.ply"
    bad.write_text("not a point cloud\n")
    with pytest.raises(InputError):
        read_ply(bad)
    face = np.array([(1.0,)], dtype=[("u", "f4")])
    path = tmp_path / "u.ply"
    PlyData([PlyElement.describe(face, "vertex")], text=True).write(str(path))
    with pytest.raises(InputError):
        read_ply(path)


def test_pgm_mask(tmp_path):
    """Test mask writing and thresholded reading."""
    mask = np.zeros((4, 6), dtype=bool)
    mask[1:3, 2:5] = True
    path = write_pgm(tmp_path / "m.pgm", mask)
    assert np.array_equal(read_pgm(path), mask)
    with pytest.raises(InputError):
        read_mask(path, (6, 4))


def test_pgm_header_comment(tmp_path):
    """Test that header comments are skipped."""
    path = tmp_path / "m.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([0, 200]))
    assert read_pgm(path).tolist() == [[False, True]]


def test_ppm_round_trip(tmp_path):
    """Test writing and reading an RGB pixmap."""
    rgb = np.zeros((3, 2, 3), dtype=np.uint8)
    rgb[0, 1] = (255, 64, 0)
    assert np.array_equal(read_ppm(write_ppm(tmp_path / "o.ppm", rgb)), rgb)


def test_missing_files_raise_input_error(tmp_path):
    """Test that missing inputs surface as InputError."""
    with pytest.raises(InputError):
        read_ply(tmp_path / "none.ply")
    with pytest.raises(InputError):
        read_json(tmp_path / "none.json")


def test_write_json_is_deterministic(tmp_path):
    """Test that key order does not change the bytes."""
    a = write_json(tmp_path / "a.json", {"b": np.float64(1.5), "a": np.arange(2)}).read_bytes()
    b = write_json(tmp_path / "b.json", {"a": [0, 1], "b": 1.5}).read_bytes()
    assert a == b


def test_fmt_six_significant_digits():
    """Test the printed number format."""
    assert fmt(3.14159265) == "3.14159"
    assert fmt(0.000123456789) == "0.000123457"


def test_image_reader_checks_mode(tmp_path):
    """Test that an RGB pixmap is not accepted as a mask and garbage is refused."""
    path = write_ppm(tmp_path / "o.ppm", np.zeros((2, 2, 3), dtype=np.uint8))
    with pytest.raises(InputError):
        read_pgm(path)
    junk = tmp_path / "junk.pgm"
    junk.write_bytes(b"hello")
    with pytest.raises(InputError):
        read_pgm(junk)
    with pytest.raises(InputError):
        read_pgm(tmp_path / "none.pgm")
