"""PNG 读写的测试"""

import cv2
import numpy as np
import pytest

from core.errors import DimensionError
from core.image_io import read_ir, read_rgb, to_uint8, write_png


def test_rgb_quantisation(tmp_path, rng):
    image = rng.uniform(size=(3, 6, 9))
    path = str(tmp_path / "vis.png")
    write_png(path, image)
    loaded = read_rgb(path)
    assert loaded.shape == (3, 6, 9)
    np.testing.assert_allclose(loaded, to_uint8(image) / 255.0, atol=1e-12)
    assert np.abs(loaded - image).max() <= 0.5 / 255.0 + 1e-12


def test_channel_order_is_rgb(tmp_path):
    image = np.zeros((3, 2, 2))
    image[0] = 1.0
    path = str(tmp_path / "red.png")
    write_png(path, image)
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    assert raw[0, 0].tolist() == [0, 0, 255]
    np.testing.assert_array_equal(read_rgb(path)[:, 0, 0], [1.0, 0.0, 0.0])


def test_gray_ir(tmp_path, rng):
    image = rng.uniform(size=(1, 5, 5))
    path = str(tmp_path / "ir.png")
    write_png(path, image)
    np.testing.assert_allclose(read_ir(path), to_uint8(image) / 255.0, atol=1e-12)


def test_ir_from_equal_rgb_channels(tmp_path, rng):
    gray = rng.uniform(size=(1, 4, 4))
    path = str(tmp_path / "ir_rgb.png")
    write_png(path, np.repeat(gray, 3, axis=0))
    assert read_ir(path).shape == (1, 4, 4)


def test_ir_with_colour_rejected(tmp_path, rng):
    path = str(tmp_path / "colour.png")
    write_png(path, rng.uniform(size=(3, 4, 4)))
    with pytest.raises(DimensionError):
        read_ir(path)


def test_gray_visible_is_replicated(tmp_path, rng):
    path = str(tmp_path / "gray.png")
    write_png(path, rng.uniform(size=(1, 4, 4)))
    loaded = read_rgb(path)
    assert loaded.shape == (3, 4, 4)
    np.testing.assert_array_equal(loaded[0], loaded[2])


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_rgb(str(tmp_path / "absent.png"))


def test_write_rejects_two_channels(tmp_path):
    with pytest.raises(DimensionError):
        write_png(str(tmp_path / "bad.png"), np.zeros((2, 4, 4)))


def test_to_uint8_rounds_and_clips():
    np.testing.assert_array_equal(to_uint8(np.array([-0.5, 0.0, 0.5, 1.0, 2.0])), [0, 0, 128, 255, 255])
