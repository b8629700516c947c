"""推理流程的测试"""

import logging

import cv2
import numpy as np
import pytest

from core.checkpoint import save_checkpoint
from core.errors import RegistrationError
from core.image_io import to_uint8, write_png
from core.network import DehazeFusionNet
from core.pipeline import density_at, infer, run_pipeline
from core.tensor_io import read_tensor

from .helpers import small_train_config


def _checkpoint(tmp_path, **overrides):
    config = small_train_config(**overrides)
    model = DehazeFusionNet(config.model, np.random.default_rng(0))
    path = tmp_path / "model.irvc"
    save_checkpoint(str(path), model, config)
    return str(path), model


@pytest.fixture
def inputs(tmp_path, rng):
    ir_path, vis_path = str(tmp_path / "ir.png"), str(tmp_path / "vis.png")
    write_png(ir_path, rng.uniform(size=(1, 20, 28)))
    write_png(vis_path, rng.uniform(size=(3, 20, 28)))
    return ir_path, vis_path


def test_outputs_written(tmp_path, inputs):
    ckpt, _ = _checkpoint(tmp_path)
    result = run_pipeline(*inputs, ckpt, str(tmp_path / "out"))
    assert set(result.paths) == {"fused", "dehazed", "haze_png", "haze_tensor"}
    assert result.fused.shape == result.dehazed.shape == (3, 20, 28)
    assert result.density.shape == (1, 20, 28)
    assert cv2.imread(result.paths["fused"]).shape == (20, 28, 3)
    assert read_tensor(result.paths["haze_tensor"]).shape == (1, 20, 28)


def test_haze_png_is_quantised_density(tmp_path, inputs):
    ckpt, _ = _checkpoint(tmp_path)
    result = run_pipeline(*inputs, ckpt, str(tmp_path / "out"))
    stored = cv2.imread(result.paths["haze_png"], cv2.IMREAD_UNCHANGED)
    np.testing.assert_array_equal(stored, to_uint8(result.density[0]))


def test_repeated_runs_are_byte_identical(tmp_path, inputs):
    ckpt, _ = _checkpoint(tmp_path)
    first = run_pipeline(*inputs, ckpt, str(tmp_path / "a"))
    second = run_pipeline(*inputs, ckpt, str(tmp_path / "b"))
    for key in first.paths:
        with open(first.paths[key], "rb") as a, open(second.paths[key], "rb") as b:
            assert a.read() == b.read()


def test_preloaded_model_matches_checkpoint(tmp_path, inputs):
    ckpt, model = _checkpoint(tmp_path)
    from_file = run_pipeline(*inputs, ckpt, str(tmp_path / "a"), write_dehazed=False, write_density=False)
    preloaded = run_pipeline(*inputs, "unused", str(tmp_path / "b"), model=model)
    np.testing.assert_array_equal(from_file.fused, preloaded.fused)
    assert set(from_file.paths) == {"fused"}


def test_without_density_estimation(tmp_path, inputs, caplog):
    ckpt, _ = _checkpoint(tmp_path, no_hde=True)
    with caplog.at_level(logging.WARNING):
        result = run_pipeline(*inputs, ckpt, str(tmp_path / "out"))
    assert result.density is None
    assert "haze_png" not in result.paths
    assert any(record.levelno == logging.WARNING for record in caplog.records)


def test_unregistered_inputs(tmp_path, rng):
    _, model = _checkpoint(tmp_path)
    with pytest.raises(RegistrationError):
        infer(model, rng.uniform(size=(1, 16, 16)), rng.uniform(size=(3, 16, 20)))


def test_inference_records_no_graph(tmp_path, rng):
    _, model = _checkpoint(tmp_path)
    output = infer(model, rng.uniform(size=(1, 16, 16)), rng.uniform(size=(3, 16, 16)))
    assert not output.fused_raw.requires_grad


def test_density_resize():
    density = np.array([[[0.0, 1.0], [0.0, 1.0]]])
    np.testing.assert_array_equal(density_at(density, 2, 2), density)
    assert density_at(density, 4, 6).shape == (1, 4, 6)
