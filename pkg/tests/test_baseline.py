"""两阶段基线的测试"""

import numpy as np
import pytest

from core import haze_model
from core.baseline import average_fuse, dcp_dehaze, two_stage_baseline
from core.datasets import synthesize_scene
from core.errors import DimensionError, RegistrationError


def test_dehaze_shapes_and_range(rng):
    dehazed, estimate = dcp_dehaze(rng.uniform(size=(3, 24, 24)))
    assert dehazed.shape == (3, 24, 24)
    assert dehazed.data.min() >= 0.0 and dehazed.data.max() <= 1.0
    np.testing.assert_allclose(estimate.density.data + estimate.refined.data, 1.0, atol=1e-12)


def test_dehazing_darkens_dark_channel(rng):
    scene = synthesize_scene(rng, 48, depth_family="ramp")
    dehazed, _ = dcp_dehaze(scene.hazy)
    before = haze_model.dark_channel(scene.hazy, haze_model.IMAGE_WINDOW).data.mean()
    after = haze_model.dark_channel(dehazed.data, haze_model.IMAGE_WINDOW).data.mean()
    assert after < before


def test_dehaze_rejects_gray(rng):
    with pytest.raises(DimensionError):
        dcp_dehaze(rng.uniform(size=(1, 8, 8)))


def test_average_fuse(rng):
    ir, vis = rng.uniform(size=(1, 6, 6)), rng.uniform(size=(3, 6, 6))
    np.testing.assert_allclose(average_fuse(ir, vis).data, 0.5 * (ir + vis), atol=1e-15)
    with pytest.raises(RegistrationError):
        average_fuse(ir, rng.uniform(size=(3, 6, 7)))


def test_two_stage_baseline(rng):
    ir, hazy = rng.uniform(size=(1, 16, 16)), rng.uniform(size=(3, 16, 16))
    fused, dehazed = two_stage_baseline(ir, hazy, window=7)
    np.testing.assert_allclose(fused.data, 0.5 * (ir + dehazed.data), atol=1e-15)
