"""红外辅助特征复原的测试"""

import logging

import numpy as np
import pytest

from core.config import ABLATION_FLAGS
from core.errors import DimensionError
from core.layers import Conv2d
from core.restoration import RestorationParams, dehaze_head, haze_guided_blend, restore
from core.selftest import run_blend_identities
from core.tensor import Tensor

from .helpers import small_model_config


def _features(rng, shape=(4, 8, 8)):
    return Tensor(rng.normal(size=shape)), Tensor(rng.normal(size=shape))


class TestHazeGuidedBlend:
    @pytest.mark.parametrize("value, ir_coef, vi_coef", [(0.0, 0.0, 2.0), (1.0, 1.0, 1.0), (0.5, 0.5, 1.5)])
    def test_constant_density(self, rng, float64, value, ir_coef, vi_coef):
        f_hat_ir, f_vi = _features(rng)
        out = haze_guided_blend(f_hat_ir, f_vi, Tensor(np.full((1, 8, 8), value)))
        np.testing.assert_allclose(out.data, ir_coef * f_hat_ir.data + vi_coef * f_vi.data, atol=1e-12)

    def test_coefficients_sum_to_two(self, rng, float64):
        density = rng.uniform(size=(1, 8, 8))
        ones = Tensor(np.ones((4, 8, 8)))
        out = haze_guided_blend(ones, ones, Tensor(density))
        np.testing.assert_allclose(out.data, 2.0, atol=1e-12)

    def test_out_of_range_density_is_clamped(self, rng, float64, caplog):
        f_hat_ir, f_vi = _features(rng)
        density = np.full((1, 8, 8), 1.5)
        density[0, 0, 0] = -0.2
        with caplog.at_level(logging.WARNING):
            out = haze_guided_blend(f_hat_ir, f_vi, Tensor(density))
        assert any(record.levelno == logging.WARNING for record in caplog.records)
        clamped = np.clip(density, 0.0, 1.0)
        np.testing.assert_allclose(out.data, f_hat_ir.data * clamped + f_vi.data * (2.0 - clamped), atol=1e-12)

    def test_density_receives_no_gradient(self, rng, float64):
        f_hat_ir = Tensor(rng.normal(size=(4, 6, 6)), requires_grad=True)
        f_vi = Tensor(rng.normal(size=(4, 6, 6)), requires_grad=True)
        density = Tensor(rng.uniform(size=(1, 6, 6)), requires_grad=True)
        haze_guided_blend(f_hat_ir, f_vi, density).sum().backward()
        assert density.grad is None
        np.testing.assert_allclose(f_hat_ir.grad, np.broadcast_to(density.data, (4, 6, 6)))
        np.testing.assert_allclose(f_vi.grad, np.broadcast_to(2.0 - density.data, (4, 6, 6)))

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            haze_guided_blend(Tensor(np.zeros((4, 6, 6))), Tensor(np.zeros((3, 6, 6))), Tensor(np.zeros((1, 6, 6))))

    def test_selftest_identities(self):
        assert all(result.passed for result in run_blend_identities())


class TestDehazeHead:
    def test_uniform_gray(self, rng, float64):
        head = Conv2d(4, 3, 3, rng)
        head.weight.assign(np.zeros(head.weight.shape))
        head.bias.assign(np.full(3, 0.5))
        out = dehaze_head(Tensor(rng.normal(size=(4, 6, 5))), head)
        assert out.shape == (3, 6, 5)
        np.testing.assert_array_equal(out.data, 0.5)

    def test_output_is_not_clamped(self, rng, float64):
        head = Conv2d(2, 3, 3, rng)
        head.weight.assign(np.zeros(head.weight.shape))
        head.bias.assign(np.array([-1.0, 0.5, 2.0]))
        out = dehaze_head(Tensor(np.zeros((2, 4, 4))), head)
        np.testing.assert_array_equal(out.data[:, 0, 0], [-1.0, 0.5, 2.0])


class TestRestore:
    @pytest.mark.parametrize("size", [(32, 32), (64, 64), (48, 80)])
    def test_shape_contract(self, rng, tiny_config, size):
        params = RestorationParams(tiny_config, rng)
        f_vi, f_ir = _features(rng, (4,) + size)
        state = restore(f_vi, f_ir, params, tiny_config)
        assert state.restored.shape == (4,) + size
        assert state.dehazed_raw.shape == (3,) + size
        assert state.haze.density.shape == (1,) + size
        assert state.dehazed.min() >= 0.0 and state.dehazed.max() <= 1.0

    def test_deterministic(self, rng, tiny_config):
        params = RestorationParams(tiny_config, rng)
        f_vi, f_ir = _features(rng)
        first = restore(f_vi, f_ir, params, tiny_config)
        second = restore(f_vi, f_ir, params, tiny_config)
        np.testing.assert_array_equal(first.restored.data, second.restored.data)
        np.testing.assert_array_equal(first.dehazed_raw.data, second.dehazed_raw.data)

    def test_without_ir_path(self, rng):
        config = small_model_config(no_f_ir=True)
        params = RestorationParams(config, rng)
        assert params.pgm is None and params.peb is None
        f_vi, f_ir = _features(rng)
        state = restore(f_vi, f_ir, params, config)
        assert state.ir_compensated is None and state.haze is None
        np.testing.assert_array_equal(state.restored.data, params.block(f_vi).data)

    def test_without_hde_adds_features(self, rng, float64):
        config = small_model_config(no_hde=True, no_p_ir=True)
        params = RestorationParams(config, rng)
        f_vi, f_ir = _features(rng)
        state = restore(f_vi, f_ir, params, config)
        assert state.haze is None
        np.testing.assert_allclose(state.restored.data, params.block(f_ir + f_vi).data, atol=1e-12)

    def test_without_fr_peb_adds_prompt(self, rng):
        config = small_model_config(no_fr_peb=True)
        params = RestorationParams(config, rng)
        assert params.peb is None and params.pgm is not None
        f_vi, f_ir = _features(rng)
        assert restore(f_vi, f_ir, params, config).restored.shape == (4, 8, 8)

    @pytest.mark.parametrize("flag", ABLATION_FLAGS)
    def test_every_ablation_runs(self, rng, flag):
        config = small_model_config(**{flag: True})
        params = RestorationParams(config, rng)
        f_vi, f_ir = _features(rng)
        state = restore(f_vi, f_ir, params, config)
        assert state.dehazed_raw.shape == (3, 8, 8)
        assert np.all(np.isfinite(state.dehazed_raw.data))

    def test_feature_shape_mismatch(self, rng, tiny_config):
        params = RestorationParams(tiny_config, rng)
        with pytest.raises(DimensionError):
            restore(Tensor(np.zeros((4, 8, 8))), Tensor(np.zeros((4, 8, 9))), params, tiny_config)
