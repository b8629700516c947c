"""基础算子的测试: 卷积、softmax、池化、缩放"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core import functional as F
from core.errors import DimensionError
from core.selftest import naive_conv2d, naive_resize, naive_softmax
from core.tensor import Tensor, precision


class TestConv2d:
    def test_identity_kernel(self, rng, float64):
        x = Tensor(rng.normal(size=(3, 5, 5)))
        weight = Tensor(np.eye(3).reshape(3, 3, 1, 1))
        out = F.conv2d(x, weight, Tensor(np.zeros(3)))
        np.testing.assert_array_equal(out.data, x.data)

    def test_constant_field(self, float64):
        x = Tensor(np.full((1, 5, 5), 0.5))
        out = F.conv2d(x, Tensor(np.ones((1, 1, 3, 3))), Tensor([0.1]), padding=1)
        assert out.shape == (1, 5, 5)
        np.testing.assert_allclose(out.data[0, 1:-1, 1:-1], 9 * 0.5 + 0.1)
        # 角点只覆盖 4 个像素
        np.testing.assert_allclose(out.data[0, 0, 0], 4 * 0.5 + 0.1)

    def test_matches_loop_oracle(self, rng, float64):
        x = rng.normal(size=(2, 4, 4))
        w = rng.normal(size=(3, 2, 3, 3))
        b = rng.normal(size=3)
        out = F.conv2d(Tensor(x), Tensor(w), Tensor(b), 1, 1)
        np.testing.assert_allclose(out.data, naive_conv2d(x, w, b, 1), rtol=0, atol=1e-12)

    def test_stride_output_size(self, rng):
        out = F.conv2d(Tensor(rng.normal(size=(1, 7, 7))), Tensor(rng.normal(size=(2, 1, 3, 3))),
                       stride=2, padding=1)
        assert out.shape == (2, 4, 4)

    def test_channel_mismatch(self, rng):
        with pytest.raises(DimensionError):
            F.conv2d(Tensor(rng.normal(size=(2, 4, 4))), Tensor(rng.normal(size=(1, 3, 3, 3))))

    def test_kernel_larger_than_input(self, rng):
        with pytest.raises(DimensionError):
            F.conv2d(Tensor(rng.normal(size=(1, 2, 2))), Tensor(rng.normal(size=(1, 1, 3, 3))))


class TestDepthwiseConv2d:
    def test_each_channel_uses_own_kernel(self, float64):
        x = Tensor(np.stack([np.full((4, 4), 1.0), np.full((4, 4), 2.0)]))
        w = Tensor(np.stack([np.ones((3, 3)), 2 * np.ones((3, 3))]))
        out = F.depthwise_conv2d(x, w, padding=1)
        np.testing.assert_allclose(out.data[0, 1:-1, 1:-1], 9.0)
        np.testing.assert_allclose(out.data[1, 1:-1, 1:-1], 36.0)

    def test_matches_grouped_oracle(self, rng, float64):
        x = rng.normal(size=(3, 5, 6))
        w = rng.normal(size=(3, 3, 3))
        out = F.depthwise_conv2d(Tensor(x), Tensor(w), padding=1).data
        for c in range(3):
            expected = naive_conv2d(x[c:c + 1], w[c][None, None], np.zeros(1), 1)
            np.testing.assert_allclose(out[c:c + 1], expected, atol=1e-12)


class TestSoftmax:
    def test_equal_logits(self):
        out = F.softmax(Tensor(np.zeros((4, 3, 3))), axis=0)
        np.testing.assert_allclose(out.data, 0.25, rtol=1e-6)

    def test_closed_form(self, float64):
        logits = np.array([0.0, math.log(3.0)]).reshape(2, 1, 1)
        out = F.softmax(Tensor(logits), axis=0)
        np.testing.assert_allclose(out.data.ravel(), [0.25, 0.75], atol=1e-12)

    def test_matches_loop_oracle(self, rng, float64):
        x = rng.normal(size=(8, 5, 5)) * 10
        np.testing.assert_allclose(F.softmax(Tensor(x), 0).data, naive_softmax(x), atol=1e-12)

    def test_large_logits_stay_finite(self):
        out = F.softmax(Tensor(np.array([1000.0, 0.0]).reshape(2, 1, 1)), axis=0)
        assert np.all(np.isfinite(out.data))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 31 - 1))
    def test_sums_to_one(self, channels, height, width, seed):
        x = np.random.default_rng(seed).normal(size=(channels, height, width)) * 5
        with precision(np.float64):
            out = F.softmax(Tensor(x), axis=0).data
        np.testing.assert_allclose(out.sum(axis=0), 1.0, atol=1e-12)
        assert np.all(out >= 0)


class TestPooling:
    def test_gap_constant_channel(self, float64):
        x = Tensor(np.stack([np.full((3, 3), 0.7), np.full((3, 3), -2.0)]))
        np.testing.assert_allclose(F.global_average_pool(x).data, [0.7, -2.0])

    def test_gap_half_and_half(self, float64):
        channel = np.zeros((4, 4))
        channel[:, :2] = 1.0
        np.testing.assert_allclose(F.global_average_pool(Tensor(channel[None])).data, [0.5])

    def test_gap_matches_mean(self, rng, float64):
        x = rng.normal(size=(5, 6, 7))
        np.testing.assert_allclose(F.global_average_pool(Tensor(x)).data, x.mean(axis=(1, 2)), atol=1e-12)

    def test_cap_single_channel_unchanged(self, rng, float64):
        x = rng.normal(size=(1, 4, 4))
        np.testing.assert_allclose(F.channel_average_pool(Tensor(x)).data, x, atol=1e-15)

    def test_cap_antisymmetric_pair(self, rng, float64):
        x = rng.normal(size=(4, 4))
        out = F.channel_average_pool(Tensor(np.stack([x, -x])))
        np.testing.assert_allclose(out.data, 0.0, atol=1e-15)

    def test_cap_matches_mean(self, rng, float64):
        x = rng.normal(size=(4, 8, 8))
        out = F.channel_average_pool(Tensor(x))
        assert out.shape == (1, 8, 8)
        np.testing.assert_allclose(out.data[0], x.mean(axis=0), atol=1e-12)

    def test_empty_spatial_rejected(self):
        with pytest.raises(DimensionError):
            F.global_average_pool(Tensor(np.zeros((2, 0, 3))))


class TestBilinearResize:
    def test_constant_stays_constant(self, float64):
        out = F.bilinear_resize(Tensor(np.full((2, 5, 7), 0.3)), 11, 4)
        np.testing.assert_allclose(out.data, 0.3, atol=1e-15)

    def test_same_size_is_identity(self, rng):
        x = Tensor(rng.normal(size=(2, 6, 6)))
        assert F.bilinear_resize(x, 6, 6) is x

    def test_ramp_upsample(self, float64):
        ramp = Tensor(np.array([[0.0, 1.0], [0.0, 1.0]])[None])
        out = F.bilinear_resize(ramp, 4, 4).data
        for row in out[0]:
            np.testing.assert_allclose(row, [0.0, 0.25, 0.75, 1.0], atol=1e-15)

    def test_matches_loop_oracle(self, rng, float64):
        x = rng.normal(size=(3, 5, 9))
        np.testing.assert_allclose(F.bilinear_resize(Tensor(x), 13, 4).data, naive_resize(x, 13, 4),
                                   atol=1e-12)

    def test_invalid_size(self, rng):
        with pytest.raises(DimensionError):
            F.bilinear_resize(Tensor(rng.normal(size=(1, 4, 4))), 0, 4)


class TestNormalization:
    def test_layer_norm_unit_variance(self, rng, float64):
        x = rng.normal(loc=3.0, scale=2.0, size=(3, 8, 8))
        out = F.layer_norm(Tensor(x), Tensor(np.ones(3)), eps=0.0).data
        # 无偏置层归一化不减均值，但每个通道的方差归一为 1
        np.testing.assert_allclose(out.var(axis=(1, 2)), 1.0, rtol=1e-10)

    def test_pad_replicate(self, float64):
        x = Tensor(np.arange(4.0).reshape(1, 2, 2))
        out = F.pad_replicate(x, 1).data[0]
        np.testing.assert_array_equal(out[0], [0, 0, 1, 1])
        np.testing.assert_array_equal(out[-1], [2, 2, 3, 3])
