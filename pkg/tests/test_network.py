"""整体网络与消融配置的测试"""

import numpy as np
import pytest

from core.config import ABLATION_FLAGS
from core.data_models import ImagePair, RestorationState
from core.errors import RegistrationError
from core.losses import LossConfig
from core.network import DehazeFusionNet, ModelOutput
from core.optim import AdamW
from core.tensor import Tensor
from core.trainer import train_step

from .helpers import small_model_config


def _inputs(rng, size=(16, 16)):
    return rng.uniform(size=(1,) + size), rng.uniform(size=(3,) + size)


class TestForward:
    def test_output_shapes(self, rng, tiny_config):
        model = DehazeFusionNet(tiny_config, rng)
        ir, vis = _inputs(rng, (16, 24))
        output = model(ir, vis)
        assert output.fused.shape == (3, 16, 24)
        assert output.dehazed.shape == (3, 16, 24)
        assert output.density.shape == (1, 16, 24)

    def test_same_seed_same_parameters(self, tiny_config):
        first = DehazeFusionNet(tiny_config, np.random.default_rng(7))
        second = DehazeFusionNet(tiny_config, np.random.default_rng(7))
        assert first.num_weights() == second.num_weights()
        for (name_a, a), (name_b, b) in zip(first.named_parameters(), second.named_parameters()):
            assert name_a == name_b
            np.testing.assert_array_equal(a.data, b.data)

    def test_parameter_names_are_grouped(self, rng, tiny_config):
        names = [name for name, _ in DehazeFusionNet(tiny_config, rng).named_parameters()]
        assert names[0].startswith("encoder.")
        assert any(name.startswith("restoration.") for name in names)
        assert names[-1].startswith("fusion.")

    def test_unregistered_inputs(self, rng, tiny_config):
        model = DehazeFusionNet(tiny_config, rng)
        with pytest.raises(RegistrationError):
            model(np.zeros((1, 16, 16)), np.zeros((3, 16, 12)))


class TestModelOutput:
    def test_clamps_to_unit_range(self):
        raw = Tensor(np.array([-0.5, 0.3, 1.7]).reshape(3, 1, 1))
        state = RestorationState(ir_compensated=None, haze=None, restored=raw, dehazed_raw=raw)
        output = ModelOutput(fused_raw=raw, restoration=state)
        np.testing.assert_allclose(output.fused.ravel(), [0.0, 0.3, 1.0], atol=1e-7)
        np.testing.assert_allclose(output.dehazed.ravel(), [0.0, 0.3, 1.0], atol=1e-7)
        assert output.density is None


class TestAblations:
    @pytest.mark.parametrize("flag", ABLATION_FLAGS)
    def test_forward_and_step(self, rng, flag):
        config = small_model_config(**{flag: True})
        model = DehazeFusionNet(config, rng)
        ir, vis = _inputs(rng)
        output = model(ir, vis)
        assert output.fused.shape == (3, 16, 16)
        if flag in ("no_f_ir", "no_hde"):
            assert output.density is None
        else:
            assert output.density is not None

        optimizer = AdamW(list(model.named_parameters()))
        before = [p.data.copy() for p in model.parameters()]
        pair = ImagePair(ir=ir, vis=vis, gt=rng.uniform(size=(3, 16, 16)))
        losses = train_step(model, optimizer, [pair], 1e-3, LossConfig())
        assert np.isfinite(losses["l_total"])
        assert any(not np.array_equal(b, p.data) for b, p in zip(before, model.parameters()))

    def test_ablations_change_parameter_count(self, tiny_config):
        full = DehazeFusionNet(tiny_config, np.random.default_rng(0)).num_weights()
        for flag in ("no_f_ir", "no_p_ir", "no_p_vi"):
            reduced = DehazeFusionNet(small_model_config(**{flag: True}), np.random.default_rng(0)).num_weights()
            assert reduced < full
