"""
整体网络模块

把编码器、红外辅助特征复原与多阶段融合组装为一个单阶段去雾融合网络。
参数按 encoder → restoration → fusion 的顺序创建和命名，
同一个随机种子总是得到同样的初始参数。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .data_models import RestorationState
from .fusion import FusionParams, fuse
from .layers import Module
from .prompt import EncoderParams, encode_pair
from .restoration import RestorationParams, restore
from .tensor import Tensor, as_tensor


@dataclass
class ModelOutput:
    """
    一次前向传播的结果

    属性:
        fused_raw (Tensor): 未截断的融合图像 I_f (3, H, W)
        restoration (RestorationState): 复原阶段状态（含去雾图像与雾浓度）
    """

    fused_raw: Tensor
    restoration: RestorationState

    @property
    def fused(self) -> np.ndarray:
        return np.clip(self.fused_raw.data, 0.0, 1.0)

    @property
    def dehazed(self) -> np.ndarray:
        return self.restoration.dehazed

    @property
    def density(self):
        """雾浓度图 (1, H, W)；关闭雾浓度估计的消融配置下为 None"""
        haze = self.restoration.haze
        return None if haze is None else haze.density.data


class DehazeFusionNet(Module):
    """
    单阶段联合去雾融合网络（ModelParams）

    参数:
        config (ModelConfig): 模型拓扑与消融开关
        rng (np.random.Generator): 参数初始化使用的随机数发生器
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        self.encoder = EncoderParams(config.channels, config.encoder_blocks, config.heads,
                                     config.ffn_expansion, rng, shared=config.share_encoder)
        self.restoration = RestorationParams(config, rng)
        self.fusion = FusionParams(config, rng)
        logging.debug(f"网络创建完成: {len(self.parameters())} 个参数张量, "
                      f"{self.num_weights()} 个标量")

    def num_weights(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def __call__(self, ir_image, vis_image) -> ModelOutput:
        """
        前向传播

        参数:
            ir_image: 红外图像 (1, H, W)
            vis_image: 有雾可见光图像 (3, H, W)
        """
        f_ir, f_vi = encode_pair(as_tensor(ir_image), as_tensor(vis_image), self.encoder)
        state = restore(f_vi, f_ir, self.restoration, self.config)
        fused_raw = fuse(state.restored, f_ir, self.fusion, self.config)
        return ModelOutput(fused_raw=fused_raw, restoration=state)
