"""
红外辅助特征复原模块

按雾浓度把红外补偿特征注入有雾的可见光特征:

    F̂_ir = PEB(F_ir, P̂_ir)
    H     = HDE(F_vi)
    F̂_vi = TF(F̂_ir ⊙ H + F_vi ⊙ (1 − H) + F_vi)
    Î_vi  = Conv3×3(F̂_vi)

混合式末尾的 "+ F_vi" 使清晰区域的系数为 2 − H 而不是 1，按原式实现。

消融开关:
    no_f_ir:   不使用红外信息，TF 的输入只有 F_vi
    no_hde:    不估计雾浓度，混合改为 F̂_ir + F_vi
    no_p_ir:   去掉提示与 PEB，直接用编码器输出的 F_ir 作为 F̂_ir
    no_fr_peb: 去掉复原阶段的 PEB，F̂_ir = F_ir + P̂_ir

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging

import numpy as np

from . import haze_model
from .config import ModelConfig
from .data_models import HazeEstimate, RestorationState
from .errors import DimensionError
from .layers import Conv2d, Module
from .prompt import PromptEmbedBlock, PromptPool, run_prompt_generation
from .tensor import Tensor
from .transformer import TransformerBlock


class RestorationParams(Module):
    """
    复原阶段的可学习参数

    消融开关去掉的子结构不会被创建，检查点中也不会出现对应参数。
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        channels = config.channels
        uses_prompt = not (config.no_f_ir or config.no_p_ir)
        self.pgm = PromptPool(channels, rng, config.pool_size, config.pool_init) if uses_prompt else None
        if uses_prompt and not config.no_fr_peb:
            self.peb = PromptEmbedBlock(channels, config.heads, config.ffn_expansion, rng)
        else:
            self.peb = None
        self.block = TransformerBlock(channels, config.heads, config.ffn_expansion, rng)
        self.head = Conv2d(channels, 3, 3, rng)


def haze_guided_blend(f_hat_ir: Tensor, f_vi: Tensor, density: Tensor) -> Tensor:
    """
    按雾浓度混合特征（TF 之前的部分）

    参数:
        f_hat_ir (Tensor): 红外补偿特征 (C, H, W)
        f_vi (Tensor): 可见光特征 (C, H, W)
        density (Tensor): 雾浓度 H (1, H, W)，沿通道广播

    返回:
        Tensor: F̂_ir ⊙ H + F_vi ⊙ (1 − H) + F_vi

    错误处理:
        H 超出 [0, 1] 时截断并记录警告
    """
    if f_hat_ir.shape != f_vi.shape:
        raise DimensionError(f"混合特征形状不一致: {f_hat_ir.shape} 与 {f_vi.shape}", axis="shape")
    if density.shape[-2:] != f_vi.shape[-2:]:
        raise DimensionError(f"雾浓度 {density.shape} 与特征 {f_vi.shape} 空间尺寸不一致",
                             axis="height/width")
    values = density.data
    if values.min() < 0.0 or values.max() > 1.0:
        logging.warning(f"雾浓度超出 [0, 1]（最小 {values.min():.4f}, 最大 {values.max():.4f}），已截断")
        values = np.clip(values, 0.0, 1.0)
    # H 是不参与学习的门控，不向其传播梯度
    gate = Tensor(values.reshape(1, *f_vi.shape[-2:]), dtype=f_vi.dtype)
    return f_hat_ir * gate + f_vi * (1.0 - gate) + f_vi


def dehaze_head(f_hat_vi: Tensor, head: Conv2d) -> Tensor:
    """3×3 卷积 C → 3 得到去雾图像；返回未截断结果，截断在损失计算之后进行"""
    return head(f_hat_vi)


def estimate_feature_haze(f_vi: Tensor, config: ModelConfig) -> HazeEstimate:
    """在特征分辨率上估计雾浓度"""
    return haze_model.haze_density(
        f_vi,
        window=config.dark_window_feature,
        omega=config.omega,
        a_floor=config.a_floor,
        radius=config.guided_radius,
        epsilon=config.guided_eps,
    )


def restore(f_vi: Tensor, f_ir: Tensor, params: RestorationParams,
            config: ModelConfig) -> RestorationState:
    """
    红外辅助特征复原

    参数:
        f_vi, f_ir (Tensor): 编码器输出 (C, H, W)
        params (RestorationParams): 复原阶段参数
        config (ModelConfig): 模型配置，包含消融开关

    返回:
        RestorationState: F̂_ir、雾浓度、F̂_vi 与未截断的去雾图像
    """
    if f_vi.shape != f_ir.shape:
        raise DimensionError(f"特征形状不一致: {f_vi.shape} 与 {f_ir.shape}", axis="shape")

    if config.no_f_ir:
        # w/o F_ir: 直接把 F_vi 送入 Transformer 块
        restored = params.block(f_vi)
        return RestorationState(ir_compensated=None, haze=None, restored=restored,
                                dehazed_raw=dehaze_head(restored, params.head))

    if config.no_p_ir:
        f_hat_ir = f_ir
    else:
        prompt = run_prompt_generation(f_vi, f_ir, params.pgm)
        f_hat_ir = f_ir + prompt if config.no_fr_peb else params.peb(f_ir, prompt)

    if config.no_hde:
        haze = None
        blended = f_hat_ir + f_vi
    else:
        haze = estimate_feature_haze(f_vi, config)
        blended = haze_guided_blend(f_hat_ir, f_vi, haze.density)

    restored = params.block(blended)
    return RestorationState(ir_compensated=f_hat_ir, haze=haze, restored=restored,
                            dehazed_raw=dehaze_head(restored, params.head))
