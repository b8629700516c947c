"""
多阶段提示嵌入融合模块（MsPE-FM）

处理流程:
    1. F̂_vi 与 F_ir 在通道维拼接，1×1 卷积从 2C 投影回 C，作为第 1 阶段输入
    2. 提示生成模块以 (F̂_vi, F_ir) 为输入得到第 1 阶段提示 P̂_vi¹
    3. 每个阶段: Transformer 块 → PEB（与本阶段提示嵌入）
       第 2-5 阶段的提示由上一阶段提示经 1×1 卷积调整通道得到
    4. 两条残差: 第 1 阶段输入加到第 3 阶段输出，第 3 阶段输出加到第 5 阶段输出
    5. 1×1 卷积 C → 3 重建融合图像 I_f（截断在损失计算之后进行）

所有阶段宽度相同，空间分辨率在整条融合路径上保持不变。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
from typing import List, Optional

import numpy as np

from .config import ModelConfig
from .errors import DimensionError
from .layers import Conv2d, Module
from .prompt import ConcatConvEmbed, PromptEmbedBlock, PromptPool, run_prompt_generation
from .tensor import Tensor, concat
from .transformer import TransformerBlock

# 残差连接: 阶段序号（从 1 开始）→ 加到该阶段输出上的来源
# 0 表示第 1 阶段的输入
RESIDUALS = {3: 0, 5: 3}


class FusionStage(Module):
    """
    单个融合阶段

    属性:
        prompt_adjust: 1×1 卷积调整提示通道；第 1 阶段直接使用 P̂_vi¹，没有该层
        body: Transformer 块
        peb: 提示嵌入块；消融 "w/o FB-PEB" 时为拼接 + 卷积
    """

    def __init__(self, channels: int, heads: int, expansion: float, rng: np.random.Generator,
                 adjust: bool = True, concat_embed: bool = False):
        self.prompt_adjust = Conv2d(channels, channels, 1, rng) if adjust else None
        self.body = TransformerBlock(channels, heads, expansion, rng)
        if concat_embed:
            self.peb = ConcatConvEmbed(channels, rng)
        else:
            self.peb = PromptEmbedBlock(channels, heads, expansion, rng)

    def __call__(self, x: Tensor, prompt: Tensor) -> Tensor:
        out = self.peb(self.body(x), prompt)
        if out.shape != x.shape:
            raise DimensionError(f"融合阶段输出 {out.shape} 与输入 {x.shape} 形状不一致", axis="channels")
        return out


class FusionParams(Module):
    """融合阶段的全部参数"""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        channels = config.channels
        uses_prompt = not config.no_p_vi
        self.pgm = PromptPool(channels, rng, config.pool_size, config.pool_init) if uses_prompt else None
        self.input_proj = Conv2d(channels * 2, channels, 1, rng)
        self.stages: List[FusionStage] = [
            FusionStage(channels, config.heads, config.ffn_expansion, rng,
                        adjust=uses_prompt and index > 0, concat_embed=config.no_fb_peb)
            for index in range(config.num_stages)
        ]
        self.output = Conv2d(channels, 3, 1, rng)


def init_fusion_prompt(f_hat_vi: Tensor, f_ir: Tensor, pgm: PromptPool) -> Tensor:
    """第 1 阶段提示 P̂_vi¹: 以 (F̂_vi, F_ir) 运行提示生成模块"""
    return run_prompt_generation(f_hat_vi, f_ir, pgm)


def adjust_prompt_channels(prompt: Tensor, stage: FusionStage) -> Tensor:
    """1×1 卷积调整提示通道，空间尺寸不变"""
    if stage.prompt_adjust is None:
        return prompt
    return stage.prompt_adjust(prompt)


def fuse(f_hat_vi: Tensor, f_ir: Tensor, params: FusionParams, config: ModelConfig) -> Tensor:
    """
    多阶段融合

    参数:
        f_hat_vi (Tensor): 复原后的可见光特征 (C, H, W)
        f_ir (Tensor): 红外特征 (C, H, W)
        params (FusionParams): 融合参数
        config (ModelConfig): 模型配置

    返回:
        Tensor: 未截断的融合图像 (3, H, W)

    说明:
        no_p_vi 时各阶段提示为全零张量；regenerate_stage_prompts 时第 2 阶段起
        以 (阶段输入, F_ir) 重新运行提示生成模块，再经 1×1 卷积调整通道。
    """
    if f_hat_vi.shape != f_ir.shape:
        raise DimensionError(f"融合输入形状不一致: {f_hat_vi.shape} 与 {f_ir.shape}", axis="shape")

    x = params.input_proj(concat([f_hat_vi, f_ir], axis=0))
    outputs = {0: x}

    prompt: Optional[Tensor] = None
    if params.pgm is None:
        zero_prompt = Tensor(np.zeros(x.shape), dtype=x.dtype)
    else:
        prompt = init_fusion_prompt(f_hat_vi, f_ir, params.pgm)

    for index, stage in enumerate(params.stages, start=1):
        if params.pgm is None:
            stage_prompt = zero_prompt
        elif index == 1:
            stage_prompt = prompt
        elif config.regenerate_stage_prompts:
            stage_prompt = adjust_prompt_channels(run_prompt_generation(x, f_ir, params.pgm), stage)
        else:
            stage_prompt = adjust_prompt_channels(prompt, stage)
        prompt = stage_prompt

        x = stage(x, stage_prompt)
        if index in RESIDUALS:
            x = x + outputs[RESIDUALS[index]]
        outputs[index] = x

    logging.debug(f"融合完成: {len(params.stages)} 个阶段, 特征形状 {x.shape}")
    return params.output(x)
