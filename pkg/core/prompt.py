"""
提示生成模块（PGM）与提示嵌入块（PEB）

处理流程:
    1. 编码器分别提取红外与可见光特征 F_ir、F_vi，形状 (C, H, W)
    2. 差分特征 F_vi−ir = F_vi − F_ir，去除共享信息、突出非共享信息
    3. 权重预测网络: 3×3 卷积 → 全局平均池化 → 全连接 → softmax，得到长度 C 的
       权重向量，沿空间广播为 (C, H, W) 的选择矩阵 W_p
    4. 提示池 P_ir 以 32×32 为基准分辨率存储，双线性缩放到工作分辨率后，
       P̂_ir = Conv3×3(Conv1×1(W_p ⊙ P_ir))
    5. PEB: 特征与提示在通道维拼接 → 2C 宽的 Transformer 块 → 1×1 卷积回到 C 通道

说明:
    W_p 在文中记为 C×H×W 的矩阵，但由 GAP→Linear→Softmax 得到的只能是长度 C
    的向量，这里按通道广播实现；同一通道所有空间位置的权重相同。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
from typing import Tuple

import numpy as np

from . import functional as F
from .errors import DimensionError, RegistrationError
from .layers import Conv2d, Linear, Module
from .tensor import Parameter, Tensor, concat
from .transformer import TransformerBlock

POOL_SIZE = 32
POOL_INIT = 0.02


# ==================== 编码器 ====================

class Encoder(Module):
    """
    单模态编码器

    3×3 卷积嵌入 → 若干 Transformer 块 → 1×1 输出投影。
    输出投影权重和偏置全部置零时，无论输入如何输出都为零。
    """

    def __init__(self, in_channels: int, channels: int, blocks: int, heads: int,
                 expansion: float, rng: np.random.Generator):
        self.embed = Conv2d(in_channels, channels, 3, rng)
        self.blocks = [TransformerBlock(channels, heads, expansion, rng) for _ in range(blocks)]
        self.out_proj = Conv2d(channels, channels, 1, rng)

    def __call__(self, x: Tensor) -> Tensor:
        h = self.embed(x)
        for block in self.blocks:
            h = block(h)
        return self.out_proj(h)


class SharedTrunkEncoder(Module):
    """共享主干的编码器: 两个模态各自保留嵌入层（输入通道数不同），其余层共享"""

    def __init__(self, embed: Conv2d, trunk: Encoder):
        self.embed = embed
        self.trunk = trunk

    def named_parameters(self, prefix: str = ""):
        # 主干参数由 ir 分支登记，这里只登记自己的嵌入层
        yield from self.embed.named_parameters(f"{prefix}embed.")

    def __call__(self, x: Tensor) -> Tensor:
        h = self.embed(x)
        for block in self.trunk.blocks:
            h = block(h)
        return self.trunk.out_proj(h)


class EncoderParams(Module):
    """
    红外/可见光编码器参数

    参数:
        channels (int): 特征通道数 C
        blocks (int): 每个模态的 Transformer 块数
        shared (bool): 是否在两个模态间共享主干（默认不共享）
    """

    def __init__(self, channels: int, blocks: int, heads: int, expansion: float,
                 rng: np.random.Generator, shared: bool = False):
        self.ir = Encoder(1, channels, blocks, heads, expansion, rng)
        if shared:
            self.vi = SharedTrunkEncoder(Conv2d(3, channels, 3, rng), self.ir)
        else:
            self.vi = Encoder(3, channels, blocks, heads, expansion, rng)


def encode_pair(ir_image: Tensor, vis_image: Tensor, params: EncoderParams) -> Tuple[Tensor, Tensor]:
    """
    编码配准的图像对

    参数:
        ir_image (Tensor): 红外图像 (1, H, W)
        vis_image (Tensor): 可见光图像 (3, H, W)
        params (EncoderParams): 编码器参数

    返回:
        (F_ir, F_vi): 两个 (C, H, W) 特征

    错误处理:
        空间尺寸不一致时抛出 RegistrationError
    """
    if ir_image.shape[1:] != vis_image.shape[1:]:
        raise RegistrationError(f"红外 {ir_image.shape[1:]} 与可见光 {vis_image.shape[1:]} 未配准")
    return params.ir(ir_image), params.vi(vis_image)


def difference_features(f_vi: Tensor, f_ir: Tensor) -> Tensor:
    """差分特征 F_vi − F_ir"""
    if f_vi.shape != f_ir.shape:
        raise DimensionError(f"差分特征形状不一致: {f_vi.shape} 与 {f_ir.shape}", axis="shape")
    return f_vi - f_ir


# ==================== 提示池 ====================

class PromptPool(Module):
    """
    可学习提示池及其选择网络

    属性:
        pool: 提示池 P，(C, 32, 32)，初始化为 U[−0.02, 0.02]
        weight_conv: 权重预测网络的 3×3 卷积 (C → C)
        weight_linear: 权重预测网络的全连接层 (C → C)
        fuse_1x1, fuse_3x3: 加权后依次作用的 1×1 与 3×3 卷积
    """

    def __init__(self, channels: int, rng: np.random.Generator,
                 pool_size: int = POOL_SIZE, pool_init: float = POOL_INIT):
        self.pool = Parameter(rng.uniform(-pool_init, pool_init, size=(channels, pool_size, pool_size)))
        self.weight_conv = Conv2d(channels, channels, 3, rng)
        self.weight_linear = Linear(channels, channels, rng)
        self.fuse_1x1 = Conv2d(channels, channels, 1, rng)
        self.fuse_3x3 = Conv2d(channels, channels, 3, rng)

    @property
    def channels(self) -> int:
        return self.pool.shape[0]


def predict_prompt_weights(diff: Tensor, pool: PromptPool) -> Tensor:
    """
    预测提示选择矩阵 W_p

    conv3×3 → GAP → Linear → softmax 得到长度 C 的概率向量，广播为 (C, H, W)。
    每个像素处沿通道求和为 1。
    """
    if diff.ndim != 3 or diff.shape[0] != pool.channels:
        raise DimensionError(f"差分特征应为 ({pool.channels}, H, W)，实际 {diff.shape}", axis="channels")
    logits = pool.weight_linear(F.global_average_pool(pool.weight_conv(diff)))
    weights = F.softmax(logits, axis=0)
    return weights.reshape(-1, 1, 1).broadcast_to(diff.shape)


def select_prompt(weights: Tensor, pool: PromptPool, height: int, width: int) -> Tensor:
    """W_p ⊙ P_ir，提示池先缩放到 (height, width)"""
    resized = F.bilinear_resize(pool.pool, height, width)
    if weights.shape != resized.shape:
        raise DimensionError(f"选择矩阵 {weights.shape} 与提示池 {resized.shape} 形状不一致", axis="shape")
    return weights * resized


def generate_prompt(weights: Tensor, pool: PromptPool, height: int, width: int) -> Tensor:
    """P̂ = Conv3×3(Conv1×1(W_p ⊙ P))，空间尺寸保持 (height, width)"""
    return pool.fuse_3x3(pool.fuse_1x1(select_prompt(weights, pool, height, width)))


def run_prompt_generation(f_primary: Tensor, f_secondary: Tensor, pool: PromptPool) -> Tensor:
    """
    完整的提示生成: 差分 → 权重 → 提示

    复原阶段传入 (F_vi, F_ir)，融合第一阶段传入 (F̂_vi, F_ir)。
    """
    diff = difference_features(f_primary, f_secondary)
    weights = predict_prompt_weights(diff, pool)
    _, height, width = f_primary.shape
    prompt = generate_prompt(weights, pool, height, width)
    logging.debug(f"生成提示: 形状 {prompt.shape}")
    return prompt


# ==================== 提示嵌入 ====================

class PromptEmbedBlock(Module):
    """提示嵌入块: 拼接 → 2C 宽 Transformer 块 → 1×1 卷积回到 C 通道"""

    def __init__(self, channels: int, heads: int, expansion: float, rng: np.random.Generator):
        self.block = TransformerBlock(channels * 2, heads, expansion, rng)
        self.project = Conv2d(channels * 2, channels, 1, rng)

    def __call__(self, feature: Tensor, prompt: Tensor) -> Tensor:
        return prompt_embed(feature, prompt, self)


class ConcatConvEmbed(Module):
    """消融 "w/o FB-PEB" 使用的替代结构: 拼接后直接 1×1 卷积"""

    def __init__(self, channels: int, rng: np.random.Generator):
        self.project = Conv2d(channels * 2, channels, 1, rng)

    def __call__(self, feature: Tensor, prompt: Tensor) -> Tensor:
        if feature.shape != prompt.shape:
            raise DimensionError(f"特征 {feature.shape} 与提示 {prompt.shape} 形状不一致", axis="shape")
        return self.project(concat([feature, prompt], axis=0))


def prompt_embed(feature: Tensor, prompt: Tensor, params: PromptEmbedBlock) -> Tensor:
    """
    提示嵌入

    参数:
        feature (Tensor): 特征 (C, H, W)
        prompt (Tensor): 提示 (C, H, W)
        params (PromptEmbedBlock): 嵌入块参数

    返回:
        Tensor: (C, H, W)
    """
    if feature.shape != prompt.shape:
        raise DimensionError(f"特征 {feature.shape} 与提示 {prompt.shape} 形状不一致", axis="shape")
    joined = concat([feature, prompt], axis=0)
    return params.project(params.block(joined))
