"""
Transformer 块模块

复原网络风格的 Transformer 块，由两个子层组成:

- 通道注意力: 1×1 卷积 + 3×3 逐通道卷积生成 Q/K/V，在通道维上计算注意力，
  温度参数可学习
- 门控前馈网络: 1×1 扩展（系数 2.66）、3×3 逐通道卷积、GELU 门控、1×1 投影

每个子层前有无偏置层归一化，子层外有残差连接。两个子层的输出投影都没有偏置，
因此把输出投影权重置零后整个块退化为恒等映射。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import numpy as np

from . import functional as F
from .errors import ConfigError
from .layers import Conv2d, DepthwiseConv2d, LayerNorm, Module
from .tensor import Parameter, Tensor, matmul


class ChannelAttention(Module):
    """通道注意力子层"""

    def __init__(self, channels: int, heads: int, rng: np.random.Generator):
        if heads < 1 or channels % heads != 0:
            raise ConfigError(f"通道数 {channels} 不能被注意力头数 {heads} 整除")
        self.heads = heads
        self.temperature = Parameter(np.ones((heads, 1, 1)))
        self.qkv = Conv2d(channels, channels * 3, 1, rng, bias=False)
        self.qkv_dw = DepthwiseConv2d(channels * 3, rng)
        self.project_out = Conv2d(channels, channels, 1, rng, bias=False)

    def _split_heads(self, x: Tensor) -> Tensor:
        channels, height, width = x.shape
        return x.reshape(self.heads, channels // self.heads, height * width)

    def attention(self, x: Tensor):
        """
        计算注意力矩阵

        返回:
            (attn, v): attn 形状 (heads, C/heads, C/heads)，每行和为 1；
                       v 形状 (heads, C/heads, H·W)
        """
        channels = x.shape[0]
        if channels % self.heads != 0:
            raise ConfigError(f"通道数 {channels} 不能被注意力头数 {self.heads} 整除")
        qkv = self.qkv_dw(self.qkv(x))
        q = self._split_heads(qkv[:channels])
        k = self._split_heads(qkv[channels:2 * channels])
        v = self._split_heads(qkv[2 * channels:])
        q = F.l2_normalize(q, axis=-1)
        k = F.l2_normalize(k, axis=-1)
        attn = F.softmax(matmul(q, k.swapaxes(-1, -2)) * self.temperature, axis=-1)
        return attn, v

    def __call__(self, x: Tensor) -> Tensor:
        attn, v = self.attention(x)
        out = matmul(attn, v).reshape(x.shape)
        return self.project_out(out)


class GatedFeedForward(Module):
    """门控前馈子层"""

    def __init__(self, channels: int, expansion: float, rng: np.random.Generator):
        hidden = int(channels * expansion)
        self.hidden = hidden
        self.project_in = Conv2d(channels, hidden * 2, 1, rng, bias=False)
        self.dwconv = DepthwiseConv2d(hidden * 2, rng)
        self.project_out = Conv2d(hidden, channels, 1, rng, bias=False)

    def __call__(self, x: Tensor) -> Tensor:
        h = self.dwconv(self.project_in(x))
        gate, value = h[:self.hidden], h[self.hidden:]
        return self.project_out(F.gelu(gate) * value)


class TransformerBlock(Module):
    """
    Transformer 块

    参数:
        channels (int): 输入输出通道数
        heads (int): 注意力头数，channels 必须能被整除
        expansion (float): 前馈网络扩展系数
        rng: 参数初始化使用的随机数生成器

    前向:
        x = x + attn(norm1(x))
        x = x + ffn(norm2(x))
    """

    def __init__(self, channels: int, heads: int, expansion: float, rng: np.random.Generator):
        self.norm1 = LayerNorm(channels)
        self.attn = ChannelAttention(channels, heads, rng)
        self.norm2 = LayerNorm(channels)
        self.ffn = GatedFeedForward(channels, expansion, rng)

    def output_projections(self):
        """两个子层的输出投影卷积，消融与测试时置零使用"""
        return [self.attn.project_out, self.ffn.project_out]

    def __call__(self, x: Tensor) -> Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.ffn(self.norm2(x))


def transformer_block(x: Tensor, params: TransformerBlock) -> Tensor:
    """函数式调用入口，与 params(x) 等价"""
    return params(x)
