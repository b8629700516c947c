"""
网络层模块

提供参数容器基类 Module 以及卷积、逐通道卷积、全连接、层归一化等基础层。
Module 按属性定义顺序递归收集参数，参数名形如 "restoration.block.attn.qkv.weight"，
检查点与优化器都依赖这个确定的顺序。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import math
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from . import functional as F
from .errors import DimensionError
from .tensor import Parameter, Tensor


class Module:
    """参数容器基类"""

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{name}.{index}.")

    def parameters(self) -> list:
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: np.array(p.data) for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """按名称加载参数；缺失或多余的名称都视为错误"""
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise KeyError(f"参数名不匹配, 缺失: {missing[:5]}, 多余: {unexpected[:5]}")
        for name, param in own.items():
            param.assign(np.asarray(state[name]).reshape(param.shape))

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


def _uniform(rng: np.random.Generator, bound: float, shape) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape)


class Conv2d(Module):
    """
    卷积层（ConvParams 的实现）

    属性:
        weight: (outC, inC, k, k)
        bias: (outC,) 或 None
        stride, padding: 步长与填充；padding 默认 k // 2，保持空间尺寸
    """

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: np.random.Generator, stride: int = 1, padding: Optional[int] = None,
                 bias: bool = True):
        bound = 1.0 / math.sqrt(in_channels * kernel_size * kernel_size)
        self.weight = Parameter(_uniform(rng, bound, (out_channels, in_channels, kernel_size, kernel_size)))
        self.bias = Parameter(_uniform(rng, bound, (out_channels,))) if bias else None
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class DepthwiseConv2d(Module):
    """3×3 逐通道卷积，无偏置"""

    def __init__(self, channels: int, rng: np.random.Generator, kernel_size: int = 3):
        bound = 1.0 / kernel_size
        self.weight = Parameter(_uniform(rng, bound, (channels, kernel_size, kernel_size)))
        self.padding = kernel_size // 2

    def __call__(self, x: Tensor) -> Tensor:
        return F.depthwise_conv2d(x, self.weight, None, self.padding)


class Linear(Module):
    """全连接层: y = W·x + b，x 为长度 in_features 的向量"""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        bound = 1.0 / math.sqrt(in_features)
        self.weight = Parameter(_uniform(rng, bound, (out_features, in_features)))
        self.bias = Parameter(_uniform(rng, bound, (out_features,)))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape != (self.weight.shape[1],):
            raise DimensionError(f"全连接层输入长度应为 {self.weight.shape[1]}，实际 {x.shape}",
                                 axis="features")
        return (self.weight @ x.reshape(-1, 1)).reshape(-1) + self.bias


class LayerNorm(Module):
    """按通道在空间位置上统计的无偏置层归一化"""

    def __init__(self, channels: int):
        self.weight = Parameter(np.ones(channels))

    def __call__(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.weight)
