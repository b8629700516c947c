"""
图像算子模块

本模块提供流水线需要的全部图像级算子，每个算子都带有手写的反向传播：

- conv2d: 标准互相关卷积（不翻转卷积核），支持步长与零填充
- depthwise_conv2d: 逐通道卷积，用于 Transformer 块中的 3×3 深度卷积
- softmax: 数值稳定的 softmax（先减去最大值）
- global_average_pool / channel_average_pool: 全局平均池化与通道平均池化
- replicate_channels: 把单通道图复制成多通道
- bilinear_resize: align_corners=False 的双线性插值
- pad_replicate: 边缘复制填充
- gelu: tanh 近似的 GELU 激活
- layer_norm / l2_normalize: 由基础算子组合而成，梯度自动正确

所有算子都是纯函数，可以并发调用。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import math
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError
from .tensor import Tensor


def _output_size(size: int, kernel: int, stride: int, padding: int, axis: str) -> int:
    out = (size + 2 * padding - kernel) // stride + 1
    if out < 1:
        raise DimensionError(
            f"卷积输出尺寸非正: 输入 {size}, 卷积核 {kernel}, 步长 {stride}, 填充 {padding}",
            axis=axis,
        )
    return out


def _windows(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(C, H', W', kh, kw) 的只读滑窗视图，不复制数据"""
    view = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    return view[:, ::stride, ::stride] if stride > 1 else view


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """
    二维卷积（互相关）

    参数:
        x (Tensor): 输入，形状 (inC, H, W)
        weight (Tensor): 卷积核，形状 (outC, inC, k, k)
        bias (Tensor | None): 偏置，形状 (outC,)
        stride (int): 步长，正整数
        padding (int): 零填充宽度，非负整数

    返回:
        Tensor: 形状 (outC, H', W')，H' = floor((H + 2p − k)/s) + 1

    实现说明:
        滑窗视图展开为 (inC·k·k, H'·W') 后与卷积核做一次矩阵乘法（im2col）。
        卷积核梯度同样是一次矩阵乘法；输入梯度先得到每个偏移位置的列，
        再按偏移累加回填充后的输入。
    """
    if x.ndim != 3:
        raise DimensionError(f"conv2d 需要 (C, H, W) 输入，实际 {x.shape}", axis="rank")
    channels, height, width = x.shape
    out_channels, in_channels, kh, kw = weight.shape
    if in_channels != channels:
        raise DimensionError(f"conv2d 输入通道 {channels} 与卷积核输入通道 {in_channels} 不一致",
                             axis="channels")
    if stride < 1 or padding < 0:
        raise DimensionError(f"非法步长 {stride} 或填充 {padding}", axis="stride")
    out_h = _output_size(height, kh, stride, padding, "height")
    out_w = _output_size(width, kw, stride, padding, "width")

    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding))) if padding else x.data
    w = weight.data
    windows = _windows(xp, kh, kw, stride)
    out = np.tensordot(w, windows, axes=([1, 2, 3], [0, 3, 4]))
    if bias is not None:
        out += bias.data[:, None, None]

    def backward(g):
        grad_w = np.tensordot(g, windows, axes=([1, 2], [1, 2]))
        # (inC, k, k, H', W')
        columns = np.tensordot(w, g, axes=(0, 0))
        grad_xp = np.zeros_like(xp)
        row_span = stride * (out_h - 1) + 1
        col_span = stride * (out_w - 1) + 1
        for i in range(kh):
            for j in range(kw):
                grad_xp[:, i:i + row_span:stride, j:j + col_span:stride] += columns[:, i, j]
        grad_x = grad_xp[:, padding:padding + height, padding:padding + width] if padding else grad_xp
        grads = [grad_x, grad_w]
        if bias is not None:
            grads.append(g.sum(axis=(1, 2)))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._from_op(out, parents, backward, "conv2d")


def depthwise_conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
                     padding: int = 1) -> Tensor:
    """
    逐通道卷积

    参数:
        x (Tensor): 输入 (C, H, W)
        weight (Tensor): 卷积核 (C, k, k)，每个通道独立
        bias (Tensor | None): 偏置 (C,)
        padding (int): 零填充宽度，步长固定为 1
    """
    channels, height, width = x.shape
    if weight.shape[0] != channels:
        raise DimensionError(f"逐通道卷积核数量 {weight.shape[0]} 与通道数 {channels} 不一致",
                             axis="channels")
    _, kh, kw = weight.shape
    out_h = _output_size(height, kh, 1, padding, "height")
    out_w = _output_size(width, kw, 1, padding, "width")
    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding))) if padding else x.data
    w = weight.data

    out = np.zeros((channels, out_h, out_w), dtype=np.result_type(x.data, w))
    scratch = np.empty_like(out)
    for i in range(kh):
        for j in range(kw):
            np.multiply(xp[:, i:i + out_h, j:j + out_w], w[:, i, j][:, None, None], out=scratch)
            out += scratch
    if bias is not None:
        out += bias.data[:, None, None]

    def backward(g):
        grad_xp = np.zeros_like(xp)
        grad_w = np.empty_like(w)
        scratch = np.empty_like(g)
        for i in range(kh):
            for j in range(kw):
                patch = xp[:, i:i + out_h, j:j + out_w]
                grad_w[:, i, j] = np.einsum("chw,chw->c", g, patch)
                np.multiply(g, w[:, i, j][:, None, None], out=scratch)
                grad_xp[:, i:i + out_h, j:j + out_w] += scratch
        grad_x = grad_xp[:, padding:padding + height, padding:padding + width] if padding else grad_xp
        grads = [grad_x, grad_w]
        if bias is not None:
            grads.append(g.sum(axis=(1, 2)))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._from_op(out, parents, backward, "depthwise_conv2d")


def softmax(x: Tensor, axis: int = 0) -> Tensor:
    """
    softmax

    默认沿通道维（axis=0）归一化。先减去最大值保证数值稳定，
    输出在每个位置上沿 axis 求和为 1。
    """
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    exps = np.exp(shifted)
    probs = exps / exps.sum(axis=axis, keepdims=True)

    def backward(g):
        return (probs * (g - (g * probs).sum(axis=axis, keepdims=True)),)

    return Tensor._from_op(probs, (x,), backward, "softmax")


def global_average_pool(x: Tensor) -> Tensor:
    """全局平均池化: (C, H, W) -> (C,)"""
    if x.ndim != 3 or x.shape[1] * x.shape[2] == 0:
        raise DimensionError(f"全局平均池化需要非空空间维度，实际 {x.shape}", axis="spatial")
    return x.mean(axis=(1, 2))


def channel_average_pool(x: Tensor) -> Tensor:
    """通道平均池化: (C, H, W) -> (1, H, W)"""
    if x.ndim != 3 or x.shape[0] < 1:
        raise DimensionError(f"通道平均池化需要至少一个通道，实际 {x.shape}", axis="channels")
    return x.mean(axis=0, keepdims=True)


def replicate_channels(x: Tensor, channels: int) -> Tensor:
    """把 (1, H, W) 复制为 (channels, H, W)"""
    if x.shape[0] != 1:
        raise DimensionError(f"只能复制单通道张量，实际 {x.shape}", axis="channels")
    return x.broadcast_to((channels,) + x.shape[1:])


def _interpolation_matrix(src: int, dst: int, dtype) -> np.ndarray:
    # align_corners=False: 源坐标 = (目标坐标 + 0.5)·缩放 − 0.5，负值截断到 0
    matrix = np.zeros((dst, src), dtype=dtype)
    scale = src / dst
    for d in range(dst):
        position = max((d + 0.5) * scale - 0.5, 0.0)
        low = min(int(math.floor(position)), src - 1)
        high = min(low + 1, src - 1)
        frac = position - low
        matrix[d, low] += 1.0 - frac
        matrix[d, high] += frac
    return matrix


def bilinear_resize(x: Tensor, new_height: int, new_width: int) -> Tensor:
    """
    双线性缩放

    参数:
        x (Tensor): 输入 (C, H, W)
        new_height, new_width (int): 目标尺寸，至少为 1

    说明:
        每个输出像素的插值权重之和为 1，因此常数场缩放后仍为同一常数；
        尺寸不变时插值矩阵是单位阵，输出与输入相同。
        运算可写成 Ry · X · Rxᵀ，反向传播即转置。
    """
    if new_height < 1 or new_width < 1:
        raise DimensionError(f"目标尺寸必须为正: {new_height}×{new_width}", axis="height/width")
    _, height, width = x.shape
    if (height, width) == (new_height, new_width):
        return x
    ry = _interpolation_matrix(height, new_height, x.dtype)
    rx = _interpolation_matrix(width, new_width, x.dtype)
    out = np.einsum("ah,chw,bw->cab", ry, x.data, rx, optimize=True)

    def backward(g):
        return (np.einsum("ah,cab,bw->chw", ry, g, rx, optimize=True),)

    return Tensor._from_op(out, (x,), backward, "bilinear_resize")


def pad_replicate(x: Tensor, pad: int) -> Tensor:
    """边缘复制填充，(C, H, W) -> (C, H+2p, W+2p)"""
    _, height, width = x.shape
    rows = np.clip(np.arange(-pad, height + pad), 0, height - 1)
    cols = np.clip(np.arange(-pad, width + pad), 0, width - 1)
    out = x.data[:, rows][:, :, cols]

    def backward(g):
        partial = np.zeros((g.shape[0], height, g.shape[2]), dtype=g.dtype)
        np.add.at(partial, (slice(None), rows), g)
        grad = np.zeros((g.shape[0], height, width), dtype=g.dtype)
        np.add.at(grad, (slice(None), slice(None), cols), partial)
        return (grad,)

    return Tensor._from_op(out, (x,), backward, "pad_replicate")


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Tensor) -> Tensor:
    """GELU（tanh 近似）"""
    v = x.data
    inner = _GELU_C * (v + 0.044715 * v ** 3)
    tanh = np.tanh(inner)
    out = 0.5 * v * (1.0 + tanh)

    def backward(g):
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * v ** 2)
        local = 0.5 * (1.0 + tanh) + 0.5 * v * (1.0 - tanh ** 2) * d_inner
        return (g * local,)

    return Tensor._from_op(out, (x,), backward, "gelu")


def layer_norm(x: Tensor, weight: Tensor, eps: float = 1e-5) -> Tensor:
    """
    无偏置层归一化

    每个通道在所有空间位置上统计方差，输出 x / sqrt(var + eps) · weight。
    与复原网络的 BiasFree 约定一致：分子不减均值，也没有偏置项。
    """
    mean = x.mean(axis=(1, 2), keepdims=True)
    centered = x - mean
    var = (centered * centered).mean(axis=(1, 2), keepdims=True)
    return x * (var + eps) ** -0.5 * weight.reshape(-1, 1, 1)


def l2_normalize(x: Tensor, axis: int = -1, eps: float = 1e-12) -> Tensor:
    """沿 axis 做 L2 归一化"""
    return x * ((x * x).sum(axis=axis, keepdims=True) + eps) ** -0.5
