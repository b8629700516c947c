"""
损失函数模块

训练目标:
    ℓ₁     = mean |Î_vi − I_vi,gt|                                  复原损失
    ℓ_∇    = (1/HW) Σᵢ ‖∇I_fⁱ − max(|∇I_ir|, |∇I_vi,gtⁱ|)‖₁          梯度一致性
    ℓ_int  = (1/HW) Σᵢ ‖I_fⁱ − max(I_ir, I_vi,gtⁱ)‖₁                 强度一致性
    ℓ_total = ℓ_int + ℓ_∇ + α·ℓ₁

i 遍历 R、G、B 三个通道，单通道红外图像沿通道广播。
ℓ_∇ 与 ℓ_int 的归一化因子是 H·W 而不是 3·H·W，通道求和在归一化之外。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

from dataclasses import dataclass

import numpy as np

from . import functional as F
from .errors import DimensionError, ParameterError
from .tensor import Tensor, as_tensor, maximum

SOBEL_X = np.array([[-1.0, 0.0, 1.0],
                    [-2.0, 0.0, 2.0],
                    [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T.copy()


@dataclass
class LossConfig:
    """
    损失配置

    属性:
        alpha (float): ℓ₁ 在总损失中的权重，必须非负
    """

    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ParameterError(f"alpha 不能为负: {self.alpha}")


@dataclass
class LossBreakdown:
    """各项损失（均为标量张量），训练循环据此写损失曲线"""

    l_int: Tensor
    l_grad: Tensor
    l_1: Tensor
    total: Tensor

    def values(self):
        return {
            "l_int": self.l_int.item(),
            "l_grad": self.l_grad.item(),
            "l_1": self.l_1.item(),
            "l_total": self.total.item(),
        }


def _check_triple(fused: Tensor, ir: Tensor, gt: Tensor) -> None:
    if fused.ndim != 3 or fused.shape[0] != 3:
        raise DimensionError(f"融合图像应为 (3, H, W)，实际 {fused.shape}", axis="channels")
    if gt.shape != fused.shape:
        raise DimensionError(f"真值 {gt.shape} 与融合图像 {fused.shape} 形状不一致", axis="shape")
    if ir.ndim != 3 or ir.shape[0] not in (1, 3) or ir.shape[1:] != fused.shape[1:]:
        raise DimensionError(f"红外图像应为 (1, H, W) 且与融合图像同尺寸，实际 {ir.shape}",
                             axis="height/width")


def _broadcast_ir(ir: Tensor, channels: int) -> Tensor:
    return ir if ir.shape[0] == channels else ir.broadcast_to((channels,) + ir.shape[1:])


def l1_restoration(dehazed: Tensor, gt) -> Tensor:
    """ℓ₁: 平均绝对误差"""
    dehazed, gt = as_tensor(dehazed), as_tensor(gt)
    if dehazed.shape != gt.shape:
        raise DimensionError(f"去雾图像 {dehazed.shape} 与真值 {gt.shape} 形状不一致", axis="shape")
    return (dehazed - gt).abs().mean()


def sobel_gradient(image) -> Tensor:
    """
    Sobel 梯度幅值 |Gx| + |Gy|

    逐通道计算，边缘复制填充，输出与输入同形状。
    """
    image = as_tensor(image)
    channels = image.shape[0]
    dtype = image.dtype
    kx = Tensor(np.broadcast_to(SOBEL_X, (channels, 3, 3)), dtype=dtype)
    ky = Tensor(np.broadcast_to(SOBEL_Y, (channels, 3, 3)), dtype=dtype)
    padded = F.pad_replicate(image, 1)
    gx = F.depthwise_conv2d(padded, kx, padding=0)
    gy = F.depthwise_conv2d(padded, ky, padding=0)
    return gx.abs() + gy.abs()


def gradient_loss(fused, ir, gt) -> Tensor:
    """ℓ_∇: 融合图像梯度与两源梯度逐像素最大值之间的 L1，除以 H·W"""
    fused, ir, gt = as_tensor(fused), as_tensor(ir), as_tensor(gt)
    _check_triple(fused, ir, gt)
    _, height, width = fused.shape
    target = maximum(_broadcast_ir(sobel_gradient(ir), 3), sobel_gradient(gt))
    return (sobel_gradient(fused) - target).abs().sum() * (1.0 / (height * width))


def intensity_loss(fused, ir, gt) -> Tensor:
    """ℓ_int: 融合图像与两源强度逐像素最大值之间的 L1，除以 H·W"""
    fused, ir, gt = as_tensor(fused), as_tensor(ir), as_tensor(gt)
    _check_triple(fused, ir, gt)
    _, height, width = fused.shape
    target = maximum(_broadcast_ir(ir, 3), gt)
    return (fused - target).abs().sum() * (1.0 / (height * width))


def compute_losses(fused, dehazed, ir, gt, config: LossConfig) -> LossBreakdown:
    """计算全部损失项"""
    l_int = intensity_loss(fused, ir, gt)
    l_grad = gradient_loss(fused, ir, gt)
    l_1 = l1_restoration(dehazed, gt)
    return LossBreakdown(l_int=l_int, l_grad=l_grad, l_1=l_1,
                         total=l_int + l_grad + l_1 * config.alpha)


def total_loss(fused, dehazed, ir, gt, config: LossConfig) -> Tensor:
    """ℓ_total = ℓ_int + ℓ_∇ + α·ℓ₁"""
    return compute_losses(fused, dehazed, ir, gt, config).total
