"""
两阶段基线模块

经典的"先去雾、后融合"流程，作为评估中的参考行:
    1. 暗通道先验去雾: J = (I − A) / max(T′, t0) + A
    2. 平均融合: I_f = 0.5·(I_ir + J)

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
from typing import Tuple

import numpy as np

from . import haze_model
from .data_models import HazeEstimate
from .errors import DimensionError, RegistrationError
from .metrics import to_gray
from .tensor import Tensor

T0 = 0.1


def dcp_dehaze(hazy, window: int = haze_model.IMAGE_WINDOW, omega: float = haze_model.OMEGA,
               t0: float = T0, radius: int = haze_model.GUIDED_RADIUS,
               epsilon: float = haze_model.GUIDED_EPS,
               a_floor: float = haze_model.A_FLOOR) -> Tuple[Tensor, HazeEstimate]:
    """
    暗通道先验去雾

    参数:
        hazy: 有雾图像 (3, H, W)，[0, 1]
        window (int): 暗通道窗口，图像分辨率默认 15
        omega (float): 保留系数
        t0 (float): 透射率下限，避免除以接近 0 的值
        radius, epsilon: 导向滤波参数，引导图为有雾图像的灰度

    返回:
        (J, HazeEstimate): 去雾图像 (3, H, W)，截断到 [0, 1]；以及透射率与雾浓度
    """
    image = np.asarray(getattr(hazy, "data", hazy), dtype=np.float64)
    if image.ndim != 3 or image.shape[0] != 3:
        raise DimensionError(f"去雾输入应为 (3, H, W)，实际 {image.shape}", axis="channels")

    dark = haze_model.dark_channel(image, window)
    a_hat = haze_model.estimate_atmospheric_light(image, dark)
    transmission = haze_model.transmission_map(image, a_hat, omega, window, a_floor).data.astype(np.float64)
    guide = to_gray(image)[None]
    refined = np.clip(haze_model.guided_filter(guide, transmission, radius, epsilon).data, 0.0, 1.0)

    airlight = np.maximum(a_hat, a_floor).reshape(-1, 1, 1)
    restored = (image - airlight) / np.maximum(refined, t0) + airlight
    restored = np.clip(restored, 0.0, 1.0)
    logging.debug(f"暗通道去雾: 大气光 {a_hat}, 平均透射率 {refined.mean():.4f}")

    estimate = HazeEstimate(
        transmission=Tensor(transmission, dtype=np.float64),
        refined=Tensor(refined, dtype=np.float64),
        density=Tensor(1.0 - refined, dtype=np.float64),
        atmospheric_light=a_hat,
        omega=omega,
    )
    return Tensor(restored, dtype=np.float64), estimate


def average_fuse(ir, vis) -> Tensor:
    """平均融合: 0.5·(红外沿通道广播 + 可见光)"""
    ir_array = np.asarray(getattr(ir, "data", ir), dtype=np.float64)
    vis_array = np.asarray(getattr(vis, "data", vis), dtype=np.float64)
    if ir_array.shape[1:] != vis_array.shape[1:]:
        raise RegistrationError(f"红外 {ir_array.shape[1:]} 与可见光 {vis_array.shape[1:]} 尺寸不一致")
    return Tensor(0.5 * (ir_array + vis_array), dtype=np.float64)


def two_stage_baseline(ir, hazy, **dehaze_options) -> Tuple[Tensor, Tensor]:
    """先去雾再平均融合，返回 (融合图像, 去雾图像)"""
    dehazed, _ = dcp_dehaze(hazy, **dehaze_options)
    return average_fuse(ir, dehazed), dehazed
