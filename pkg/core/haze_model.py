"""
雾霾物理模块

本模块包含两部分:

1. 雾霾合成（训练数据生成）: 大气散射模型 I = J·t + A·(1 − t)，t = exp(−β·d)，
   以及三类合成深度图（水平斜坡、径向渐变、两平面阶跃）。
2. 雾浓度估计（HDE）: 通道平均池化 → 暗通道 → 大气光估计 → 初始透射率
   T = 1 − ω·DCG(F̃ ⊙ A⁻¹) → 导向滤波得到 T′ → 雾浓度 H = 1 − T′。

雾浓度估计不参与学习，H 在反向传播中视为常数。

默认参数:
    ω = 0.95
    暗通道窗口: 图像分辨率 15，特征分辨率 7
    大气光下限: 0.05（求倒数前截断，防止暗场景除零放大）
    导向滤波: 半径 8，ε = 1e-4
    合成参数: β ~ U[0.6, 1.8]，A ~ U[0.7, 1.0]，深度取值 [0, 2]

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
from typing import Union

import numpy as np
from scipy.ndimage import minimum_filter

from .data_models import HazeEstimate, HazeParams
from .errors import DimensionError, NumericError, ParameterError
from .tensor import Tensor

OMEGA = 0.95
IMAGE_WINDOW = 15
FEATURE_WINDOW = 7
A_FLOOR = 0.05
GUIDED_RADIUS = 8
GUIDED_EPS = 1e-4
BRIGHTEST_FRACTION = 0.001
DEPTH_FAMILIES = ("ramp", "radial", "step")
MAX_DEPTH = 2.0

ArrayOrTensor = Union[np.ndarray, Tensor]


def _array(x: ArrayOrTensor) -> np.ndarray:
    return np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)


def _tensor(array: np.ndarray, like: ArrayOrTensor) -> Tensor:
    dtype = like.dtype if isinstance(like, (Tensor, np.ndarray)) else None
    if dtype is not None and not np.issubdtype(dtype, np.floating):
        dtype = None
    return Tensor(array, dtype=dtype)


# ==================== 雾霾合成 ====================

def synthesize_haze(clear: ArrayOrTensor, params: HazeParams) -> Tensor:
    """
    用大气散射模型给清晰图像加雾

    参数:
        clear: 清晰图像 J，(3, H, W)，取值 [0, 1]
        params (HazeParams): 大气光、散射系数、深度图

    返回:
        Tensor: 有雾图像 I = J·t + A·(1 − t)，每个像素是 J 与 A 的凸组合

    示例:
        J = 0.2, A = 0.8, β·d = ln 2（t = 0.5）时像素值为 0.5
    """
    clear_array = _array(clear)
    if clear_array.ndim != 3:
        raise DimensionError(f"清晰图像应为 (C, H, W)，实际 {clear_array.shape}", axis="rank")
    if params.depth.shape[-2:] != clear_array.shape[-2:]:
        raise DimensionError(f"深度图 {params.depth.shape} 与图像 {clear_array.shape} 尺寸不一致",
                             axis="height/width")
    if params.beta == 0:
        # t ≡ 1，逐位返回原图
        return clear if isinstance(clear, Tensor) else _tensor(clear_array, clear)
    t = params.transmission().reshape(1, *clear_array.shape[-2:])
    airlight = params.atmospheric_light.reshape(-1, 1, 1)
    if airlight.shape[0] not in (1, clear_array.shape[0]):
        raise DimensionError(f"大气光通道数 {airlight.shape[0]} 与图像通道数不一致", axis="channels")
    hazy = clear_array * t + airlight * (1.0 - t)
    return _tensor(hazy, clear)


def make_depth_map(family: str, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """
    生成合成深度图

    参数:
        family (str): 'ramp' 水平线性斜坡 / 'radial' 径向渐变 / 'step' 两平面阶跃
        height, width (int): 尺寸
        rng: 随机数生成器

    返回:
        np.ndarray: (1, H, W)，取值 [0, MAX_DEPTH]
    """
    if family == "ramp":
        row = np.linspace(0.0, MAX_DEPTH, width)
        depth = np.broadcast_to(row, (height, width)).copy()
    elif family == "radial":
        cy, cx = rng.uniform(0.25, 0.75) * height, rng.uniform(0.25, 0.75) * width
        yy, xx = np.mgrid[0:height, 0:width]
        distance = np.hypot(yy - cy, xx - cx)
        depth = MAX_DEPTH * distance / distance.max()
    elif family == "step":
        split = int(rng.integers(width // 4, 3 * width // 4 + 1))
        near, far = rng.uniform(0.1, 0.5), rng.uniform(1.2, MAX_DEPTH)
        depth = np.full((height, width), near)
        depth[:, split:] = far
    else:
        raise ParameterError(f"未知的深度图类型: {family}，可选 {DEPTH_FAMILIES}")
    return depth.reshape(1, height, width)


def sample_haze_params(depth: np.ndarray, rng: np.random.Generator) -> HazeParams:
    """按 β ~ U[0.6, 1.8]、A ~ U[0.7, 1.0] 抽取合成参数（大气光三通道相同）"""
    beta = float(rng.uniform(0.6, 1.8))
    airlight = float(rng.uniform(0.7, 1.0))
    return HazeParams(atmospheric_light=np.full(3, airlight), beta=beta, depth=depth)


# ==================== 雾浓度估计 ====================

def dark_channel(x: ArrayOrTensor, window: int) -> Tensor:
    """
    暗通道

    每个像素取所有通道、window×window 邻域内的最小值，边界复制填充。

    参数:
        x: (C, H, W)
        window (int): 正奇数

    返回:
        Tensor: (1, H, W)
    """
    if window < 1 or window % 2 == 0:
        raise ParameterError(f"暗通道窗口必须是正奇数: {window}")
    array = _array(x)
    channel_min = array.min(axis=0)
    dark = minimum_filter(channel_min, size=window, mode="nearest")
    return _tensor(dark[None], x)


def estimate_atmospheric_light(features: ArrayOrTensor, dark: ArrayOrTensor) -> np.ndarray:
    """
    大气光估计（ALE）

    取暗通道最亮的 0.1% 像素（至少 1 个），对这些位置的特征值按通道求平均。
    并列时按像素扫描顺序优先。

    返回:
        np.ndarray: 长度 C 的向量
    """
    feature_array = _array(features)
    dark_array = _array(dark)
    if feature_array.shape[1:] != dark_array.shape[-2:]:
        raise DimensionError(f"特征 {feature_array.shape} 与暗通道 {dark_array.shape} 空间尺寸不一致",
                             axis="height/width")
    flat_dark = dark_array.reshape(-1)
    count = max(1, int(flat_dark.size * BRIGHTEST_FRACTION))
    brightest = np.argsort(-flat_dark, kind="stable")[:count]
    pixels = feature_array.reshape(feature_array.shape[0], -1)[:, brightest]
    return pixels.mean(axis=1)


def transmission_map(f_tilde: ArrayOrTensor, a_hat: np.ndarray, omega: float = OMEGA,
                     window: int = FEATURE_WINDOW, a_floor: float = A_FLOOR) -> Tensor:
    """
    初始透射率 T = 1 − ω·DCG(F̃ ⊙ A⁻¹)，截断到 [0, 1]

    参数:
        f_tilde: 通道复制后的特征 F̃，(C, H, W)，非负
        a_hat: 大气光估计，长度 C；小于 a_floor 的分量先截断再求倒数
        omega (float): 保留系数，默认 0.95
        window (int): 暗通道窗口
    """
    array = _array(f_tilde)
    a_hat = np.asarray(a_hat, dtype=np.float64).reshape(-1)
    if a_hat.size not in (1, array.shape[0]):
        raise DimensionError(f"大气光长度 {a_hat.size} 与通道数 {array.shape[0]} 不一致", axis="channels")
    if np.any(a_hat < a_floor):
        logging.debug(f"大气光分量低于下限 {a_floor}，已截断: {a_hat}")
    guarded = np.maximum(a_hat, a_floor).reshape(-1, 1, 1)
    dark = dark_channel(array / guarded, window).data.astype(np.float64)
    transmission = np.clip(1.0 - omega * dark, 0.0, 1.0)
    return _tensor(transmission, f_tilde)


def box_mean(image: np.ndarray, radius: int) -> np.ndarray:
    """
    盒式均值滤波，窗口边长 2·radius + 1

    边界处窗口截断到图像内部，按实际像素数归一化。用积分图实现，
    复杂度与半径无关。
    """
    height, width = image.shape
    integral = np.zeros((height + 1, width + 1), dtype=np.float64)
    integral[1:, 1:] = image.cumsum(axis=0).cumsum(axis=1)
    r0 = np.clip(np.arange(height) - radius, 0, height)
    r1 = np.clip(np.arange(height) + radius + 1, 0, height)
    c0 = np.clip(np.arange(width) - radius, 0, width)
    c1 = np.clip(np.arange(width) + radius + 1, 0, width)
    sums = (integral[r1][:, c1] - integral[r0][:, c1]
            - integral[r1][:, c0] + integral[r0][:, c0])
    counts = (r1 - r0)[:, None] * (c1 - c0)[None, :]
    return sums / counts


def guided_filter(guide: ArrayOrTensor, source: ArrayOrTensor,
                  radius: int = GUIDED_RADIUS, epsilon: float = GUIDED_EPS) -> Tensor:
    """
    导向滤波

    局部线性模型:
        a = cov(g, p) / (var(g) + ε)
        b = mean(p) − a·mean(g)
        q = mean(a)·g + mean(b)

    参数:
        guide: 引导图 (1, H, W)
        source: 待滤波图 (1, H, W)
        radius (int): 盒式窗口半径，≥ 1
        epsilon (float): 正则项，≥ 0

    返回:
        Tensor: 滤波结果 (1, H, W)
    """
    if radius < 1:
        raise ParameterError(f"导向滤波半径必须 ≥ 1: {radius}")
    if epsilon < 0:
        raise ParameterError(f"导向滤波 ε 不能为负: {epsilon}")
    g = _array(guide).reshape(_array(guide).shape[-2:])
    p = _array(source).reshape(_array(source).shape[-2:])
    if g.shape != p.shape:
        raise DimensionError(f"引导图 {g.shape} 与输入 {p.shape} 尺寸不一致", axis="height/width")

    mean_g = box_mean(g, radius)
    mean_p = box_mean(p, radius)
    cov_gp = box_mean(g * p, radius) - mean_g * mean_p
    var_g = box_mean(g * g, radius) - mean_g * mean_g
    denominator = var_g + epsilon
    # ε = 0 且窗口方差为 0 时取 a = 0（退化为局部均值）
    a = np.divide(cov_gp, denominator, out=np.zeros_like(cov_gp), where=denominator != 0)
    b = mean_p - a * mean_g
    q = box_mean(a, radius) * g + box_mean(b, radius)
    return _tensor(q[None], source)


def haze_density(visible_features: ArrayOrTensor, window: int = FEATURE_WINDOW,
                 omega: float = OMEGA, a_floor: float = A_FLOOR,
                 radius: int = GUIDED_RADIUS, epsilon: float = GUIDED_EPS) -> HazeEstimate:
    """
    雾浓度估计（HDE）

    参数:
        visible_features: 可见光特征 F_vi (C, H, W)，也可以直接传入有雾图像
        window: 暗通道窗口（特征分辨率 7，图像分辨率 15）
        omega, a_floor, radius, epsilon: 见模块说明

    返回:
        HazeEstimate: T、T′、H 与大气光估计

    处理流程:
        1. 通道平均池化得到 (1, H, W) 灰度图，截断负值，复制回 C 通道得到 F̃
        2. 计算 F̃ 的暗通道并估计大气光 A
        3. T = 1 − ω·DCG(F̃ ⊙ A⁻¹)
        4. 以灰度图为引导对 T 做导向滤波，截断到 [0, 1] 得到 T′
        5. H = 1 − T′
    """
    features = _array(visible_features)
    if not np.all(np.isfinite(features)):
        raise NumericError("可见光特征含非有限值")
    channels = features.shape[0]
    pooled = np.maximum(features.mean(axis=0, keepdims=True), 0.0)
    f_tilde = np.repeat(pooled, channels, axis=0)

    dark = dark_channel(f_tilde, window)
    a_hat = estimate_atmospheric_light(f_tilde, dark)
    transmission = transmission_map(f_tilde, a_hat, omega, window, a_floor).data.astype(np.float64)
    refined = np.clip(guided_filter(pooled, transmission, radius, epsilon).data.astype(np.float64), 0.0, 1.0)
    density = 1.0 - refined

    like = visible_features
    return HazeEstimate(
        transmission=_tensor(transmission, like),
        refined=_tensor(refined, like),
        density=_tensor(density, like),
        atmospheric_light=a_hat,
        omega=omega,
    )
