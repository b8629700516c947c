"""
融合质量评估模块

以无雾的清晰源图像作为参考，计算四项融合指标:
    Q_MI   互信息之和 MI(F, A) + MI(F, B)（未归一化，自然对数）
    Q_AB/F 基于梯度的边缘保持度，取值 [0, 1]（sigmoid 归一化；q_abf_raw 为原始常数形式）
    Q_SCD  差分相关之和 r(F − B, A) + r(F − A, B)，取值 [−2, 2]
    Q_SF   空间频率 sqrt(RF² + CF²)
另外提供去雾质量 PSNR。

约定:
    - 彩色图像用 BT.601 亮度权重 (0.299, 0.587, 0.114) 转为灰度
    - Q_MI 在 8 位灰度上统计 256 级联合直方图
    - 评估报告中的 Q_SF 按 0-255 灰度尺度计算
    - Q_VIF、Q_CV、Q_PI、Q_NIQE 依赖感知模型数据，不实现，报告中输出 n/a

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy import ndimage

from .data_models import MetricRow
from .errors import DimensionError

BT601 = np.array([0.299, 0.587, 0.114])

# Q_AB/F 的 sigmoid 参数（边缘强度 Γg/kg/σg，方向 Γa/ka/σa），取自该指标的原始定义
QABF_KG = -15.0
QABF_SIGMA_G = 0.5
QABF_KA = -22.0
QABF_SIGMA_A = 0.8
QABF_GAMMA_G = 0.9994
QABF_GAMMA_A = 0.9879

_SOBEL_X = np.array([[-1.0, 0.0, 1.0],
                     [-2.0, 0.0, 2.0],
                     [-1.0, 0.0, 1.0]])
_SOBEL_Y = _SOBEL_X.T.copy()


def to_gray(image) -> np.ndarray:
    """
    转为灰度 (H, W)

    参数:
        image: (3, H, W)、(1, H, W) 或 (H, W)，数组或张量
    """
    data = np.asarray(getattr(image, "data", image), dtype=np.float64)
    if data.ndim == 2:
        return data
    if data.ndim == 3 and data.shape[0] == 1:
        return data[0]
    if data.ndim == 3 and data.shape[0] == 3:
        return np.tensordot(BT601, data, axes=1)
    raise DimensionError(f"无法转为灰度的形状: {data.shape}", axis="channels")


def to_uint8(gray: np.ndarray) -> np.ndarray:
    """[0, 1] 灰度 → 8 位整数，四舍五入"""
    return np.rint(np.clip(gray, 0.0, 1.0) * 255.0).astype(np.uint8)


def _check_sizes(*images: np.ndarray) -> None:
    shape = images[0].shape
    for image in images[1:]:
        if image.shape != shape:
            raise DimensionError(f"评估图像尺寸不一致: {shape} 与 {image.shape}", axis="height/width")


# ==================== Q_MI ====================

def entropy(gray_u8: np.ndarray, bins: int = 256) -> float:
    """灰度直方图熵（自然对数）"""
    counts = np.bincount(gray_u8.ravel().astype(np.int64), minlength=bins).astype(np.float64)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def mutual_information(a_u8: np.ndarray, b_u8: np.ndarray, bins: int = 256) -> float:
    """
    两幅 8 位图像的互信息（自然对数）

    任一图像为常数时熵为 0，互信息也为 0。
    """
    a = a_u8.ravel().astype(np.int64)
    b = b_u8.ravel().astype(np.int64)
    if bins != 256:
        a = a * bins // 256
        b = b * bins // 256
    joint = np.bincount(a * bins + b, minlength=bins * bins).reshape(bins, bins).astype(np.float64)
    joint /= joint.sum()
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    nz = joint > 0
    outer = np.outer(pa, pb)
    return float(max((joint[nz] * np.log(joint[nz] / outer[nz])).sum(), 0.0))


def q_mi(fused, src_a, src_b, bins: int = 256) -> float:
    """Q_MI = MI(F, A) + MI(F, B)"""
    f, a, b = (to_uint8(to_gray(x)) for x in (fused, src_a, src_b))
    _check_sizes(f, a, b)
    return mutual_information(f, a, bins) + mutual_information(f, b, bins)


# ==================== Q_AB/F ====================

def _sobel(gray: np.ndarray):
    """
    Sobel 梯度强度与方向

    方向为 arctan(gy / gx)；gx = 0 时取 π/2，不区分 gy 的正负（gy = 0 时也一样）。
    """
    sx = ndimage.correlate(gray, _SOBEL_X, mode="nearest")
    sy = ndimage.correlate(gray, _SOBEL_Y, mode="nearest")
    strength = np.sqrt(sx * sx + sy * sy)
    safe = np.where(sx == 0, 1.0, sx)
    orientation = np.where(sx == 0, math.pi / 2, np.arctan(sy / safe))
    return strength, orientation


def _sigmoid(x: np.ndarray, gamma: float, k: float, sigma: float) -> np.ndarray:
    return gamma / (1.0 + np.exp(k * (x - sigma)))


def _normalized_sigmoid(x: np.ndarray, k: float, sigma: float) -> np.ndarray:
    # 仿射归一化: 输入 0 对应 0，输入 1 对应 1
    low = _sigmoid(0.0, 1.0, k, sigma)
    high = _sigmoid(1.0, 1.0, k, sigma)
    return (_sigmoid(x, 1.0, k, sigma) - low) / (high - low)


def _relative_strength(g_src: np.ndarray, g_f: np.ndarray) -> np.ndarray:
    high = np.maximum(g_src, g_f)
    low = np.minimum(g_src, g_f)
    return np.where(high > 0, low / np.where(high > 0, high, 1.0), 1.0)


def _preservation(g_src, a_src, g_f, a_f, normalized: bool = True) -> np.ndarray:
    """
    逐像素边缘保持度 Q_g · Q_a

    normalized=True 时两个 sigmoid 做仿射归一化并把相对方向截断到 [0, 1]，
    完全相同的边缘得 1、完全丢失的边缘得 0；否则使用原始常数 Γg、Γa。
    方向来自 _sobel，gx = 0 的像素一律取 π/2，与 gy 的正负无关。
    """
    strength = _relative_strength(g_src, g_f)
    orientation = 1.0 - np.abs(a_src - a_f) / (math.pi / 2)
    if normalized:
        q_g = _normalized_sigmoid(strength, QABF_KG, QABF_SIGMA_G)
        q_a = _normalized_sigmoid(np.clip(orientation, 0.0, 1.0), QABF_KA, QABF_SIGMA_A)
    else:
        q_g = _sigmoid(strength, QABF_GAMMA_G, QABF_KG, QABF_SIGMA_G)
        q_a = _sigmoid(orientation, QABF_GAMMA_A, QABF_KA, QABF_SIGMA_A)
    return q_g * q_a


def _edge_score(fused, src_a, src_b, normalized: bool) -> float:
    f, a, b = (to_gray(x) for x in (fused, src_a, src_b))
    _check_sizes(f, a, b)
    g_f, a_f = _sobel(f)
    g_a, o_a = _sobel(a)
    g_b, o_b = _sobel(b)
    weight = g_a.sum() + g_b.sum()
    if weight <= 0:
        return 0.0
    score = ((_preservation(g_a, o_a, g_f, a_f, normalized) * g_a).sum()
             + (_preservation(g_b, o_b, g_f, a_f, normalized) * g_b).sum())
    return float(score / weight)


def q_abf(fused, src_a, src_b) -> float:
    """
    Q_AB/F 边缘保持度（归一化形式）

    以源图像梯度强度为权重，对融合图像相对于每个源图像的边缘强度保持与
    方向保持做加权平均。两个源图像都没有梯度时定义为 0。

    与 q_abf_raw 的区别只在 sigmoid: 这里做了仿射归一化，完美融合得 1，
    常数融合图像得 0；原始常数下完美融合约为 0.975。
    """
    value = _edge_score(fused, src_a, src_b, normalized=True)
    if value < 0.0 or value > 1.0:
        logging.warning(f"Q_AB/F 超出 [0, 1]: {value}，已截断")
        value = min(max(value, 0.0), 1.0)
    return value


def q_abf_raw(fused, src_a, src_b) -> float:
    """Q_AB/F 原始形式: Γ / (1 + exp(k·(x − σ)))，Γg = 0.9994，Γa = 0.9879，方向不截断"""
    return _edge_score(fused, src_a, src_b, normalized=False)


# ==================== Q_SCD ====================

def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denominator = math.sqrt(float((xc * xc).sum()) * float((yc * yc).sum()))
    if denominator == 0.0:
        return 0.0
    return float((xc * yc).sum() / denominator)


def q_scd(fused, src_a, src_b) -> float:
    """Q_SCD = r(F − B, A) + r(F − A, B)；零方差项按 0 计"""
    f, a, b = (to_gray(x) for x in (fused, src_a, src_b))
    _check_sizes(f, a, b)
    return _pearson(f - b, a) + _pearson(f - a, b)


# ==================== Q_SF ====================

def q_sf(image) -> float:
    """
    空间频率

    RF 为水平相邻像素差的均方根，CF 为垂直相邻像素差的均方根，
    均值按差分个数计算。
    """
    gray = to_gray(image)
    row_diff = np.diff(gray, axis=1)
    col_diff = np.diff(gray, axis=0)
    rf = math.sqrt(float((row_diff ** 2).mean())) if row_diff.size else 0.0
    cf = math.sqrt(float((col_diff ** 2).mean())) if col_diff.size else 0.0
    return math.sqrt(rf * rf + cf * cf)


# ==================== PSNR ====================

def psnr(a, b, peak: float = 1.0) -> float:
    """峰值信噪比（dB）；两幅图像相同时为 +inf"""
    x = np.asarray(getattr(a, "data", a), dtype=np.float64)
    y = np.asarray(getattr(b, "data", b), dtype=np.float64)
    _check_sizes(x, y)
    mse = float(((x - y) ** 2).mean())
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(peak * peak / mse)


def evaluate_triple(fused, ir, vis_gt, name: str = "", dehazed: Optional[np.ndarray] = None) -> MetricRow:
    """
    评估一组 (融合图像, 红外, 清晰可见光)

    参数:
        fused: 融合图像 (3, H, W)
        ir: 红外图像 (1, H, W)
        vis_gt: 无雾可见光参考 (3, H, W)
        name (str): 图像名称
        dehazed: 可选的去雾中间结果，提供时额外计算 PSNR(dehazed, vis_gt)
    """
    row = MetricRow(
        name=name,
        q_mi=q_mi(fused, ir, vis_gt),
        q_abf=q_abf(fused, ir, vis_gt),
        q_scd=q_scd(fused, ir, vis_gt),
        q_sf=q_sf(to_gray(fused) * 255.0),
        psnr=None if dehazed is None else psnr(dehazed, vis_gt),
    )
    logging.debug(f"评估 {name}: {row.values()}")
    return row
