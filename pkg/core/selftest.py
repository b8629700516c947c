"""
自检模块

梯度校验套件与自检套件，供 gradcheck / selftest 子命令和测试使用。

梯度校验（64 位精度）覆盖:
    conv2d、逐通道卷积、softmax、GAP、CAP、双线性缩放、层归一化、GELU 门控、
    Transformer 块、提示嵌入、去雾头，以及 ℓ₁、ℓ_∇、ℓ_int、ℓ_total
每项对被校验的张量乘以固定的随机权重再求和，使每个输出元素都参与校验。

自检覆盖:
    1. 梯度正确性（最大相对误差 < 1e-4）
    2. 基础算子与朴素循环实现一致（1e-12，暗通道与导向滤波 1e-9）
    3. 雾霾物理恒等式
    4. 合成场景上雾浓度与真值的相关性（≥ 0.8）
    5. 混合公式恒等式
    6. 融合指标的合理性

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
import math
import time
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy import ndimage

from . import functional as F
from . import haze_model, metrics
from .data_models import CheckResult, HazeParams
from .datasets import synthesize_suite
from .gradcheck import finite_diff_check
from .layers import Conv2d
from .losses import (SOBEL_X, SOBEL_Y, LossConfig, gradient_loss, intensity_loss,
                     l1_restoration, total_loss)
from .prompt import PromptEmbedBlock
from .restoration import dehaze_head, haze_guided_blend
from .tensor import Tensor, precision
from .transformer import TransformerBlock

GRAD_TOLERANCE = 1e-4
ORACLE_TOLERANCE = 1e-12
FILTER_TOLERANCE = 1e-9
KINK_MARGIN = 1e-3
HDE_MIN_CORRELATION = 0.8

GradCase = Callable[[np.random.Generator], Tuple[Callable[[], Tensor], Sequence[Tensor]]]


def _leaf(rng: np.random.Generator, *shape) -> Tensor:
    return Tensor(rng.normal(size=shape), requires_grad=True)


def _projector(rng: np.random.Generator, shape) -> Callable[[Tensor], Tensor]:
    weights = Tensor(rng.normal(size=shape))
    return lambda out: (out * weights).sum()


# ==================== 梯度校验用例 ====================

def _case_conv2d(rng):
    x, w, b = _leaf(rng, 2, 5, 5), _leaf(rng, 3, 2, 3, 3), _leaf(rng, 3)
    project = _projector(rng, (3, 5, 5))
    return (lambda: project(F.conv2d(x, w, b, 1, 1))), [x, w, b]


def _case_depthwise(rng):
    x, w = _leaf(rng, 3, 5, 5), _leaf(rng, 3, 3, 3)
    project = _projector(rng, (3, 5, 5))
    return (lambda: project(F.depthwise_conv2d(x, w, None, 1))), [x, w]


def _case_softmax(rng):
    x = _leaf(rng, 4, 3, 3)
    project = _projector(rng, (4, 3, 3))
    return (lambda: project(F.softmax(x, axis=0))), [x]


def _case_gap(rng):
    x = _leaf(rng, 3, 4, 4)
    project = _projector(rng, (3,))
    return (lambda: project(F.global_average_pool(x))), [x]


def _case_cap(rng):
    x = _leaf(rng, 3, 4, 4)
    project = _projector(rng, (3, 4, 4))
    return (lambda: project(F.replicate_channels(F.channel_average_pool(x), 3))), [x]


def _case_resize(rng):
    x = _leaf(rng, 2, 4, 5)
    project = _projector(rng, (2, 7, 3))
    return (lambda: project(F.bilinear_resize(x, 7, 3))), [x]


def _case_layer_norm(rng):
    x, w = _leaf(rng, 3, 4, 4), _leaf(rng, 3)
    project = _projector(rng, (3, 4, 4))
    return (lambda: project(F.layer_norm(x, w))), [x, w]


def _case_gelu_gate(rng):
    a, b = _leaf(rng, 2, 4, 4), _leaf(rng, 2, 4, 4)
    project = _projector(rng, (2, 4, 4))
    return (lambda: project(F.gelu(a) * b)), [a, b]


def _case_transformer(rng):
    block = TransformerBlock(4, 2, 2.66, rng)
    x = _leaf(rng, 4, 5, 5)
    project = _projector(rng, (4, 5, 5))
    return (lambda: project(block(x))), [x] + block.parameters()


def _case_prompt_embed(rng):
    peb = PromptEmbedBlock(2, 1, 2.66, rng)
    feature, prompt = _leaf(rng, 2, 4, 4), _leaf(rng, 2, 4, 4)
    project = _projector(rng, (2, 4, 4))
    return (lambda: project(peb(feature, prompt))), [feature, prompt] + peb.parameters()


def _case_dehaze_head(rng):
    head = Conv2d(4, 3, 3, rng)
    x = _leaf(rng, 4, 5, 5)
    project = _projector(rng, (3, 5, 5))
    return (lambda: project(dehaze_head(x, head))), [x, head.weight, head.bias]


def _sobel_parts(image: np.ndarray):
    gx = np.stack([ndimage.correlate(c, SOBEL_X, mode="nearest") for c in image])
    gy = np.stack([ndimage.correlate(c, SOBEL_Y, mode="nearest") for c in image])
    return gx, gy


def _kink_distance(fused, dehazed, ir, gt) -> float:
    """输入到各损失项绝对值折点的最小距离"""
    fx, fy = _sobel_parts(fused)
    ix, iy = _sobel_parts(np.broadcast_to(ir, gt.shape))
    gx, gy = _sobel_parts(gt)
    grad_target = np.maximum(np.abs(ix) + np.abs(iy), np.abs(gx) + np.abs(gy))
    distances = [
        np.abs(dehazed - gt),
        np.abs(fused - np.maximum(ir, gt)),
        np.abs(fx), np.abs(fy),
        np.abs(np.abs(fx) + np.abs(fy) - grad_target),
    ]
    return float(min(d.min() for d in distances))


def _images(rng, size=6, margin=KINK_MARGIN):
    # 重新抽样直到远离 |·| 的折点，中心差分才不会跨过折点
    while True:
        arrays = [rng.uniform(0.0, 1.0, size=shape)
                  for shape in ((3, size, size), (3, size, size), (1, size, size), (3, size, size))]
        if _kink_distance(*arrays) > margin:
            break
    fused, dehazed, ir, gt = arrays
    return (Tensor(fused, requires_grad=True), Tensor(dehazed, requires_grad=True),
            Tensor(ir), Tensor(gt))


def _case_l1(rng):
    _, dehazed, _, gt = _images(rng)
    return (lambda: l1_restoration(dehazed, gt)), [dehazed]


def _case_gradient_loss(rng):
    fused, _, ir, gt = _images(rng)
    return (lambda: gradient_loss(fused, ir, gt)), [fused]


def _case_intensity_loss(rng):
    fused, _, ir, gt = _images(rng)
    return (lambda: intensity_loss(fused, ir, gt)), [fused]


def _case_total_loss(rng):
    fused, dehazed, ir, gt = _images(rng)
    config = LossConfig(alpha=float(rng.uniform(0.5, 2.0)))
    return (lambda: total_loss(fused, dehazed, ir, gt, config)), [fused, dehazed]


GRAD_CASES: Dict[str, GradCase] = {
    "conv2d": _case_conv2d,
    "depthwise_conv2d": _case_depthwise,
    "softmax": _case_softmax,
    "global_average_pool": _case_gap,
    "channel_average_pool": _case_cap,
    "bilinear_resize": _case_resize,
    "layer_norm": _case_layer_norm,
    "gelu_gate": _case_gelu_gate,
    "transformer_block": _case_transformer,
    "prompt_embed": _case_prompt_embed,
    "dehaze_head": _case_dehaze_head,
    "l1_restoration": _case_l1,
    "gradient_loss": _case_gradient_loss,
    "intensity_loss": _case_intensity_loss,
    "total_loss": _case_total_loss,
}


def run_gradcheck_suite(seeds: Sequence[int] = range(3), epsilon: float = 1e-5,
                        max_entries: int = 8) -> List[CheckResult]:
    """
    运行梯度校验套件

    参数:
        seeds: 随机种子列表，每个用例在每个种子下各校验一次
        epsilon (float): 中心差分步长
        max_entries (int): 每个张量最多抽查的元素个数

    返回:
        List[CheckResult]: 每个用例一项，value 为所有种子下的最大相对误差
    """
    results = []
    with precision(np.float64):
        for name, case in GRAD_CASES.items():
            worst = 0.0
            for seed in seeds:
                rng = np.random.default_rng(seed)
                f, params = case(rng)
                worst = max(worst, finite_diff_check(f, params, epsilon, max_entries, rng))
            passed = worst < GRAD_TOLERANCE
            results.append(CheckResult(name=name, passed=passed, value=worst))
            logging.info(f"梯度校验 {name}: 最大相对误差 {worst:.3e} {'通过' if passed else '失败'}")
    return results


# ==================== 朴素循环参考实现 ====================

def naive_conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, padding: int) -> np.ndarray:
    in_c, height, width = x.shape
    out_c, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    out_h, out_w = height + 2 * padding - k + 1, width + 2 * padding - k + 1
    out = np.zeros((out_c, out_h, out_w))
    for o in range(out_c):
        for i in range(out_h):
            for j in range(out_w):
                out[o, i, j] = (xp[:, i:i + k, j:j + k] * w[o]).sum() + b[o]
    return out


def naive_softmax(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    for i in range(x.shape[1]):
        for j in range(x.shape[2]):
            column = np.exp(x[:, i, j] - x[:, i, j].max())
            out[:, i, j] = column / column.sum()
    return out


def naive_resize(x: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    channels, height, width = x.shape
    out = np.zeros((channels, new_h, new_w))
    for a in range(new_h):
        sy = max((a + 0.5) * height / new_h - 0.5, 0.0)
        y0 = min(int(math.floor(sy)), height - 1)
        y1 = min(y0 + 1, height - 1)
        fy = sy - y0
        for c in range(new_w):
            sx = max((c + 0.5) * width / new_w - 0.5, 0.0)
            x0 = min(int(math.floor(sx)), width - 1)
            x1 = min(x0 + 1, width - 1)
            fx = sx - x0
            out[:, a, c] = ((1 - fy) * ((1 - fx) * x[:, y0, x0] + fx * x[:, y0, x1])
                            + fy * ((1 - fx) * x[:, y1, x0] + fx * x[:, y1, x1]))
    return out


def naive_dark_channel(x: np.ndarray, window: int) -> np.ndarray:
    _, height, width = x.shape
    r = window // 2
    out = np.zeros((1, height, width))
    for i in range(height):
        for j in range(width):
            rows = np.clip(np.arange(i - r, i + r + 1), 0, height - 1)
            cols = np.clip(np.arange(j - r, j + r + 1), 0, width - 1)
            out[0, i, j] = x[:, rows][:, :, cols].min()
    return out


def naive_guided_filter(g: np.ndarray, p: np.ndarray, radius: int, eps: float) -> np.ndarray:
    height, width = g.shape
    a = np.zeros_like(g)
    b = np.zeros_like(g)

    def window(i, j):
        return (slice(max(i - radius, 0), min(i + radius + 1, height)),
                slice(max(j - radius, 0), min(j + radius + 1, width)))

    for i in range(height):
        for j in range(width):
            gw, pw = g[window(i, j)], p[window(i, j)]
            var = (gw * gw).mean() - gw.mean() ** 2
            cov = (gw * pw).mean() - gw.mean() * pw.mean()
            a[i, j] = cov / (var + eps) if var + eps != 0 else 0.0
            b[i, j] = pw.mean() - a[i, j] * gw.mean()
    out = np.zeros_like(g)
    for i in range(height):
        for j in range(width):
            out[i, j] = a[window(i, j)].mean() * g[i, j] + b[window(i, j)].mean()
    return out


def _max_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))))


def run_oracle_suite(instances: int = 10, seed: int = 0, max_size: int = 32) -> List[CheckResult]:
    """基础算子与朴素循环实现的一致性"""
    rng = np.random.default_rng(seed)
    worst = {name: 0.0 for name in ("conv2d", "softmax", "pooling", "resize", "dark_channel", "guided_filter")}
    with precision(np.float64):
        for _ in range(instances):
            channels = int(rng.integers(1, 9))
            height, width = (int(v) for v in rng.integers(3, max_size + 1, size=2))
            x = rng.normal(size=(channels, height, width))

            out_c = int(rng.integers(1, 5))
            w = rng.normal(size=(out_c, channels, 3, 3))
            b = rng.normal(size=out_c)
            ours = F.conv2d(Tensor(x), Tensor(w), Tensor(b), 1, 1).data
            worst["conv2d"] = max(worst["conv2d"], _max_error(ours, naive_conv2d(x, w, b, 1)))

            worst["softmax"] = max(worst["softmax"], _max_error(F.softmax(Tensor(x), 0).data, naive_softmax(x)))

            gap = F.global_average_pool(Tensor(x)).data
            cap = F.channel_average_pool(Tensor(x)).data
            gap_oracle = np.array([sum(x[c].ravel().tolist()) / (height * width) for c in range(channels)])
            cap_oracle = sum(x[c] for c in range(channels))[None] / channels
            worst["pooling"] = max(worst["pooling"], _max_error(gap, gap_oracle), _max_error(cap, cap_oracle))

            new_h, new_w = (int(v) for v in rng.integers(1, max_size + 1, size=2))
            worst["resize"] = max(worst["resize"], _max_error(F.bilinear_resize(Tensor(x), new_h, new_w).data,
                                                              naive_resize(x, new_h, new_w)))

            window = int(rng.choice([1, 3, 5, 7]))
            worst["dark_channel"] = max(worst["dark_channel"], _max_error(
                haze_model.dark_channel(x, window).data, naive_dark_channel(x, window)))

            g, p = rng.uniform(size=(height, width)), rng.uniform(size=(height, width))
            radius = int(rng.integers(1, 4))
            worst["guided_filter"] = max(worst["guided_filter"], _max_error(
                haze_model.guided_filter(g[None], p[None], radius, 1e-4).data[0],
                naive_guided_filter(g, p, radius, 1e-4)))

    results = []
    for name, value in worst.items():
        tolerance = FILTER_TOLERANCE if name in ("dark_channel", "guided_filter") else ORACLE_TOLERANCE
        results.append(CheckResult(name=f"oracle_{name}", passed=value <= tolerance, value=value))
    return results


# ==================== 物理恒等式与雾浓度 ====================

def run_haze_identities(seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    clear = rng.uniform(size=(3, 16, 16))
    depth = rng.uniform(0.0, 2.0, size=(1, 16, 16))
    airlight = np.array([0.8, 0.85, 0.9])
    results = []

    identity = haze_model.synthesize_haze(clear, HazeParams(airlight, 0.0, depth)).data
    results.append(CheckResult("haze_beta_zero_identity", bool(np.array_equal(identity, clear))))

    # 极大深度使 t 下溢为 0
    opaque = haze_model.synthesize_haze(clear, HazeParams(airlight, 1.0, np.full((1, 16, 16), 1e4))).data
    error = _max_error(opaque, np.broadcast_to(airlight.reshape(3, 1, 1), opaque.shape))
    results.append(CheckResult("haze_pure_airlight", error <= ORACLE_TOLERANCE, error))

    a_hat = np.array([0.7, 0.8, 0.9])
    t_zero = haze_model.transmission_map(np.zeros((3, 8, 8)), a_hat, 0.95, 7).data
    error = _max_error(t_zero, 1.0)
    results.append(CheckResult("transmission_zero_features", error <= ORACLE_TOLERANCE, error))

    t_air = haze_model.transmission_map(np.broadcast_to(a_hat.reshape(3, 1, 1), (3, 8, 8)), a_hat, 0.95, 7).data
    error = _max_error(t_air, 0.05)
    results.append(CheckResult("transmission_airlight_features", error <= ORACLE_TOLERANCE, error))

    estimate = haze_model.haze_density(rng.uniform(size=(4, 12, 12)))
    error = _max_error(estimate.density.data + estimate.refined.data, 1.0)
    results.append(CheckResult("density_complements_transmission", error <= ORACLE_TOLERANCE, error))
    return results


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    a, b = a - a.mean(), b - b.mean()
    denominator = math.sqrt(float((a * a).sum() * (b * b).sum()))
    return float((a * b).sum() / denominator) if denominator else 0.0


def run_hde_fidelity(scenes: int = 20, size: int = 128, seed: int = 0) -> List[CheckResult]:
    """合成场景上估计雾浓度与真值 1 − exp(−β·d) 的 Pearson 相关"""
    rng = np.random.default_rng(seed)
    correlations, slowest = [], 0.0
    for scene in synthesize_suite(rng, scenes, size):
        start = time.perf_counter()
        estimate = haze_model.haze_density(scene.hazy, window=haze_model.IMAGE_WINDOW)
        slowest = max(slowest, time.perf_counter() - start)
        density = F.bilinear_resize(Tensor(estimate.density.data, dtype=np.float64), size, size).data
        correlations.append(pearson(density, scene.true_density))
    worst = min(correlations)
    logging.info(f"雾浓度相关性: 最小 {worst:.4f}, 平均 {np.mean(correlations):.4f}, 单场景最长 {slowest:.3f}s")
    return [CheckResult("hde_correlation", worst >= HDE_MIN_CORRELATION, worst,
                        f"{scenes} 个场景, 单场景最长 {slowest:.3f}s")]


def run_blend_identities(seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    with precision(np.float64):
        f_hat_ir, f_vi = Tensor(rng.normal(size=(4, 6, 6))), Tensor(rng.normal(size=(4, 6, 6)))
        cases = {
            "blend_h0": (0.0, 2.0 * f_vi.data),
            "blend_h1": (1.0, f_hat_ir.data + f_vi.data),
            "blend_h_half": (0.5, 0.5 * f_hat_ir.data + 1.5 * f_vi.data),
        }
        for name, (value, expected) in cases.items():
            density = Tensor(np.full((1, 6, 6), value))
            error = _max_error(haze_guided_blend(f_hat_ir, f_vi, density).data, expected)
            results.append(CheckResult(name, error <= 1e-12, error))
    return results


def run_metric_sanity(seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    image = rng.uniform(size=(3, 32, 32))
    results = []

    value = metrics.q_abf(image, image, image)
    results.append(CheckResult("q_abf_perfect", abs(value - 1.0) <= 1e-6, value))

    # 原始常数下每个有边缘的像素都取两条 sigmoid 在 1 处的值
    expected = (metrics.QABF_GAMMA_G / (1.0 + math.exp(metrics.QABF_KG * (1.0 - metrics.QABF_SIGMA_G)))
                * metrics.QABF_GAMMA_A / (1.0 + math.exp(metrics.QABF_KA * (1.0 - metrics.QABF_SIGMA_A))))
    value = metrics.q_abf_raw(image, image, image)
    results.append(CheckResult("q_abf_raw_perfect", abs(value - expected) <= 1e-9, value))

    value = metrics.q_sf(np.full((16, 16), 0.4))
    results.append(CheckResult("q_sf_constant", value == 0.0, value))

    a, b = rng.uniform(size=(64, 64)), rng.uniform(size=(64, 64))
    value = metrics.q_scd(a + b, a, b)
    results.append(CheckResult("q_scd_sum", abs(value - 2.0) <= 1e-9, value))

    gray = metrics.to_uint8(rng.uniform(size=(32, 32)))
    expected = 2.0 * metrics.entropy(gray)
    value = metrics.q_mi(gray / 255.0, gray / 255.0, gray / 255.0)
    results.append(CheckResult("q_mi_entropy", abs(value - expected) <= 1e-9, value))
    return results


def run_selftest(gradcheck_seeds: Sequence[int] = range(20), oracle_instances: int = 50) -> List[CheckResult]:
    """依次运行全部自检，返回所有结果"""
    results = []
    results += run_gradcheck_suite(gradcheck_seeds)
    results += run_oracle_suite(oracle_instances)
    results += run_haze_identities()
    results += run_hde_fidelity()
    results += run_blend_identities()
    results += run_metric_sanity()
    failed = [r.name for r in results if not r.passed]
    if failed:
        logging.error(f"自检失败: {failed}")
    else:
        logging.info(f"自检全部通过: {len(results)} 项")
    return results
