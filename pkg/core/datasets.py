"""
数据集模块

数据集目录约定:
    root/
        ir/     红外图像 PNG（单通道）
        vi/     有雾可见光图像 PNG
        gt/     无雾可见光真值 PNG（训练必需）
        depth/  可选，合成深度图张量文件（与 PNG 同名，扩展名 .irvf）
三个目录中的文件按同名配对。

合成场景:
    清晰图像 = 平滑彩色场 × 逐像素均匀噪声（三通道共享），
    保证每个局部窗口内都有接近 0 的暗像素，符合暗通道先验；
    红外图像 = 0.6 × 清晰图像灰度 + 若干高斯热源；
    深度图来自 ramp / radial / step 三类之一，β ~ U[0.6, 1.8]，A ~ U[0.7, 1.0]。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import ndimage

from . import haze_model
from .data_models import HazeParams, ImagePair
from .errors import ConfigError, DatasetError, ParameterError
from .image_io import read_ir, read_rgb, write_png
from .metrics import to_gray
from .tensor_io import write_tensor

IMAGE_EXTENSIONS = (".png",)
TENSOR_EXTENSION = ".irvf"


@dataclass
class SyntheticScene:
    """
    一个合成场景

    属性:
        name (str): 场景名，例如 "scene_000"
        clear (np.ndarray): 清晰可见光图像 (3, H, W)
        ir (np.ndarray): 红外图像 (1, H, W)
        hazy (np.ndarray): 加雾后的可见光图像 (3, H, W)
        params (HazeParams): 合成参数（含深度图）
        family (str): 深度图类型
    """

    name: str
    clear: np.ndarray
    ir: np.ndarray
    hazy: np.ndarray
    params: HazeParams
    family: str

    @property
    def true_density(self) -> np.ndarray:
        """真值雾浓度 1 − exp(−β·d)，(1, H, W)"""
        return 1.0 - self.params.transmission()

    def pair(self) -> ImagePair:
        return ImagePair(ir=self.ir, vis=self.hazy, gt=self.clear, name=self.name)


def _smooth_field(rng: np.random.Generator, channels: int, size: int, low: float, high: float) -> np.ndarray:
    coarse = rng.uniform(low, high, size=(channels, 4, 4))
    zoom = (1, size / 4.0, size / 4.0)
    field = ndimage.zoom(coarse, zoom, order=1, mode="nearest", grid_mode=True)
    return np.clip(field[:, :size, :size], 0.0, 1.0)


def synthesize_scene(rng: np.random.Generator, size: int = 64, depth_family: Optional[str] = None,
                     name: str = "scene") -> SyntheticScene:
    """
    合成一个带真值的场景

    参数:
        rng: 随机数生成器，抽取顺序固定为 彩色场 → 噪声 → 热源 → 深度类型 → 深度图 → 雾参数
        size (int): 边长
        depth_family (str | None): 指定深度图类型；None 时随机选择
        name (str): 场景名
    """
    if size < 4:
        raise ParameterError(f"合成场景边长至少为 4: {size}")
    field = _smooth_field(rng, 3, size, 0.35, 1.0)
    texture = rng.uniform(0.0, 1.0, size=(1, size, size))
    clear = field * texture

    ir = 0.6 * to_gray(clear)
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(int(rng.integers(1, 4))):
        cy, cx = rng.uniform(0, size, size=2)
        sigma = rng.uniform(0.05, 0.15) * size
        ir = ir + 0.4 * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma * sigma))
    ir = np.clip(ir, 0.0, 1.0)[None]

    family_index = int(rng.integers(len(haze_model.DEPTH_FAMILIES)))
    family = depth_family or haze_model.DEPTH_FAMILIES[family_index]
    depth = haze_model.make_depth_map(family, size, size, rng)
    params = haze_model.sample_haze_params(depth, rng)
    hazy = np.asarray(haze_model.synthesize_haze(clear, params).data, dtype=np.float64)
    return SyntheticScene(name=name, clear=clear, ir=ir, hazy=np.clip(hazy, 0.0, 1.0),
                          params=params, family=family)


def synthesize_suite(rng: np.random.Generator, count: int, size: int = 64) -> List[SyntheticScene]:
    """按 ramp / radial / step 轮流生成 count 个场景"""
    families = haze_model.DEPTH_FAMILIES
    return [synthesize_scene(rng, size, families[i % len(families)], name=f"scene_{i:03d}")
            for i in range(count)]


def write_dataset(root: str, scenes: Sequence[SyntheticScene]) -> None:
    """按目录约定写出合成数据集"""
    for sub in ("ir", "vi", "gt", "depth"):
        os.makedirs(os.path.join(root, sub), exist_ok=True)
    for scene in scenes:
        write_png(os.path.join(root, "ir", f"{scene.name}.png"), scene.ir)
        write_png(os.path.join(root, "vi", f"{scene.name}.png"), scene.hazy)
        write_png(os.path.join(root, "gt", f"{scene.name}.png"), scene.clear)
        write_tensor(os.path.join(root, "depth", f"{scene.name}{TENSOR_EXTENSION}"), scene.params.depth)
    logging.info(f"写出合成数据集: {root}, {len(scenes)} 个场景")


def _list_images(directory: str) -> List[str]:
    return sorted(name for name in os.listdir(directory) if name.lower().endswith(IMAGE_EXTENSIONS))


def load_dataset(root: str, require_gt: bool = True) -> List[ImagePair]:
    """
    读取数据集

    参数:
        root (str): 数据集根目录
        require_gt (bool): 是否要求每个样本都有无雾真值

    返回:
        List[ImagePair]: 按文件名排序

    错误处理:
        缺少 ir/ 或 vi/ 目录、红外缺少配对、要求真值但缺失时抛出 DatasetError
    """
    ir_dir, vi_dir, gt_dir = (os.path.join(root, sub) for sub in ("ir", "vi", "gt"))
    for directory in (ir_dir, vi_dir):
        if not os.path.isdir(directory):
            raise DatasetError(f"数据集缺少目录: {directory}")
    names = _list_images(vi_dir)
    if not names:
        raise DatasetError(f"数据集为空: {vi_dir}")

    pairs = []
    for name in names:
        ir_path = os.path.join(ir_dir, name)
        gt_path = os.path.join(gt_dir, name)
        if not os.path.exists(ir_path):
            raise DatasetError(f"可见光图像 {name} 缺少对应的红外图像")
        has_gt = os.path.exists(gt_path)
        if require_gt and not has_gt:
            raise DatasetError(f"可见光图像 {name} 缺少无雾真值 {gt_path}")
        pairs.append(ImagePair(
            ir=read_ir(ir_path),
            vis=read_rgb(os.path.join(vi_dir, name)),
            gt=read_rgb(gt_path) if has_gt else None,
            name=os.path.splitext(name)[0],
        ))
    logging.info(f"读取数据集: {root}, {len(pairs)} 个样本")
    return pairs


# ==================== 数据增强 ====================

def random_crop(pair: ImagePair, size: int, rng: np.random.Generator) -> ImagePair:
    """随机裁剪 size×size；抽取顺序: 行偏移、列偏移"""
    height, width = pair.size
    if size > min(height, width):
        raise ConfigError(f"裁剪尺寸 {size} 超过图像尺寸 {height}×{width}")
    top = int(rng.integers(0, height - size + 1))
    left = int(rng.integers(0, width - size + 1))
    window = (slice(None), slice(top, top + size), slice(left, left + size))
    return ImagePair(ir=pair.ir[window], vis=pair.vis[window],
                     gt=None if pair.gt is None else pair.gt[window], name=pair.name)


def random_flip(pair: ImagePair, rng: np.random.Generator, hflip: bool = True,
                vflip: bool = True) -> ImagePair:
    """随机水平/垂直翻转；启用的开关各抽取一次硬币"""
    arrays = [pair.ir, pair.vis, pair.gt]
    if hflip and rng.random() < 0.5:
        arrays = [None if a is None else a[:, :, ::-1] for a in arrays]
    if vflip and rng.random() < 0.5:
        arrays = [None if a is None else a[:, ::-1, :] for a in arrays]
    ir, vis, gt = (None if a is None else np.ascontiguousarray(a) for a in arrays)
    return ImagePair(ir=ir, vis=vis, gt=gt, name=pair.name)
