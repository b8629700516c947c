"""
图像读写模块

PNG 读写统一使用 OpenCV。内存中的图像为 (C, H, W) 的 [0, 1] 浮点数组，
通道顺序 RGB；写出时按 round(255·x) 量化为 8 位。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
import os

import cv2
import numpy as np

from .errors import DimensionError, FormatError


def _read_raw(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise FileNotFoundError(f"图像文件不存在: {path}")
    image = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if image is None:
        raise FormatError(f"无法解码图像: {path}")
    if image.dtype == np.uint8:
        scale = 255.0
    elif image.dtype == np.uint16:
        scale = 65535.0
    else:
        raise FormatError(f"不支持的图像位深: {image.dtype} ({path})")
    image = image.astype(np.float64) / scale
    if image.ndim == 3 and image.shape[2] == 4:
        image = image[:, :, :3]
    return image


def read_ir(path: str) -> np.ndarray:
    """
    读取红外图像为 (1, H, W)

    错误处理:
        彩色 PNG 的三个通道不相同时抛出 DimensionError
    """
    image = _read_raw(path)
    if image.ndim == 3:
        if not (np.array_equal(image[:, :, 0], image[:, :, 1]) and np.array_equal(image[:, :, 0], image[:, :, 2])):
            raise DimensionError(f"红外图像 {path} 是通道不一致的彩色图像", axis="channels")
        image = image[:, :, 0]
    logging.debug(f"读取红外图像: {path}, 尺寸 {image.shape}")
    return image[None, :, :]


def read_rgb(path: str) -> np.ndarray:
    """读取可见光图像为 (3, H, W)，灰度图复制为三通道"""
    image = _read_raw(path)
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    else:
        # OpenCV 按 BGR 存储
        image = image[:, :, ::-1]
    logging.debug(f"读取可见光图像: {path}, 尺寸 {image.shape[:2]}")
    return np.ascontiguousarray(image.transpose(2, 0, 1))


def to_uint8(image: np.ndarray) -> np.ndarray:
    """[0, 1] 浮点 → 8 位，round(255·x)"""
    return np.rint(np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def write_png(path: str, image: np.ndarray) -> None:
    """
    写出 8 位 PNG

    参数:
        path (str): 输出路径
        image (np.ndarray): (1, H, W) 灰度或 (3, H, W) RGB，取值 [0, 1]
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[0] not in (1, 3):
        raise DimensionError(f"只能写出 (1, H, W) 或 (3, H, W) 图像，实际 {image.shape}", axis="channels")
    pixels = to_uint8(image)
    if pixels.shape[0] == 1:
        pixels = pixels[0]
    else:
        pixels = cv2.cvtColor(np.ascontiguousarray(pixels.transpose(1, 2, 0)), cv2.COLOR_RGB2BGR)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    if not cv2.imwrite(path, pixels):
        raise OSError(f"写出图像失败: {path}")
    logging.debug(f"写出图像: {path}")
