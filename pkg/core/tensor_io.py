"""
张量文件读写模块

张量文件格式（逐位精确）:
    魔数 "IRVF"（4 个 ASCII 字节）
    C, H, W: 三个 32 位无符号小端整数
    C·H·W 个 IEEE-754 32 位小端浮点数，按通道、行、列顺序存储

同一记录格式也被检查点文件复用，因此这里同时提供字节级编解码函数。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
import struct
from typing import Tuple

import numpy as np

from .errors import DimensionError, FormatError

MAGIC = b"IRVF"
_HEADER = struct.Struct("<4sIII")


def encode_tensor(array: np.ndarray) -> bytes:
    """
    把 (C, H, W) 数组编码为张量记录

    参数:
        array (np.ndarray): 三维数组，任意浮点精度，写入时转换为 32 位

    返回:
        bytes: 头部 + 数据
    """
    array = np.asarray(array)
    if array.ndim != 3:
        raise DimensionError(f"张量文件只保存 (C, H, W) 数组，实际形状 {array.shape}", axis="rank")
    channels, height, width = array.shape
    payload = np.ascontiguousarray(array, dtype="<f4").tobytes()
    return _HEADER.pack(MAGIC, channels, height, width) + payload


def decode_tensor(buffer: bytes, offset: int = 0) -> Tuple[np.ndarray, int]:
    """
    从字节串的 offset 处解码一条张量记录

    返回:
        (数组, 下一条记录的起始偏移)

    错误处理:
        魔数不符或数据长度不足时抛出 FormatError
    """
    if len(buffer) - offset < _HEADER.size:
        raise FormatError("张量记录头部不完整")
    magic, channels, height, width = _HEADER.unpack_from(buffer, offset)
    if magic != MAGIC:
        raise FormatError(f"张量记录魔数错误: {magic!r}")
    count = channels * height * width
    start = offset + _HEADER.size
    end = start + 4 * count
    if len(buffer) < end:
        raise FormatError(f"张量记录数据不完整: 需要 {4 * count} 字节")
    array = np.frombuffer(buffer, dtype="<f4", count=count, offset=start)
    return array.reshape(channels, height, width).astype(np.float32), end


def write_tensor(path: str, array: np.ndarray) -> None:
    """把 (C, H, W) 数组写入张量文件"""
    data = encode_tensor(array)
    with open(path, "wb") as handle:
        handle.write(data)
    logging.debug(f"写入张量文件: {path}, 形状 {np.shape(array)}")


def read_tensor(path: str) -> np.ndarray:
    """读取张量文件，文件末尾不允许有多余字节"""
    with open(path, "rb") as handle:
        buffer = handle.read()
    array, end = decode_tensor(buffer)
    if end != len(buffer):
        raise FormatError(f"张量文件 {path} 末尾有 {len(buffer) - end} 个多余字节")
    logging.debug(f"读取张量文件: {path}, 形状 {array.shape}")
    return array
