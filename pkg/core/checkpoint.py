"""
检查点模块

检查点文件格式:
    魔数 "IRVC"（4 字节）
    版本号: 32 位无符号小端整数
    头部长度: 32 位无符号小端整数
    头部: UTF-8 JSON（键排序、紧凑分隔符），包含 step、config 快照、
          以及每条张量记录的名称和原始形状
    张量记录: 与张量文件相同的 IRVF 记录，按头部中的顺序排列，
          先是模型参数，再是优化器一阶矩 "m.*" 和二阶矩 "v.*"

张量记录只能保存 (C, H, W)，其他秩的参数按以下规则转为三维后保存，
读取时按头部中的原始形状还原:
    (n,) → (n, 1, 1);  (a, b) → (a, b, 1);  (o, i, k, l) → (o·i, k, l)

同一检查点 保存 → 读取 → 保存 得到的字节完全相同。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .config import TrainConfig, config_from_snapshot
from .errors import FormatError
from .network import DehazeFusionNet
from .optim import AdamW
from .tensor_io import decode_tensor, encode_tensor

MAGIC = b"IRVC"
VERSION = 1
_PREFIX = struct.Struct("<4sII")


@dataclass
class Checkpoint:
    """
    检查点内容

    属性:
        config (TrainConfig): 训练与模型配置快照
        step (int): 已完成的训练步数
        params (Dict[str, np.ndarray]): 按名称保存的模型参数
        moments (Dict[str, np.ndarray]): 优化器矩估计，键为 "m.<名称>"、"v.<名称>"
    """

    config: TrainConfig
    step: int = 0
    params: Dict[str, np.ndarray] = field(default_factory=dict)
    moments: Dict[str, np.ndarray] = field(default_factory=dict)


def _to_rank3(array: np.ndarray) -> np.ndarray:
    if array.ndim == 3:
        return array
    if array.ndim == 1:
        return array.reshape(-1, 1, 1)
    if array.ndim == 2:
        return array.reshape(array.shape[0], array.shape[1], 1)
    if array.ndim == 4:
        out_c, in_c, kh, kw = array.shape
        return array.reshape(out_c * in_c, kh, kw)
    raise FormatError(f"无法保存秩为 {array.ndim} 的参数")


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    """把检查点编码为字节串"""
    entries = list(checkpoint.params.items()) + list(checkpoint.moments.items())
    header = {
        "step": int(checkpoint.step),
        "config": checkpoint.config.snapshot(),
        "tensors": [{"name": name, "shape": list(np.shape(array))} for name, array in entries],
        "params": len(checkpoint.params),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    records = b"".join(encode_tensor(_to_rank3(np.asarray(array))) for _, array in entries)
    return _PREFIX.pack(MAGIC, VERSION, len(header_bytes)) + header_bytes + records


def decode_checkpoint(buffer: bytes) -> Checkpoint:
    """
    从字节串解码检查点

    错误处理:
        魔数、版本、头部或张量记录损坏时抛出 FormatError
    """
    if len(buffer) < _PREFIX.size:
        raise FormatError("检查点文件过短")
    magic, version, header_len = _PREFIX.unpack_from(buffer, 0)
    if magic != MAGIC:
        raise FormatError(f"检查点魔数错误: {magic!r}")
    if version != VERSION:
        raise FormatError(f"不支持的检查点版本: {version}")
    start = _PREFIX.size
    try:
        header = json.loads(buffer[start:start + header_len].decode("utf-8"))
        entries = header["tensors"]
        param_count = int(header["params"])
        config = config_from_snapshot(header["config"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise FormatError(f"检查点头部损坏: {e}") from None

    offset = start + header_len
    arrays = []
    for entry in entries:
        array, offset = decode_tensor(buffer, offset)
        shape = tuple(entry["shape"])
        if array.size != int(np.prod(shape, dtype=np.int64)):
            raise FormatError(f"张量 {entry['name']} 的元素个数与头部形状 {shape} 不一致")
        arrays.append((entry["name"], array.reshape(shape)))
    if offset != len(buffer):
        raise FormatError(f"检查点末尾有 {len(buffer) - offset} 个多余字节")

    return Checkpoint(config=config, step=int(header["step"]),
                      params=dict(arrays[:param_count]), moments=dict(arrays[param_count:]))


def save_checkpoint(path: str, model: DehazeFusionNet, config: TrainConfig, step: int = 0,
                    optimizer: Optional[AdamW] = None) -> Checkpoint:
    """保存模型参数、优化器矩与配置快照"""
    checkpoint = Checkpoint(config=config, step=step, params=model.state_dict(),
                            moments=optimizer.state() if optimizer is not None else {})
    write_checkpoint(path, checkpoint)
    return checkpoint


def write_checkpoint(path: str, checkpoint: Checkpoint) -> None:
    data = encode_checkpoint(checkpoint)
    with open(path, "wb") as handle:
        handle.write(data)
    logging.info(f"保存检查点: {path}, 步数 {checkpoint.step}, {len(checkpoint.params)} 个参数张量")


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as handle:
        buffer = handle.read()
    checkpoint = decode_checkpoint(buffer)
    logging.info(f"读取检查点: {path}, 步数 {checkpoint.step}")
    return checkpoint


def build_model(checkpoint: Checkpoint) -> DehazeFusionNet:
    """
    按检查点中的模型配置重建网络并加载参数

    错误处理:
        参数名称与配置不匹配时抛出 FormatError
    """
    model = DehazeFusionNet(checkpoint.config.model, np.random.default_rng(checkpoint.config.seed))
    try:
        model.load_state_dict(checkpoint.params)
    except (KeyError, ValueError) as e:
        raise FormatError(f"检查点参数与模型结构不匹配: {e}") from None
    return model
