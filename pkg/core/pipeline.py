"""
推理流程模块

读取红外与有雾可见光 PNG，加载检查点，运行网络并写出:
    fused.png    融合图像 I_f
    dehazed.png  去雾中间结果 Î_vi
    haze.png     雾浓度可视化，灰度值 round(255·H)
    haze.irvf    雾浓度张量文件 (1, H, W)

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import functional as F
from .checkpoint import build_model, load_checkpoint
from .errors import RegistrationError
from .image_io import read_ir, read_rgb, write_png
from .network import DehazeFusionNet, ModelOutput
from .tensor import Tensor, no_grad
from .tensor_io import write_tensor


@dataclass
class PipelineResult:
    """
    推理结果

    属性:
        fused (np.ndarray): 融合图像 (3, H, W)，[0, 1]
        dehazed (np.ndarray): 去雾图像 (3, H, W)
        density (np.ndarray | None): 雾浓度 (1, H, W)；关闭雾浓度估计的配置下为 None
        paths (Dict[str, str]): 写出的文件路径
    """

    fused: np.ndarray
    dehazed: np.ndarray
    density: Optional[np.ndarray]
    paths: Dict[str, str] = field(default_factory=dict)


def infer(model: DehazeFusionNet, ir: np.ndarray, vis: np.ndarray) -> ModelOutput:
    """不记录计算图的前向传播"""
    if ir.shape[1:] != vis.shape[1:]:
        raise RegistrationError(f"红外 {ir.shape[1:]} 与可见光 {vis.shape[1:]} 尺寸不一致")
    with no_grad():
        return model(ir, vis)


def density_at(density: np.ndarray, height: int, width: int) -> np.ndarray:
    """把雾浓度双线性缩放到图像分辨率（尺寸相同时原样返回）"""
    resized = F.bilinear_resize(Tensor(density, dtype=np.float64), height, width)
    return np.clip(resized.data, 0.0, 1.0)


def load_model(checkpoint_path: str) -> DehazeFusionNet:
    return build_model(load_checkpoint(checkpoint_path))


def run_pipeline(ir_png: str, vis_png: str, checkpoint_path: str, out_dir: str,
                 model: Optional[DehazeFusionNet] = None, write_fused: bool = True,
                 write_dehazed: bool = True, write_density: bool = True) -> PipelineResult:
    """
    完整推理流程

    参数:
        ir_png, vis_png (str): 输入图像路径
        checkpoint_path (str): 检查点路径（传入 model 时忽略）
        out_dir (str): 输出目录
        model: 已加载的网络，批量推理时复用
        write_*: 控制写出哪些结果

    返回:
        PipelineResult

    错误处理:
        尺寸不一致: RegistrationError；检查点损坏: FormatError
    """
    ir = read_ir(ir_png)
    vis = read_rgb(vis_png)
    if model is None:
        model = load_model(checkpoint_path)
    output = infer(model, ir, vis)
    _, height, width = vis.shape

    density = output.density
    if density is not None:
        density = density_at(density, height, width)
    result = PipelineResult(fused=output.fused, dehazed=output.dehazed, density=density)

    os.makedirs(out_dir, exist_ok=True)
    if write_fused:
        result.paths["fused"] = os.path.join(out_dir, "fused.png")
        write_png(result.paths["fused"], result.fused)
    if write_dehazed:
        result.paths["dehazed"] = os.path.join(out_dir, "dehazed.png")
        write_png(result.paths["dehazed"], result.dehazed)
    if write_density:
        if density is None:
            logging.warning("当前配置关闭了雾浓度估计，不输出雾浓度图")
        else:
            result.paths["haze_png"] = os.path.join(out_dir, "haze.png")
            result.paths["haze_tensor"] = os.path.join(out_dir, "haze.irvf")
            write_png(result.paths["haze_png"], density)
            write_tensor(result.paths["haze_tensor"], density)
    logging.info(f"推理完成: {vis_png} → {out_dir}")
    return result
