"""
训练模块

训练流程（每步）:
    1. 抽取 batch_size 个样本索引（有放回）
    2. 逐样本随机裁剪、随机翻转
    3. 前向: 编码 → 复原 → 融合
    4. 计算 ℓ_total = ℓ_int + ℓ_∇ + α·ℓ₁，按 batch 平均后反向传播
    5. AdamW 更新，学习率按余弦退火

随机数:
    每次训练只使用一个由 seed 创建的随机数发生器，抽取顺序为
    模型参数初始化 → 每步的样本索引 → 逐样本的裁剪坐标与翻转硬币。
    同一个种子两次训练得到逐位相同的损失曲线。

样本按固定顺序逐个前向和反向传播，梯度在参数上按同样的顺序累加。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import csv
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .checkpoint import Checkpoint, build_model, load_checkpoint, save_checkpoint
from .config import TrainConfig
from .data_models import ImagePair
from .datasets import load_dataset, random_crop, random_flip
from .errors import ConfigError, DatasetError
from .losses import LossConfig, compute_losses
from .network import DehazeFusionNet
from .optim import AdamW, cosine_lr
from .tensor import Tensor

LOSS_COLUMNS = ["step", "lr", "l_int", "l_grad", "l_1", "l_total"]


@dataclass
class TrainResult:
    """
    训练结果

    属性:
        model (DehazeFusionNet): 训练后的网络
        optimizer (AdamW): 优化器（含矩估计）
        history (List[Dict]): 每步一行，列见 LOSS_COLUMNS
        steps (int): 总步数
    """

    model: DehazeFusionNet
    optimizer: AdamW
    history: List[Dict[str, float]] = field(default_factory=list)
    steps: int = 0

    def loss_curve(self) -> np.ndarray:
        return np.array([row["l_total"] for row in self.history])


def _prepare(pairs: Sequence[ImagePair], config: TrainConfig) -> None:
    if not pairs:
        raise DatasetError("训练集为空")
    for pair in pairs:
        if pair.gt is None:
            raise DatasetError(f"训练样本 {pair.name} 缺少无雾真值")
        if config.crop_size > min(pair.size):
            raise ConfigError(f"裁剪尺寸 {config.crop_size} 超过样本 {pair.name} 的尺寸 {pair.size}")


def train_step(model: DehazeFusionNet, optimizer: AdamW, batch: Sequence[ImagePair],
               lr: float, loss_config: LossConfig) -> Dict[str, float]:
    """
    单步训练

    返回:
        Dict: 本步各项损失的 batch 平均值
    """
    optimizer.zero_grad()
    scale = 1.0 / len(batch)
    totals = {"l_int": 0.0, "l_grad": 0.0, "l_1": 0.0, "l_total": 0.0}
    for pair in batch:
        output = model(pair.ir, pair.vis)
        gt = Tensor(pair.gt, dtype=output.fused_raw.dtype)
        ir = Tensor(pair.ir, dtype=output.fused_raw.dtype)
        losses = compute_losses(output.fused_raw, output.restoration.dehazed_raw, ir, gt, loss_config)
        (losses.total * scale).backward()
        for key, value in losses.values().items():
            totals[key] += value * scale
    optimizer.step(lr)
    return totals


def train(pairs: Sequence[ImagePair], config: TrainConfig, loss_csv: Optional[str] = None,
          checkpoint_path: Optional[str] = None, resume: Optional[Checkpoint] = None) -> TrainResult:
    """
    训练网络

    参数:
        pairs: 训练样本（必须带真值）
        config (TrainConfig): 训练配置
        loss_csv (str | None): 损失曲线 CSV 输出路径
        checkpoint_path (str | None): 训练结束后保存检查点的路径
        resume (Checkpoint | None): 从该检查点继续训练；网络拓扑取检查点中的配置，
            步号从检查点的 step 接着计数，学习率按本次的总步数重新退火

    返回:
        TrainResult

    错误处理:
        样本缺少真值: DatasetError；裁剪尺寸超过样本尺寸: ConfigError
    """
    _prepare(pairs, config)
    rng = np.random.default_rng(config.seed)
    start_step = 0
    if resume is None:
        model = DehazeFusionNet(config.model, rng)
        optimizer = AdamW(list(model.named_parameters()), weight_decay=config.weight_decay)
    else:
        if resume.config.model != config.model:
            logging.warning(f"配置中的网络拓扑与检查点不一致，按检查点构建: {resume.config.model.ablations()}")
        config = replace(config, model=resume.config.model)
        model, optimizer = resume_model(resume)
        start_step = resume.step
    loss_config = LossConfig(alpha=config.alpha)

    total_steps = config.total_steps(len(pairs))
    steps_per_epoch = max(1, -(-len(pairs) // config.batch_size))
    logging.info(f"开始训练: {len(pairs)} 个样本, {total_steps} 步, 起始步 {start_step}, 种子 {config.seed}, "
                 f"消融 {config.model.ablations()}")

    result = TrainResult(model=model, optimizer=optimizer, steps=total_steps)
    for step in range(total_steps):
        lr = cosine_lr(step, total_steps, config.lr_init, config.lr_final)
        indices = rng.integers(0, len(pairs), size=config.batch_size)
        batch = []
        for index in indices:
            sample = random_crop(pairs[int(index)], config.crop_size, rng)
            batch.append(random_flip(sample, rng, config.hflip, config.vflip))

        losses = train_step(model, optimizer, batch, lr, loss_config)
        row = {"step": start_step + step, "lr": lr, **losses}
        result.history.append(row)
        logging.debug(f"步 {start_step + step}: lr={lr:.3e}, l_int={losses['l_int']:.5f}, l_grad={losses['l_grad']:.5f}, "
                      f"l_1={losses['l_1']:.5f}, l_total={losses['l_total']:.5f}")
        if (step + 1) % steps_per_epoch == 0:
            logging.info(f"第 {(step + 1) // steps_per_epoch} 轮结束, l_total={losses['l_total']:.5f}")

    if loss_csv:
        write_loss_csv(loss_csv, result.history)
    if checkpoint_path:
        save_checkpoint(checkpoint_path, model, config, step=start_step + total_steps, optimizer=optimizer)
    if result.history:
        logging.info(f"训练完成: 初始 l_total={result.history[0]['l_total']:.5f}, "
                     f"最终 l_total={result.history[-1]['l_total']:.5f}")
    return result


def train_from_directory(dataset_dir: str, config: TrainConfig, out_dir: str,
                         resume_path: Optional[str] = None) -> TrainResult:
    """读取数据集目录并训练，检查点与损失曲线写入 out_dir；resume_path 给出时从该检查点继续"""
    pairs = load_dataset(dataset_dir, require_gt=True)
    resume = load_checkpoint(resume_path) if resume_path else None
    os.makedirs(out_dir, exist_ok=True)
    return train(pairs, config,
                 loss_csv=os.path.join(out_dir, "loss_curve.csv"),
                 checkpoint_path=os.path.join(out_dir, "model.irvc"),
                 resume=resume)


def write_loss_csv(path: str, history: Sequence[Dict[str, float]]) -> None:
    """写出损失曲线；浮点数用 repr 保存，读回后与训练时的值逐位相同"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(LOSS_COLUMNS)
        for row in history:
            writer.writerow([int(row["step"])] + [repr(float(row[key])) for key in LOSS_COLUMNS[1:]])
    logging.info(f"写出损失曲线: {path}, {len(history)} 行")


def resume_model(checkpoint: Checkpoint):
    """由检查点恢复网络与优化器，用于继续训练"""
    model = build_model(checkpoint)
    optimizer = AdamW(list(model.named_parameters()), weight_decay=checkpoint.config.weight_decay)
    if checkpoint.moments:
        optimizer.load_state(checkpoint.moments, checkpoint.step)
    return model, optimizer
