"""
优化器模块

AdamW（解耦权重衰减）与余弦退火学习率。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import DimensionError, ParameterError
from .tensor import Parameter

BETAS = (0.9, 0.999)
EPS = 1e-8
WEIGHT_DECAY = 0.01


@dataclass
class AdamMoments:
    """一阶矩 m、二阶矩 v 与已执行的步数"""

    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamMoments":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adamw_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], moments: AdamMoments,
               lr: float, betas: Tuple[float, float] = BETAS, eps: float = EPS,
               weight_decay: float = WEIGHT_DECAY) -> Tuple[List[np.ndarray], AdamMoments]:
    """
    一步 AdamW 更新

    参数:
        params: 参数数组
        grads: 与 params 一一对应的梯度
        moments (AdamMoments): 更新前的矩估计
        lr (float): 学习率
        betas, eps: Adam 系数
        weight_decay (float): 解耦权重衰减系数

    返回:
        (新参数列表, 新的矩估计)，输入数组不被修改

    处理流程:
        p ← p − lr·wd·p − lr·m̂ / (√v̂ + eps)，m̂、v̂ 为偏差校正后的矩估计

    错误处理:
        参数、梯度、矩的数量或形状不一致时抛出 DimensionError
    """
    if not (len(params) == len(grads) == len(moments.m) == len(moments.v)):
        raise DimensionError(f"参数 {len(params)}、梯度 {len(grads)}、矩 {len(moments.m)} 数量不一致",
                             axis="count")
    beta1, beta2 = betas
    step = moments.step + 1
    correction1 = 1.0 - beta1 ** step
    correction2 = 1.0 - beta2 ** step

    new_params, new_m, new_v = [], [], []
    for index, (p, g, m, v) in enumerate(zip(params, grads, moments.m, moments.v)):
        if not (p.shape == g.shape == m.shape == v.shape):
            raise DimensionError(f"第 {index} 个参数形状 {p.shape} 与梯度 {g.shape} 或矩 {m.shape} 不一致",
                                 axis="shape")
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        update = (m / correction1) / (np.sqrt(v / correction2) + eps)
        new_params.append(p - lr * weight_decay * p - lr * update)
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamMoments(m=new_m, v=new_v, step=step)


def cosine_lr(step: int, total_steps: int, lr_init: float, lr_final: float) -> float:
    """
    余弦退火学习率

    lr = lr_final + 0.5·(lr_init − lr_final)·(1 + cos(π·step / total_steps))

    错误处理:
        step 不在 [0, total_steps] 内或 total_steps < 1 时抛出 ParameterError
    """
    if total_steps < 1:
        raise ParameterError(f"总步数必须为正: {total_steps}")
    if not 0 <= step <= total_steps:
        raise ParameterError(f"步数 {step} 超出范围 [0, {total_steps}]")
    return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + math.cos(math.pi * step / total_steps))


class AdamW:
    """
    作用在 Parameter 上的 AdamW 优化器

    参数按名称管理，检查点保存和恢复矩估计时使用同样的名称。
    没有梯度的参数（例如消融配置下未参与前向的参数）按零梯度处理。
    """

    def __init__(self, named_params: Sequence[Tuple[str, Parameter]], betas=BETAS, eps: float = EPS,
                 weight_decay: float = WEIGHT_DECAY):
        self.names = [name for name, _ in named_params]
        self.params = [p for _, p in named_params]
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.moments = AdamMoments.zeros_like([p.data for p in self.params])

    def step(self, lr: float, grads: Sequence[np.ndarray] = None) -> None:
        """执行一步更新；grads 为 None 时使用各参数的 .grad"""
        if grads is None:
            grads = [np.zeros_like(p.data) if p.grad is None else p.grad for p in self.params]
        new_params, self.moments = adamw_step([p.data for p in self.params], grads, self.moments, lr,
                                              self.betas, self.eps, self.weight_decay)
        for param, value in zip(self.params, new_params):
            param.assign(value)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def state(self) -> Dict[str, np.ndarray]:
        """矩估计，键为 "m.<参数名>" 与 "v.<参数名>" """
        data = {}
        for name, m in zip(self.names, self.moments.m):
            data[f"m.{name}"] = m
        for name, v in zip(self.names, self.moments.v):
            data[f"v.{name}"] = v
        return data

    def load_state(self, state: Dict[str, np.ndarray], step: int) -> None:
        try:
            m = [np.asarray(state[f"m.{name}"]).reshape(p.shape).astype(p.dtype)
                 for name, p in zip(self.names, self.params)]
            v = [np.asarray(state[f"v.{name}"]).reshape(p.shape).astype(p.dtype)
                 for name, p in zip(self.names, self.params)]
        except KeyError as e:
            raise KeyError(f"检查点缺少优化器矩: {e}") from None
        self.moments = AdamMoments(m=m, v=v, step=step)
