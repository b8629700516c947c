"""
有限差分梯度校验模块

用中心差分逐元素验证解析梯度。所有可微算子和损失函数都必须通过该校验，
校验统一在 64 位精度下进行（32 位下的有限差分误差没有参考意义）。

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NumericError
from .tensor import Tensor


def _evaluate(f: Callable[[], Tensor]) -> float:
    value = f()
    scalar = float(np.asarray(value.data).reshape(-1)[0])
    if not np.isfinite(scalar):
        raise NumericError(f"被校验函数输出非有限值: {scalar}")
    return scalar


def finite_diff_check(f: Callable[[], Tensor], params: Sequence[Tensor],
                      epsilon: float = 1e-6, max_entries: Optional[int] = None,
                      rng: Optional[np.random.Generator] = None) -> float:
    """
    有限差分梯度校验

    参数:
        f: 无参可调用对象，返回标量张量；函数内部读取 params 的当前数据
        params: 需要校验的叶子张量（requires_grad 为 True）
        epsilon (float): 中心差分步长，必须为正
        max_entries (int | None): 每个参数最多抽查的元素个数；None 表示全部
        rng: 抽查时使用的随机数生成器

    返回:
        float: 所有被检查元素上 |g_a − g_fd| / max(|g_a|, |g_fd|, 1e-8) 的最大值

    处理流程:
        1. 清空梯度，前向计算并反向传播得到解析梯度
        2. 对每个被检查元素分别加减 epsilon，计算中心差分
        3. 恢复参数原值，返回最大相对误差

    错误处理:
        - epsilon 非正: ValueError
        - f 输出 NaN/Inf: NumericError

    示例:
        >>> x = Tensor([3.0], requires_grad=True, dtype=np.float64)
        >>> finite_diff_check(lambda: (x * x).sum(), [x], epsilon=1e-5) < 1e-8
        True
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon 必须为正: {epsilon}")
    for p in params:
        p.zero_grad()
    output = f()
    if not np.all(np.isfinite(output.data)):
        raise NumericError("被校验函数输出非有限值")
    output.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else np.array(p.grad) for p in params]

    worst = 0.0
    for p, grad in zip(params, analytic):
        original = p.data
        flat_count = original.size
        if max_entries is not None and flat_count > max_entries:
            generator = rng if rng is not None else np.random.default_rng(0)
            indices = generator.choice(flat_count, size=max_entries, replace=False)
        else:
            indices = np.arange(flat_count)
        try:
            for index in indices:
                position = np.unravel_index(int(index), original.shape)
                perturbed = np.array(original, copy=True)
                perturbed[position] = original[position] + epsilon
                p.data = perturbed
                plus = _evaluate(f)
                perturbed = np.array(original, copy=True)
                perturbed[position] = original[position] - epsilon
                p.data = perturbed
                minus = _evaluate(f)
                numeric = (plus - minus) / (2.0 * epsilon)
                exact = float(grad[position])
                error = abs(exact - numeric) / max(abs(exact), abs(numeric), 1e-8)
                worst = max(worst, error)
        finally:
            p.data = original
    logging.debug(f"梯度校验完成: {len(params)} 个参数, 最大相对误差 {worst:.3e}")
    return worst
