"""
张量与反向传播模块

本模块实现一个最小的稠密张量引擎，以 numpy 数组为存储，使用反向模式
自动微分（计算图 + 拓扑排序）计算解析梯度。

主要功能:
- Tensor: 不可变的数值容器，记录生成它的运算与父节点
- Parameter: 可学习参数，唯一允许在训练循环中被替换数据的张量
- 逐元素运算、归约、变形、拼接、矩阵乘法等基础算子及其反向传播
- 运行精度切换（默认 32 位，梯度校验使用 64 位）

约定:
- 图像与特征张量的形状为 (C, H, W)，按通道、行、列顺序存储
- 卷积核等参数可以是任意秩
- 每个算子的反向函数返回与父节点一一对应的梯度

作者: 红外可见光融合系统开发团队
版本: 1.0
"""

from contextlib import contextmanager
from typing import Callable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionError

ArrayLike = Union[np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_default_dtype = np.float32


def get_default_dtype():
    """返回当前默认浮点精度"""
    return _default_dtype


def set_default_dtype(dtype) -> None:
    """
    设置默认浮点精度

    参数:
        dtype: np.float32 或 np.float64
    """
    global _default_dtype
    dtype = np.dtype(dtype).type
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"不支持的精度: {dtype}")
    _default_dtype = dtype


@contextmanager
def precision(dtype) -> Iterator[None]:
    """
    临时切换默认精度的上下文管理器

    示例:
        >>> with precision(np.float64):
        ...     x = Tensor([1.0, 2.0])
        >>> x.dtype
        dtype('float64')
    """
    previous = _default_dtype
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


_grad_enabled = True


@contextmanager
def no_grad() -> Iterator[None]:
    """推理时关闭计算图记录"""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """把广播后的梯度求和还原到原始形状"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """
    张量

    计算完成后数据不可修改；所有运算都返回新的张量。只有需要梯度的运算
    才会记录父节点和反向函数，推理路径不保留计算图。

    属性:
        data (np.ndarray): 只读数据
        requires_grad (bool): 是否需要梯度
        grad (np.ndarray | None): 反向传播后累积在叶子节点上的梯度
        name (str | None): 可选名称，参数使用
    """

    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False,
                 name: Optional[str] = None, dtype=None):
        array = np.array(data, dtype=dtype if dtype is not None else _default_dtype, copy=True)
        self.data = _freeze(array)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._prev: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = ""

    @classmethod
    def _from_op(cls, data: np.ndarray, parents: Sequence["Tensor"],
                 backward: BackwardFn, op: str) -> "Tensor":
        out = cls.__new__(cls)
        out.data = _freeze(np.asarray(data))
        out.grad = None
        out.name = None
        out._op = op
        out.requires_grad = _grad_enabled and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._prev = tuple(parents)
            out._backward = backward
        else:
            out._prev = ()
            out._backward = None
        return out

    # ==================== 基本属性 ====================

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        """返回数据的可写副本"""
        return np.array(self.data, copy=True)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    def __len__(self) -> int:
        return self.shape[0]

    # ==================== 反向传播 ====================

    def _topological_order(self) -> list:
        # 迭代式深度优先，计算图很深时避免递归层数超限
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._prev:
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """
        从当前节点反向传播

        参数:
            grad: 输出梯度；为 None 时要求当前张量是标量，梯度取 1

        说明:
            叶子节点（没有父节点且 requires_grad 为 True）的梯度累加到 .grad，
            中间节点的梯度在传播结束后丢弃。
        """
        if grad is None:
            if self.size != 1:
                raise DimensionError(f"backward 需要标量输出，当前形状 {self.shape}", axis="size")
            grad = np.ones_like(self.data)
        grads = {id(self): np.asarray(grad, dtype=self.dtype)}
        for node in reversed(self._topological_order()):
            node_grad = grads.pop(id(node), None)
            if node_grad is None:
                continue
            if not node._prev:
                if node.requires_grad:
                    node.grad = node_grad if node.grad is None else node.grad + node_grad
                continue
            for parent, parent_grad in zip(node._prev, node._backward(node_grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + parent_grad if key in grads else parent_grad

    def zero_grad(self) -> None:
        self.grad = None

    # ==================== 逐元素运算 ====================

    def _lift(self, other: ArrayLike) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(other, dtype=self.dtype)

    def __add__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        a_shape, b_shape = self.shape, other.shape

        def backward(g):
            return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

        return Tensor._from_op(self.data + other.data, (self, other), backward, "add")

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        a_shape, b_shape = self.shape, other.shape

        def backward(g):
            return _unbroadcast(g, a_shape), _unbroadcast(-g, b_shape)

        return Tensor._from_op(self.data - other.data, (self, other), backward, "sub")

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return self._lift(other) - self

    def __mul__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        a, b = self.data, other.data

        def backward(g):
            return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)

        return Tensor._from_op(a * b, (self, other), backward, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        other = self._lift(other)
        a, b = self.data, other.data

        def backward(g):
            return _unbroadcast(g / b, a.shape), _unbroadcast(-g * a / (b * b), b.shape)

        return Tensor._from_op(a / b, (self, other), backward, "div")

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return self._lift(other) / self

    def __neg__(self) -> "Tensor":
        return Tensor._from_op(-self.data, (self,), lambda g: (-g,), "neg")

    def __pow__(self, exponent: float) -> "Tensor":
        if isinstance(exponent, Tensor):
            raise TypeError("只支持标量指数")
        x = self.data

        def backward(g):
            return (g * exponent * np.power(x, exponent - 1),)

        return Tensor._from_op(np.power(x, exponent), (self,), backward, "pow")

    def abs(self) -> "Tensor":
        """绝对值；在 0 处取次梯度 0"""
        x = self.data
        return Tensor._from_op(np.abs(x), (self,), lambda g: (g * np.sign(x),), "abs")

    def exp(self) -> "Tensor":
        out = np.exp(self.data)
        return Tensor._from_op(out, (self,), lambda g: (g * out,), "exp")

    # ==================== 归约 ====================

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        shape = self.shape

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Tensor._from_op(self.data.sum(axis=axis, keepdims=keepdims), (self,), backward, "sum")

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.size
        else:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
            count = int(np.prod([self.shape[a] for a in axes]))
        if count == 0:
            raise DimensionError("对空张量求均值", axis=str(axis))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # ==================== 变形 ====================

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        return Tensor._from_op(self.data.reshape(shape), (self,),
                               lambda g: (g.reshape(original),), "reshape")

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = tuple(np.argsort(axes))
        return Tensor._from_op(self.data.transpose(axes), (self,),
                               lambda g: (g.transpose(inverse),), "transpose")

    def swapaxes(self, a: int, b: int) -> "Tensor":
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return self.transpose(tuple(axes))

    def broadcast_to(self, shape: Tuple[int, ...]) -> "Tensor":
        original = self.shape
        out = np.broadcast_to(self.data, shape).copy()
        return Tensor._from_op(out, (self,), lambda g: (_unbroadcast(g, original),), "broadcast")

    def __getitem__(self, index) -> "Tensor":
        shape = self.shape
        dtype = self.dtype
        parts = index if isinstance(index, tuple) else (index,)
        basic = all(isinstance(part, (slice, int)) for part in parts)

        def backward(g):
            full = np.zeros(shape, dtype=dtype)
            if basic:
                full[index] = g
            else:
                np.add.at(full, index, g)
            return (full,)

        return Tensor._from_op(np.array(self.data[index]), (self,), backward, "getitem")

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


class Parameter(Tensor):
    """
    可学习参数

    与普通张量的唯一区别是训练循环可以通过 assign 整体替换它的数据。
    """

    def __init__(self, data: ArrayLike, name: Optional[str] = None, dtype=None):
        super().__init__(data, requires_grad=True, name=name, dtype=dtype)

    def assign(self, array: np.ndarray) -> None:
        array = np.array(array, dtype=self.dtype, copy=True)
        if array.shape != self.shape:
            raise DimensionError(f"参数 {self.name} 赋值形状 {array.shape} 与原形状 {self.shape} 不一致",
                                 axis="shape")
        self.data = _freeze(array)


# ==================== 多输入算子 ====================

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """矩阵乘法，支持前导批维度一致的批量乘法"""
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"矩阵乘法内维不一致: {a.shape} @ {b.shape}", axis="inner")
    x, y = a.data, b.data

    def backward(g):
        return g @ np.swapaxes(y, -1, -2), np.swapaxes(x, -1, -2) @ g

    return Tensor._from_op(x @ y, (a, b), backward, "matmul")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """沿指定维度拼接"""
    reference = tensors[0].shape
    for t in tensors[1:]:
        for ax, (left, right) in enumerate(zip(reference, t.shape)):
            if ax != axis and left != right:
                raise DimensionError(f"拼接形状不一致: {reference} 与 {t.shape}", axis=str(ax))
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    out = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor._from_op(out, tuple(tensors), backward, "concat")


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """逐元素最大值；相等时梯度全部归第一个参数"""
    x, y = a.data, b.data
    first = x >= y

    def backward(g):
        ga = np.where(first, g, 0.0).astype(g.dtype)
        gb = np.where(first, 0.0, g).astype(g.dtype)
        return _unbroadcast(ga, x.shape), _unbroadcast(gb, y.shape)

    return Tensor._from_op(np.where(first, x, y), (a, b), backward, "maximum")


def as_tensor(value: ArrayLike) -> Tensor:
    """把数组转换为不需要梯度的张量；已经是张量时原样返回"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def zeros(shape: Tuple[int, ...]) -> Tensor:
    return Tensor(np.zeros(shape))
