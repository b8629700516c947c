"""自动微分张量的测试"""

import numpy as np
import pytest

from core.errors import DimensionError
from core.tensor import (Parameter, Tensor, concat, get_default_dtype, matmul, maximum, no_grad,
                         precision)


class TestBackward:
    """反向传播在常用运算上的梯度"""

    def test_square_sum(self):
        x = Tensor([1.0, 2.0, -3.0], requires_grad=True)
        (x * x).sum().backward()
        np.testing.assert_allclose(x.grad, [2.0, 4.0, -6.0])

    def test_broadcast_add_unbroadcasts(self):
        a = Tensor(np.ones((3, 1)), requires_grad=True)
        b = Tensor(np.ones((1, 4)), requires_grad=True)
        (a + b).sum().backward()
        np.testing.assert_allclose(a.grad, np.full((3, 1), 4.0))
        np.testing.assert_allclose(b.grad, np.full((1, 4), 3.0))

    def test_division_and_power(self, float64):
        x = Tensor([2.0], requires_grad=True)
        y = Tensor([4.0], requires_grad=True)
        (x / y + x ** 3).sum().backward()
        np.testing.assert_allclose(x.grad, [1.0 / 4.0 + 3 * 4.0])
        np.testing.assert_allclose(y.grad, [-2.0 / 16.0])

    def test_shared_node_accumulates(self):
        x = Tensor([3.0], requires_grad=True)
        y = x * 2.0
        (y + y).sum().backward()
        np.testing.assert_allclose(x.grad, [4.0])

    def test_matmul_gradient(self, float64):
        a = Tensor([[1.0, 2.0]], requires_grad=True)
        b = Tensor([[3.0], [4.0]], requires_grad=True)
        matmul(a, b).sum().backward()
        np.testing.assert_allclose(a.grad, [[3.0, 4.0]])
        np.testing.assert_allclose(b.grad, [[1.0], [2.0]])

    def test_concat_splits_gradient(self):
        a = Tensor(np.ones((1, 2, 2)), requires_grad=True)
        b = Tensor(np.ones((2, 2, 2)), requires_grad=True)
        (concat([a, b], axis=0) * 3.0).sum().backward()
        np.testing.assert_allclose(a.grad, np.full((1, 2, 2), 3.0))
        np.testing.assert_allclose(b.grad, np.full((2, 2, 2), 3.0))

    def test_getitem_scatters_gradient(self):
        x = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
        x[1:].sum().backward()
        np.testing.assert_allclose(x.grad, [[0, 0], [1, 1], [1, 1]])

    def test_non_scalar_backward_rejected(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(DimensionError) as info:
            (x * 2.0).backward()
        assert info.value.axis == "size"


class TestMaximum:
    def test_ties_route_gradient_to_first_argument(self):
        a = Tensor([1.0, 2.0, 5.0], requires_grad=True)
        b = Tensor([1.0, 3.0, 4.0], requires_grad=True)
        maximum(a, b).sum().backward()
        np.testing.assert_array_equal(a.grad, [1.0, 0.0, 1.0])
        np.testing.assert_array_equal(b.grad, [0.0, 1.0, 0.0])

    def test_values(self):
        out = maximum(Tensor([0.2, 0.9]), Tensor([0.5, 0.1]))
        np.testing.assert_allclose(out.data, [0.5, 0.9])


class TestGraphControl:
    def test_no_grad_records_nothing(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            y = x * 2.0
        assert not y.requires_grad
        assert y._prev == ()

    def test_precision_context_restores(self):
        before = get_default_dtype()
        with precision(np.float64):
            assert Tensor([1.0]).dtype == np.float64
        assert get_default_dtype() is before
        assert Tensor([1.0]).dtype == np.float32

    def test_precision_rejects_integer_dtype(self):
        with pytest.raises(ValueError):
            with precision(np.int32):
                pass

    def test_data_is_read_only(self):
        x = Tensor([1.0, 2.0])
        with pytest.raises(ValueError):
            x.data[0] = 5.0
        copy = x.numpy()
        copy[0] = 5.0
        assert x.data[0] == 1.0


class TestParameter:
    def test_assign_replaces_data(self):
        p = Parameter(np.zeros((2, 2)), name="w")
        p.assign(np.ones((2, 2)))
        np.testing.assert_array_equal(p.data, np.ones((2, 2)))
        assert p.requires_grad

    def test_assign_shape_mismatch(self):
        p = Parameter(np.zeros((2, 2)), name="w")
        with pytest.raises(DimensionError):
            p.assign(np.ones(3))
