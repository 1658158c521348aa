"""Op-level gradient checks for the autodiff tape."""

import numpy as np
import pytest

from glucast.neural.tensor import Tensor, concat, softmax, stack


def numeric_grad(make_loss, param: Tensor, step=1e-6):
    grad = np.zeros_like(param.data)
    flat = param.data.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = make_loss()
        flat[i] = orig - step
        down = make_loss()
        flat[i] = orig
        gflat[i] = (up - down) / (2 * step)
    return grad


def check_op(build, shapes, seed=0, atol=1e-7):
    """build(tensors) -> Tensor scalar loss; compare analytic vs numeric."""
    rng = np.random.default_rng(seed)
    tensors = [Tensor(rng.normal(0, 1, s), requires_grad=True) for s in shapes]
    loss = build(tensors)
    loss.backward()
    for t in tensors:
        numeric = numeric_grad(lambda: float(build(tensors).data), t)
        assert np.allclose(t.grad, numeric, atol=atol), (t.shape, t.grad, numeric)


class TestOps:
    def test_add_broadcast(self):
        check_op(lambda ts: ((ts[0] + ts[1]) * (ts[0] + ts[1])).sum(),
                 [(3, 4), (4,)])

    def test_mul_broadcast(self):
        check_op(lambda ts: (ts[0] * ts[1]).sum(), [(2, 3, 4), (3, 1)])

    def test_sub_neg(self):
        check_op(lambda ts: ((ts[0] - ts[1]) * (ts[0] - ts[1])).mean(), [(5,), (5,)])

    def test_matmul(self):
        check_op(lambda ts: (ts[0] @ ts[1]).sum(), [(3, 4), (4, 2)])

    def test_matmul_batched_broadcast(self):
        check_op(lambda ts: ((ts[0] @ ts[1]) * (ts[0] @ ts[1])).sum(),
                 [(2, 3, 4), (4, 2)])

    def test_tanh_sigmoid(self):
        check_op(lambda ts: (ts[0].tanh() * ts[0].sigmoid()).sum(), [(4, 3)])

    def test_reshape_swap(self):
        check_op(lambda ts: (ts[0].reshape(2, 6).swap_last_axes()).tanh().sum(),
                 [(3, 4)])

    def test_getitem(self):
        check_op(lambda ts: (ts[0][:, -1, :] * ts[0][:, 0, :]).sum(), [(2, 3, 4)])

    def test_concat_stack(self):
        check_op(lambda ts: concat([ts[0], ts[1]], axis=-1).tanh().sum(),
                 [(2, 3), (2, 2)])
        check_op(lambda ts: stack([ts[0], ts[1]], axis=1).sigmoid().sum(),
                 [(2, 3), (2, 3)])

    def test_softmax(self):
        check_op(lambda ts: (softmax(ts[0], axis=-1) * ts[1]).sum(), [(3, 5), (3, 5)])

    def test_sum_axis_keepdims(self):
        check_op(lambda ts: (ts[0].sum(axis=1, keepdims=True) * ts[0]).sum(), [(3, 4)])

    def test_mean(self):
        check_op(lambda ts: (ts[0] * ts[0]).mean(), [(7,)])


class TestEngine:
    def test_grad_accumulates_over_reuse(self):
        x = Tensor(np.array([2.0]), requires_grad=True)
        y = x * x  # d/dx = 2x via two-parent accumulation
        y.backward()
        assert x.grad[0] == pytest.approx(4.0)

    def test_constant_branches_skip_grad(self):
        x = Tensor(np.ones(3), requires_grad=True)
        c = Tensor(np.ones(3))
        (x * c).sum().backward()
        assert c.grad is None
        assert np.allclose(x.grad, 1.0)

    def test_backward_requires_grad(self):
        with pytest.raises(ValueError):
            Tensor(np.ones(2)).backward()

    def test_deep_chain_no_recursion_error(self):
        x = Tensor(np.array([0.5]), requires_grad=True)
        y = x
        for _ in range(3000):
            y = y * 1.0
        y.backward()
        assert x.grad[0] == pytest.approx(1.0)

    def test_softmax_rows_convex(self):
        rng = np.random.default_rng(2)
        y = softmax(Tensor(rng.normal(0, 3, (4, 6))), axis=-1)
        assert np.allclose(y.data.sum(axis=-1), 1.0)
        assert np.all(y.data >= 0)
