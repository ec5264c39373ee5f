import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import assert_grads_match
from revdict import autodiff as ad
from revdict.autodiff import (AdamState, ContractError, DimensionError,
                              NumericError, Tape, Tensor, adam_step,
                              apply_primitive, backward)


class TestTensor:
    def test_shape_matches_values(self):
        t = Tensor([[1.0, 2.0], [3.0, 4.0]])
        assert t.shape == (2, 2)

    def test_nonfinite_rejected(self):
        with pytest.raises(NumericError):
            Tensor([1.0, float("nan")])
        with pytest.raises(NumericError):
            Tensor([float("inf")])


class TestPrimitives:
    def test_sigmoid_at_zero(self):
        out = apply_primitive("sigmoid", Tensor([0.0]))
        npt.assert_allclose(out.data, [0.5])

    def test_relu_definition(self):
        out = apply_primitive("relu", Tensor([-1.0, 2.0]))
        npt.assert_array_equal(out.data, [0.0, 2.0])

    def test_matmul_identity(self):
        out = apply_primitive("matmul", Tensor(np.eye(2)), Tensor([[3.0, 4.0], [5.0, 6.0]]))
        npt.assert_array_equal(out.data, [[3.0, 4.0], [5.0, 6.0]])

    def test_matmul_shape_mismatch_names_op(self):
        with pytest.raises(DimensionError, match="matmul"):
            apply_primitive("matmul", Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_elementwise_shape_mismatch(self):
        with pytest.raises(DimensionError, match="add"):
            apply_primitive("add", Tensor(np.ones(3)), Tensor(np.ones(4)))

    def test_scalar_broadcast(self):
        out = apply_primitive("hadamard", Tensor([1.0, 2.0]), Tensor(3.0))
        npt.assert_array_equal(out.data, [3.0, 6.0])

    def test_unknown_primitive(self):
        with pytest.raises(ContractError):
            apply_primitive("conv2d", Tensor([1.0]))

    def test_max_reduce_first_tie_wins(self):
        x = Tensor([2.0, 2.0, 1.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.max_reduce(x)
            backward(tape, loss)
        npt.assert_array_equal(x.grad, [1.0, 0.0, 0.0])

    def test_recorded_only_with_grad_inputs(self):
        with Tape() as tape:
            apply_primitive("add", Tensor([1.0]), Tensor([2.0]))
            assert len(tape) == 0
            apply_primitive("add", Tensor([1.0], requires_grad=True), Tensor([2.0]))
            assert len(tape) == 1


class TestBackward:
    def test_sum_of_squares(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.sum_reduce(ad.hadamard(x, x))
            backward(tape, loss)
        npt.assert_allclose(x.grad, [2.0, 4.0])

    def test_relu_inactive_region(self):
        x = Tensor([-3.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.sum_reduce(ad.relu(x))
            backward(tape, loss)
        npt.assert_array_equal(x.grad, [0.0])

    def test_nonscalar_loss_rejected(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = ad.hadamard(x, x)
            with pytest.raises(ContractError):
                backward(tape, y)

    def test_unreached_params_get_zero_grads(self):
        x = Tensor([1.0], requires_grad=True)
        y = Tensor([5.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.sum_reduce(ad.hadamard(x, x))
            grads = backward(tape, loss, {"x": x, "y": y})
        npt.assert_array_equal(grads["y"], [0.0])

    def test_random_composition_matches_finite_differences(self):
        # three-layer composition exercising every primitive
        rng = np.random.default_rng(11)
        x = ad.uniform_init((4,), rng, scale=0.5)
        W = ad.uniform_init((4, 4), rng, scale=0.5)
        b = ad.uniform_init((4,), rng, scale=0.5)
        params = {"x": x, "W": W, "b": b}

        def f():
            h1 = ad.relu(ad.add(ad.matmul(x, W), b))
            h2 = ad.tanh(ad.add(ad.hadamard(h1, x), ad.scale(b, 0.7)))
            h3 = ad.sigmoid(ad.matmul(h2, W))
            return ad.add(ad.sum_reduce(h3), ad.max_reduce(h2))

        assert_grads_match(f, params)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        x = ad.uniform_init((3,), rng)

        def grad_of(fn):
            ad.zero_grads({"x": x})
            with Tape() as tape:
                backward(tape, fn())
            return x.grad.copy()

        f = lambda: ad.sum_reduce(ad.hadamard(x, x))
        g = lambda: ad.max_reduce(ad.tanh(x))
        a, b = 2.5, -1.25
        combined = lambda: ad.add(ad.scale(f(), a), ad.scale(g(), b))
        npt.assert_allclose(grad_of(combined), a * grad_of(f) + b * grad_of(g),
                            atol=1e-12)

    def test_determinism_bitwise(self):
        def run():
            rng = np.random.default_rng(99)
            x = ad.uniform_init((5,), rng)
            W = ad.uniform_init((5, 5), rng)
            with Tape() as tape:
                loss = ad.sum_reduce(ad.sigmoid(ad.matmul(x, W)))
                backward(tape, loss)
            return loss.data.copy(), x.grad.copy(), W.grad.copy()

        la, xa, Wa = run()
        lb, xb, Wb = run()
        assert (la == lb).all() and (xa == xb).all() and (Wa == Wb).all()


class TestConcatLookup:
    def test_concat_splits_gradient(self):
        a = Tensor([1.0, 2.0], requires_grad=True)
        b = Tensor([3.0], requires_grad=True)
        with Tape() as tape:
            loss = ad.max_reduce(ad.concat([a, b]))
            backward(tape, loss)
        npt.assert_array_equal(a.grad, [0.0, 0.0])
        npt.assert_array_equal(b.grad, [1.0])

    def test_lookup_scatters_and_freezes(self):
        table = Tensor(np.arange(12.0).reshape(4, 3), requires_grad=True)
        with Tape() as tape:
            rows = ad.embedding_lookup(table, [0, 2, 2], frozen_rows=(0,))
            loss = ad.sum_reduce(rows)
            backward(tape, loss)
        expected = np.zeros((4, 3))
        expected[2] = 2.0  # id 2 appears twice
        npt.assert_array_equal(table.grad, expected)

    def test_lookup_out_of_range(self):
        with pytest.raises(DimensionError):
            ad.embedding_lookup(Tensor(np.zeros((3, 2))), [5])


class TestAdam:
    def _params(self, val=1.0):
        return {"w": Tensor(np.full(3, val), requires_grad=True)}

    def test_zero_lr_leaves_params(self):
        params = self._params()
        before = params["w"].data.copy()
        adam_step(params, {"w": np.ones(3)}, AdamState(params), lr=0.0)
        npt.assert_array_equal(params["w"].data, before)

    def test_first_step_is_signed_lr(self):
        params = self._params()
        adam_step(params, {"w": np.full(3, 0.5)}, AdamState(params), lr=1e-3)
        npt.assert_allclose(params["w"].data, 1.0 - 1e-3, rtol=1e-6)

    def test_shape_mismatch(self):
        params = self._params()
        with pytest.raises(DimensionError):
            adam_step(params, {"w": np.ones(4)}, AdamState(params))

    def test_converges_on_quadratic(self):
        # reference oracle: scalar loss (x-3)^2, gradient 2(x-3)
        params = {"x": Tensor(np.zeros(1), requires_grad=True)}
        state = AdamState(params)
        for _ in range(200):
            g = 2.0 * (params["x"].data - 3.0)
            adam_step(params, {"x": g}, state, lr=0.05)
        assert abs(params["x"].data[0] - 3.0) < 0.1

    def test_sgd_matches_plain_update(self):
        params = self._params()
        ad.sgd_step(params, {"w": np.full(3, 2.0)}, lr=0.1)
        npt.assert_allclose(params["w"].data, 0.8)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_primitive_gradients_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    x = ad.uniform_init((n,), rng, scale=0.9)
    W = ad.uniform_init((n, n), rng, scale=0.9)
    params = {"x": x, "W": W}

    def f():
        h = ad.relu(ad.matmul(x, W))
        h = ad.add(ad.tanh(h), ad.sigmoid(ad.scale(x, 1.3)))
        return ad.add(ad.sum_reduce(ad.hadamard(h, h)), ad.max_reduce(h))

    assert_grads_match(f, params)
