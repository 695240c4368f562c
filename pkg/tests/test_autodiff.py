"""Autodiff core: primitive forward values, gradients vs finite differences,
Adam behavior, and tape semantics."""

import numpy as np
import pytest

from vda.autodiff import (
    ShapeError,
    Tape,
    Tensor,
    adam_init,
    adam_step,
    add,
    backward,
    clip,
    concat,
    conv1d,
    div,
    exp,
    finite_difference_check,
    gather_frames,
    gelu,
    index_select,
    layernorm,
    linear,
    log,
    matmul,
    moveaxis,
    mul,
    neg,
    reshape,
    softmax,
    sqrt,
    sub,
    tmean,
    tsum,
    view_linear,
    zero_grads,
)

FD_TOL = 1e-4


def grad_of(f, x):
    x.grad = None
    with Tape() as tape:
        loss = f(x)
    backward(tape, loss)
    return x.grad


class TestForwardValues:
    def test_linear_identity(self):
        y = linear(Tensor([1.0, 2.0]), Tensor(np.eye(2)), Tensor([0.0, 0.0]))
        np.testing.assert_array_equal(y.data, [1.0, 2.0])

    def test_softmax_uniform(self):
        y = softmax(Tensor([0.0, 0.0, 0.0]))
        np.testing.assert_allclose(y.data, [1 / 3] * 3)

    def test_gelu_zero_is_exact(self):
        assert gelu(Tensor(0.0)).item() == 0.0

    def test_conv1d_shape_and_value(self):
        # moving-average kernel over a ramp
        x = Tensor(np.arange(6.0).reshape(1, 1, 6))
        w = Tensor(np.full((1, 1, 3), 1 / 3))
        y = conv1d(x, w, stride=1, padding=0)
        np.testing.assert_allclose(y.data[0, 0], [1.0, 2.0, 3.0, 4.0])

    def test_conv1d_stride_padding(self):
        x = Tensor(np.random.default_rng(0).standard_normal((2, 3, 11)))
        w = Tensor(np.random.default_rng(1).standard_normal((4, 3, 3)))
        y = conv1d(x, w, stride=2, padding=1)
        assert y.shape == (2, 4, 6)


class TestBackwardBasics:
    def test_sum_gives_ones(self):
        x = Tensor(np.random.default_rng(0).standard_normal((3, 4)), requires_grad=True)
        g = grad_of(lambda t: tsum(t), x)
        np.testing.assert_array_equal(g, np.ones((3, 4)))

    def test_square_gradient(self):
        x = Tensor([3.0], requires_grad=True)
        g = grad_of(lambda t: tsum(mul(t, t)), x)
        np.testing.assert_array_equal(g, [6.0])

    def test_gradient_accumulates_across_uses(self):
        x = Tensor([1.0, -2.0], requires_grad=True)
        g_twice = grad_of(lambda t: add(tsum(t), tsum(t)), x)
        g_scaled = grad_of(lambda t: mul(tsum(t), Tensor(2.0)), x)
        np.testing.assert_array_equal(g_twice, g_scaled)

    def test_backward_deterministic(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.standard_normal((4, 5)), requires_grad=True)

        def f(t):
            return tsum(mul(softmax(t), log(softmax(t))))

        g1 = grad_of(f, x).copy()
        g2 = grad_of(f, x)
        assert np.array_equal(g1, g2)

    def test_non_scalar_loss_rejected(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = mul(x, x)
        with pytest.raises(ValueError, match="scalar"):
            backward(tape, y)

    def test_layernorm_chain_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        x = Tensor(rng.standard_normal((3, 8)), requires_grad=True)
        gamma = Tensor(rng.standard_normal(8), requires_grad=True)
        beta = Tensor(rng.standard_normal(8), requires_grad=True)

        def f(t):
            return tsum(mul(gelu(layernorm(t, gamma, beta)), Tensor(rng_proj)))

        rng_proj = np.random.default_rng(8).standard_normal((3, 8))
        assert finite_difference_check(f, x, h=1e-5) <= FD_TOL


def _proj(shape, seed):
    return Tensor(np.random.default_rng(seed).standard_normal(shape))


def _primitive_cases(seed):
    """Scalar-valued functions exercising every primitive, plus the tensor
    whose gradient gets checked."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, 3, 5))
    pos = np.abs(rng.standard_normal((2, 3, 5))) + 0.5
    other = rng.standard_normal((2, 3, 5))
    w = rng.standard_normal((5, 4))
    conv_x = rng.standard_normal((2, 3, 9))
    conv_w = rng.standard_normal((4, 3, 3))
    vl_x = rng.standard_normal((2, 3, 4, 5))
    vl_w = rng.standard_normal((3, 5, 2))
    idx2 = np.stack([rng.choice(4, size=2, replace=False) for _ in range(2)])

    cases = {
        "add": (lambda t: tsum(mul(add(t, Tensor(other)), _proj((2, 3, 5), seed))), x),
        "add_broadcast": (
            lambda t: tsum(mul(add(t, Tensor(other[0, :1])), _proj((2, 3, 5), seed))), x),
        "sub": (lambda t: tsum(mul(sub(Tensor(other), t), _proj((2, 3, 5), seed))), x),
        "mul": (lambda t: tsum(mul(mul(t, Tensor(other)), _proj((2, 3, 5), seed))), x),
        "div": (lambda t: tsum(mul(div(Tensor(other), t), _proj((2, 3, 5), seed))), pos),
        "neg": (lambda t: tsum(mul(neg(t), _proj((2, 3, 5), seed))), x),
        "exp": (lambda t: tsum(mul(exp(t), _proj((2, 3, 5), seed))), x),
        "log": (lambda t: tsum(mul(log(t), _proj((2, 3, 5), seed))), pos),
        "sqrt": (lambda t: tsum(mul(sqrt(t), _proj((2, 3, 5), seed))), pos),
        "gelu": (lambda t: tsum(mul(gelu(t), _proj((2, 3, 5), seed))), x),
        "softmax": (lambda t: tsum(mul(softmax(t), _proj((2, 3, 5), seed))), x),
        "softmax_log": (lambda t: tsum(mul(log(softmax(t)), _proj((2, 3, 5), seed))), x),
        "clip": (lambda t: tsum(mul(clip(t, -0.8, 0.8), _proj((2, 3, 5), seed))), x),
        "matmul": (lambda t: tsum(mul(matmul(t, Tensor(w)), _proj((2, 3, 4), seed))), x),
        "matmul_w": (
            lambda t: tsum(mul(matmul(Tensor(x), t), _proj((2, 3, 4), seed))), w),
        "linear_bias": (
            lambda t: tsum(mul(linear(Tensor(x), Tensor(w), t), _proj((2, 3, 4), seed))),
            rng.standard_normal(4)),
        "conv1d_x": (
            lambda t: tsum(mul(conv1d(t, Tensor(conv_w), Tensor(np.zeros(4)),
                                      stride=1, padding=1),
                               _proj((2, 4, 9), seed))), conv_x),
        "conv1d_w": (
            lambda t: tsum(mul(conv1d(Tensor(conv_x), t, None, stride=2, padding=0),
                               _proj((2, 4, 4), seed))), conv_w),
        "layernorm_x": (
            lambda t: tsum(mul(layernorm(t, Tensor(np.ones(5)), Tensor(np.zeros(5))),
                               _proj((2, 3, 5), seed))), x),
        "layernorm_axis1": (
            lambda t: tsum(mul(layernorm(t, Tensor(np.ones(3)), Tensor(np.zeros(3)),
                                         axis=1),
                               _proj((2, 3, 5), seed))), x),
        "layernorm_gamma": (
            lambda t: tsum(mul(layernorm(Tensor(x), t, Tensor(np.zeros(5))),
                               _proj((2, 3, 5), seed))), np.ones(5)),
        "sum_axis": (lambda t: tsum(mul(tsum(t, axis=1), _proj((2, 5), seed))), x),
        "mean_axes": (lambda t: tsum(mul(tmean(t, axis=(0, 2)), _proj((3,), seed))), x),
        "concat": (
            lambda t: tsum(mul(concat([t, Tensor(other)], axis=1),
                               _proj((2, 6, 5), seed))), x),
        "index_select_dup": (
            lambda t: tsum(mul(index_select(t, [1, 1, 0], axis=1),
                               _proj((2, 3, 5), seed))), x),
        "gather_frames": (
            lambda t: tsum(mul(gather_frames(t, idx2, axis=2),
                               _proj((2, 3, 2, 5), seed))),
            rng.standard_normal((2, 3, 4, 5))),
        "moveaxis": (
            lambda t: tsum(mul(moveaxis(t, 0, 2), _proj((3, 5, 2), seed))), x),
        "reshape": (
            lambda t: tsum(mul(reshape(t, (6, 5)), _proj((6, 5), seed))), x),
        "view_linear": (
            lambda t: tsum(mul(view_linear(t, Tensor(vl_w),
                                           Tensor(np.zeros((3, 2)))),
                               _proj((2, 3, 4, 2), seed))), vl_x),
        "view_linear_w": (
            lambda t: tsum(mul(view_linear(Tensor(vl_x), t, None),
                               _proj((2, 3, 4, 2), seed))), vl_w),
    }
    return cases


PRIMITIVES = sorted(_primitive_cases(0))


@pytest.mark.parametrize("name", PRIMITIVES)
@pytest.mark.parametrize("seed", range(10))
def test_primitive_gradients_match_finite_differences(name, seed):
    f, x0 = _primitive_cases(seed)[name]

    # An exactly-linear offset keeps every gradient coordinate away from zero,
    # where central differences sit below their own noise floor; a genuine
    # gradient bug still shows at full magnitude.
    def lifted(t):
        return add(f(t), mul(tsum(t), Tensor(0.5)))

    err = finite_difference_check(lifted, Tensor(x0, requires_grad=True), h=1e-5)
    assert err <= FD_TOL, f"{name} seed {seed}: rel error {err:.2e}"


class TestShapeErrors:
    def test_conv_shape_error_names_primitive(self):
        with pytest.raises(ShapeError, match="conv1d"):
            conv1d(Tensor(np.zeros((1, 2, 5))), Tensor(np.zeros((3, 4, 3))))

    def test_matmul_shape_error(self):
        with pytest.raises(ShapeError, match="matmul.*incompatible"):
            matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))

    def test_add_shape_error(self):
        with pytest.raises(ShapeError, match="add"):
            add(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4,))))

    def test_layernorm_shape_error(self):
        with pytest.raises(ShapeError, match="layernorm"):
            layernorm(Tensor(np.zeros((2, 5))), Tensor(np.ones(3)), Tensor(np.zeros(3)))


class TestAdam:
    def test_zero_gradient_leaves_params_unchanged(self):
        p = Tensor([1.0, -2.0], requires_grad=True)
        p.grad = np.zeros(2)
        state = adam_init([p], lr=0.1)
        adam_step([p], state)
        np.testing.assert_array_equal(p.data, [1.0, -2.0])

    def test_first_step_is_bias_corrected(self):
        # hand evaluation: m_hat = 1, v_hat = 1 -> delta = lr / (1 + eps)
        p = Tensor(1.0, requires_grad=True)
        p.grad = np.asarray(1.0)
        state = adam_init([p], lr=0.1)
        adam_step([p], state)
        expected = 1.0 - 0.1 / (1.0 + 1e-8)
        assert p.data == pytest.approx(expected, abs=1e-15)
        assert state.step == 1

    def test_repeated_gradient_step_not_larger(self):
        p = Tensor(0.0, requires_grad=True)
        state = adam_init([p], lr=0.05)
        p.grad = np.asarray(2.0)
        adam_step([p], state)
        first = abs(float(p.data))
        before = float(p.data)
        p.grad = np.asarray(2.0)
        adam_step([p], state)
        second = abs(float(p.data) - before)
        assert second <= first + 1e-12

    def test_missing_gradient_raises(self):
        p = Tensor(1.0, requires_grad=True)
        state = adam_init([p], lr=0.1)
        with pytest.raises(ValueError, match="no gradient"):
            adam_step([p], state)

    def test_zero_grads(self):
        p = Tensor(1.0, requires_grad=True)
        p.grad = np.asarray(3.0)
        zero_grads([p])
        assert p.grad is None


class TestFiniteDifferenceCheck:
    def test_linear_function_is_exact(self):
        x = Tensor(np.random.default_rng(0).standard_normal(6), requires_grad=True)
        assert finite_difference_check(tsum, x, h=1e-5) <= 1e-8

    def test_softmax_log_chain(self):
        x = Tensor(np.random.default_rng(1).standard_normal((2, 7)), requires_grad=True)
        proj = Tensor(np.random.default_rng(2).standard_normal((2, 7)))

        def f(t):
            return tsum(mul(log(softmax(t)), proj))

        assert finite_difference_check(f, x, h=1e-5) <= FD_TOL

    def test_h_out_of_range_rejected(self):
        x = Tensor([1.0], requires_grad=True)
        with pytest.raises(ValueError, match="h="):
            finite_difference_check(tsum, x, h=1e-2)
