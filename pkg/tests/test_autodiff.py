import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdx.autodiff import (
    AdamState,
    BatchNormState,
    ComplexPair,
    Tensor,
    adam_step,
    amin,
    backward,
    batch_norm,
    bce_with_logits,
    broadcast_mul,
    check_gradients,
    concat_channels,
    conv2d_separable,
    hermitian_solve,
    reduce_mean,
    relu,
    take,
)
from mdx.autodiff.linalg import cholesky
from mdx.errors import ConfigError, ShapeError, SingularError, StateError

GRAD_TOL = 1e-5


def conv_oracle(x, dw, pw, dwb, pwb):
    """Direct nested-loop depthwise-separable convolution, zero 'same' padding."""
    H, W, C = x.shape
    k = dw.shape[0]
    p = k // 2
    mid = np.zeros((H, W, C))
    for i in range(H):
        for j in range(W):
            for c in range(C):
                acc = dwb[c]
                for a in range(k):
                    for b in range(k):
                        ii, jj = i + a - p, j + b - p
                        if 0 <= ii < H and 0 <= jj < W:
                            acc += x[ii, jj, c] * dw[a, b, c]
                mid[i, j, c] = acc
    out = np.zeros((H, W, pw.shape[1]))
    for i in range(H):
        for j in range(W):
            for o in range(pw.shape[1]):
                out[i, j, o] = pwb[o] + sum(mid[i, j, c] * pw[c, o] for c in range(C))
    return out


def gauss_solve(a, b):
    """Gaussian elimination with partial pivoting on complex scalars."""
    n = len(a)
    m = [list(map(complex, a[i])) + list(map(complex, b[i])) for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col:
                f = m[r][col] / m[col][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return np.array([[m[i][n + j] / m[i][i] for j in range(len(b[0]))] for i in range(n)])


def random_hpd(rng, n, shift=1.0):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return m.conj().T @ m + shift * np.eye(n)


class TestElementwise:
    def test_relu_value_and_subgradient(self):
        x = Tensor([-1.0, 0.0, 2.0], requires_grad=True)
        y = relu(x)
        np.testing.assert_array_equal(y.value, [0, 0, 2])
        backward(y.sum())
        np.testing.assert_array_equal(x.grad, [0, 0, 1])

    def test_concat_channels_shape(self):
        a = Tensor(np.zeros((12, 14, 2)))
        b = Tensor(np.ones((12, 14, 2)))
        assert concat_channels(a, b).shape == (12, 14, 4)

    def test_broadcast_mul_scalar(self):
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        s = Tensor(2.0, requires_grad=True)
        y = broadcast_mul(x, s)
        np.testing.assert_array_equal(y.value, 2 * x.value)
        backward(y.sum())
        assert s.grad == pytest.approx(x.value.sum())

    def test_broadcast_mul_rejects_leading_axis(self):
        with pytest.raises(ShapeError):
            broadcast_mul(Tensor(np.zeros((2, 3))), Tensor(np.zeros(2)))

    def test_add_shape_mismatch(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros(3)) + Tensor(np.zeros(4))

    def test_sum_grad_is_ones(self):
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        backward(x.sum())
        np.testing.assert_array_equal(x.grad, [1, 1, 1])

    def test_quadratic(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        backward((x * x).sum())
        np.testing.assert_array_equal(x.grad, [2, 4])

    def test_shared_subexpression_accumulates(self):
        x = Tensor([0.3, -1.2], requires_grad=True)

        def g(t):
            return t * t * t

        backward((g(x) + g(x)).sum())
        np.testing.assert_allclose(x.grad, 2 * 3 * x.value**2)

    def test_non_scalar_root(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ShapeError):
            backward(x * 2.0)

    def test_unreachable_param_has_no_grad(self):
        x = Tensor([1.0], requires_grad=True)
        unused = Tensor([1.0], requires_grad=True)
        backward((x * 3.0).sum())
        assert unused.grad is None

    @pytest.mark.parametrize("seed", range(10))
    def test_elementwise_gradcheck(self, seed):
        rng = np.random.default_rng(seed)
        a = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        b = Tensor(rng.standard_normal(4) + 3.0, requires_grad=True)
        c = Tensor(rng.standard_normal((3, 2)), requires_grad=True)

        def f():
            h = relu(a * b - a) / b + reduce_mean(a, axis=0)
            h = concat_channels(h, c)
            h = take(h, np.array([[0, 2], [5, 1]]), axis=1)
            return (amin(h, axis=-1) * 1.7).sum() + (h * h).mean()

        for err in check_gradients(f, [a, b, c]):
            assert err < GRAD_TOL


class TestSeparableConv:
    def test_zero_kernels_give_zero(self):
        x = Tensor(np.random.default_rng(0).standard_normal((5, 6, 3)))
        y = conv2d_separable(x, np.zeros((3, 3, 3)), np.zeros((3, 4)), np.zeros(3), np.zeros(4))
        assert np.all(y.value == 0)

    def test_identity_kernel_single_pixel(self):
        x = Tensor(np.array([[[0.37]]]))
        dw = np.zeros((3, 3, 1))
        dw[1, 1, 0] = 1.0
        y = conv2d_separable(x, dw, np.ones((1, 1)))
        np.testing.assert_array_equal(y.value, x.value)

    def test_even_kernel_rejected(self):
        with pytest.raises(ConfigError):
            conv2d_separable(Tensor(np.zeros((4, 4, 1))), np.zeros((2, 2, 1)), np.ones((1, 1)))

    def test_matches_nested_loop_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((4, 4, 2))
        dw, pw = rng.standard_normal((3, 3, 2)), rng.standard_normal((2, 3))
        dwb, pwb = rng.standard_normal(2), rng.standard_normal(3)
        y = conv2d_separable(Tensor(x), dw, pw, dwb, pwb).value
        ref = conv_oracle(x, dw, pw, dwb, pwb)
        assert np.max(np.abs(y - ref)) / np.max(np.abs(ref)) < 1e-12

    def test_accepts_4d_pointwise_kernel(self):
        rng = np.random.default_rng(1)
        x = Tensor(rng.standard_normal((4, 5, 2)))
        dw, pw = rng.standard_normal((3, 3, 2)), rng.standard_normal((2, 3))
        a = conv2d_separable(x, dw, pw).value
        b = conv2d_separable(x, dw, pw.reshape(1, 1, 2, 3)).value
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("seed", range(10))
    def test_gradcheck(self, seed):
        rng = np.random.default_rng(seed)
        x = Tensor(rng.standard_normal((2, 4, 5, 3)), requires_grad=True)
        dw = Tensor(rng.standard_normal((3, 3, 3)), requires_grad=True)
        pw = Tensor(rng.standard_normal((3, 2)), requires_grad=True)
        dwb = Tensor(rng.standard_normal(3), requires_grad=True)
        pwb = Tensor(rng.standard_normal(2), requires_grad=True)
        w = rng.standard_normal((2, 4, 5, 2))

        def f():
            return (conv2d_separable(x, dw, pw, dwb, pwb) * w).sum()

        for err in check_gradients(f, [x, dw, pw, dwb, pwb]):
            assert err < GRAD_TOL


class TestBatchNorm:
    def test_constant_input_gives_beta(self):
        x = Tensor(np.ones((3, 3, 2)) * np.array([2.0, -5.0]))
        beta = np.array([0.4, -0.1])
        y = batch_norm(x, np.array([1.5, 2.0]), beta, BatchNormState.fresh(2))
        np.testing.assert_allclose(y.value, np.broadcast_to(beta, (3, 3, 2)), atol=1e-12)

    def test_standardized_input_is_fixed_point(self):
        rng = np.random.default_rng(0)
        v = rng.standard_normal((50, 40, 1))
        v = (v - v.mean()) / v.std()
        state = BatchNormState.fresh(1)
        y = batch_norm(Tensor(v), np.ones(1), np.zeros(1), state)
        np.testing.assert_allclose(y.value, v / np.sqrt(1 + state.eps), rtol=1e-12)

    def test_train_output_statistics(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.standard_normal((6, 7, 4)) * 3.0 + 1.0)
        state = BatchNormState.fresh(4)
        y = batch_norm(x, np.ones(4), np.zeros(4), state).value
        assert np.all(np.abs(y.mean(axis=(0, 1))) < 1e-10)
        var = x.value.var(axis=(0, 1))
        np.testing.assert_allclose(y.var(axis=(0, 1)), var / (var + state.eps), rtol=1e-12)

    def test_infer_requires_running_stats(self):
        with pytest.raises(StateError):
            batch_norm(Tensor(np.zeros((2, 2, 1))), np.ones(1), np.zeros(1),
                       BatchNormState(), mode="infer")

    def test_running_stats_only_updated_in_train(self):
        state = BatchNormState.fresh(1)
        x = Tensor(np.full((2, 2, 1), 4.0))
        batch_norm(x, np.ones(1), np.zeros(1), state, mode="infer")
        assert state.mean[0] == 0.0
        batch_norm(x, np.ones(1), np.zeros(1), state, mode="train")
        assert state.mean[0] == pytest.approx(0.4)

    def test_gamma_grad_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        x = Tensor(rng.standard_normal((2, 2, 1)))
        gamma = Tensor([1.3], requires_grad=True)
        w = rng.standard_normal((2, 2, 1))

        def f():
            return (batch_norm(x, gamma, np.array([0.2]), BatchNormState.fresh(1),
                               update_stats=False) * w).sum()

        assert check_gradients(f, [gamma])[0] < 1e-6

    @pytest.mark.parametrize("seed", range(10))
    def test_gradcheck(self, seed):
        rng = np.random.default_rng(seed)
        x = Tensor(rng.standard_normal((3, 4, 5, 2)), requires_grad=True)
        gamma = Tensor(rng.standard_normal(2), requires_grad=True)
        beta = Tensor(rng.standard_normal(2), requires_grad=True)
        w = rng.standard_normal((3, 4, 5, 2))

        def f():
            y = batch_norm(x, gamma, beta, BatchNormState.fresh(2), update_stats=False)
            return (y * y * w).sum()

        for err in check_gradients(f, [x, gamma, beta]):
            assert err < GRAD_TOL


class TestHermitianSolve:
    def test_identity(self):
        B = np.array([[1 + 2j, -0.5j], [3.0, 0.25 - 1j]])
        X = hermitian_solve(ComplexPair.from_numpy(np.eye(2)), ComplexPair.from_numpy(B))
        np.testing.assert_allclose(X.numpy(), B)

    def test_diagonal(self):
        X = hermitian_solve(ComplexPair.from_numpy(np.diag([2.0, 5.0])),
                            ComplexPair.from_numpy(np.eye(2)))
        np.testing.assert_allclose(X.numpy(), np.diag([0.5, 0.2]))

    def test_against_gaussian_elimination(self):
        rng = np.random.default_rng(5)
        A = random_hpd(rng, 4)
        B = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        X = hermitian_solve(ComplexPair.from_numpy(A), ComplexPair.from_numpy(B)).numpy()
        ref = gauss_solve(A.tolist(), B.tolist())
        assert np.linalg.norm(X - ref) / np.linalg.norm(ref) < 1e-10

    def test_round_trip(self):
        rng = np.random.default_rng(6)
        A = random_hpd(rng, 4, shift=2.0)
        B = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        X = hermitian_solve(ComplexPair.from_numpy(A), ComplexPair.from_numpy(A @ B)).numpy()
        assert np.linalg.norm(X - B) / np.linalg.norm(B) < 1e-10

    def test_singular(self):
        A = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(SingularError):
            hermitian_solve(ComplexPair.from_numpy(A), ComplexPair.from_numpy(np.eye(2)))

    def test_batched_cholesky(self):
        rng = np.random.default_rng(8)
        A = np.stack([random_hpd(rng, 3) for _ in range(5)])
        L = cholesky(A)
        np.testing.assert_allclose(L @ np.swapaxes(L, -1, -2).conj(), A, atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_gradcheck(self, seed):
        rng = np.random.default_rng(seed)
        M = ComplexPair.from_numpy(
            rng.standard_normal((2, 4, 4)) + 1j * rng.standard_normal((2, 4, 4)), True)
        B = ComplexPair.from_numpy(
            rng.standard_normal((2, 4, 2)) + 1j * rng.standard_normal((2, 4, 2)), True)
        W = rng.standard_normal((2, 2, 4, 2))
        eye = ComplexPair.from_numpy(np.eye(4))

        def f():
            A = M.herm() @ M + eye
            X = hermitian_solve(A, B)
            return (X.re * W[0] + X.im * W[1]).sum()

        for err in check_gradients(f, [M.re, M.im, B.re, B.im]):
            assert err < GRAD_TOL


class TestBce:
    def test_zero_logit(self):
        assert bce_with_logits(Tensor([0.0]), [1]).value[0] == pytest.approx(1.0)

    def test_saturation(self):
        v = bce_with_logits(Tensor([40.0, 1e4, -1e4]), [1, 1, 0]).value
        assert np.all(np.isfinite(v))
        assert np.all(v < 1e-10)

    def test_three_quarters(self):
        logit = math.log(0.75 / 0.25)
        v = bce_with_logits(Tensor([logit]), [1]).value[0]
        assert v == pytest.approx(-math.log2(0.75), rel=1e-12)
        assert v == pytest.approx(0.415, abs=5e-4)

    def test_gradient_formula(self):
        z = Tensor([-2.0, 0.5, 3.0], requires_grad=True)
        t = np.array([1.0, 0.0, 1.0])
        backward(bce_with_logits(z, t).sum())
        sig = 1 / (1 + np.exp(-z.value))
        np.testing.assert_allclose(z.grad, (sig - t) / math.log(2))

    @pytest.mark.parametrize("seed", range(10))
    def test_gradcheck(self, seed):
        rng = np.random.default_rng(seed)
        z = Tensor(rng.standard_normal(8) * 4, requires_grad=True)
        t = rng.integers(0, 2, 8)
        assert check_gradients(lambda: bce_with_logits(z, t).sum(), [z])[0] < GRAD_TOL


class TestAdam:
    def test_zero_gradient_leaves_param(self):
        p = Tensor([1.5, -2.0])
        adam_step({"p": p}, {"p": np.zeros(2)}, AdamState())
        np.testing.assert_array_equal(p.value, [1.5, -2.0])

    def test_first_step_is_signed_lr(self):
        p = Tensor([1.0, 1.0, 1.0])
        adam_step({"p": p}, {"p": np.array([3.0, -0.2, 50.0])}, AdamState(lr=0.01))
        np.testing.assert_allclose(p.value, [0.99, 1.01, 0.99], rtol=1e-9)

    def test_two_step_hand_trace(self):
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
        x, m, v = 1.0, 0.0, 0.0
        for t in (1, 2):
            g = 2 * x
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            x = x - lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)

        p = Tensor([1.0])
        state = AdamState(lr=lr)
        for _ in range(2):
            adam_step({"p": p}, {"p": 2 * p.value}, state)
        assert abs(p.value[0] - x) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            adam_step({"p": Tensor([1.0, 2.0])}, {"p": np.zeros(3)}, AdamState())


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12))
def test_relu_grad_is_indicator(values):
    x = Tensor(np.array(values), requires_grad=True)
    backward(relu(x).sum())
    np.testing.assert_array_equal(x.grad, (np.array(values) > 0).astype(float))
