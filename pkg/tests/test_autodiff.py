import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parsinggait.autodiff import ShapeError, Tensor, grad_check, no_grad
from parsinggait.autodiff import functional as F
from parsinggait.autodiff.nn import BatchNorm, Conv2d
from parsinggait.autodiff.suite import run_suite
from parsinggait.autodiff.tensor import Parameter


def t64(a, grad=False):
    return Tensor(np.asarray(a, dtype=np.float64), requires_grad=grad, dtype=np.float64)


def naive_conv(x, w, stride, pad):
    B, C, H, W = x.shape
    Co, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    out = np.zeros((B, Co, Ho, Wo))
    for b in range(B):
        for o in range(Co):
            for i in range(Ho):
                for j in range(Wo):
                    for c in range(C):
                        for di in range(k):
                            for dj in range(k):
                                out[b, o, i, j] += xp[b, c, i * stride + di, j * stride + dj] * w[o, c, di, dj]
    return out


class TestConv2d:
    def test_identity_kernel(self, rng):
        x = rng.standard_normal((1, 1, 3, 3))
        np.testing.assert_array_equal(F.conv2d(t64(x), t64(np.ones((1, 1, 1, 1)))).data, x)

    def test_zero_weight(self, rng):
        x = t64(rng.standard_normal((1, 2, 4, 4)), grad=True)
        y = F.conv2d(x, t64(np.zeros((3, 2, 3, 3))), padding=1)
        assert not y.data.any()
        F.sum_over(y).backward()
        assert not x.grad.any()

    @pytest.mark.parametrize("stride,pad", [(1, 1), (2, 1), (1, 0), (2, 0)])
    def test_naive_oracle(self, rng, stride, pad):
        x = rng.standard_normal((1, 2, 4, 4))
        w = rng.standard_normal((3, 2, 3, 3))
        np.testing.assert_allclose(F.conv2d(t64(x), t64(w), stride, pad).data,
                                   naive_conv(x, w, stride, pad), atol=1e-12)

    @pytest.mark.parametrize("stride,pad,k", [(1, 1, 3), (2, 1, 3), (1, 0, 1), (2, 0, 1)])
    def test_nhwc_matches_nchw(self, rng, stride, pad, k):
        x = rng.standard_normal((2, 3, 6, 5))
        w = rng.standard_normal((4, 3, k, k))
        a = F.conv2d(t64(x), t64(w), stride, pad).data
        b = F.conv2d(t64(np.moveaxis(x, 1, -1).copy()), t64(w), stride, pad, layout="NHWC").data
        np.testing.assert_allclose(np.moveaxis(b, -1, 1), a, atol=1e-12)

    def test_output_size(self):
        y = F.conv2d(t64(np.zeros((1, 1, 7, 6))), t64(np.zeros((1, 1, 3, 3))), 2, 1)
        assert y.shape == (1, 1, (7 + 2 - 3) // 2 + 1, (6 + 2 - 3) // 2 + 1)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            F.conv2d(t64(np.zeros((1, 2, 4, 4))), t64(np.zeros((1, 3, 3, 3))))


class TestBatchNorm:
    def test_normalized_input_passes(self, rng):
        x = rng.standard_normal((64, 3))
        x = (x - x.mean(0)) / x.std(0)
        y = F.batch_norm(t64(x), t64(np.ones(3)), t64(np.zeros(3)), np.zeros(3), np.ones(3), True)
        np.testing.assert_allclose(y.data, x, rtol=1e-5, atol=1e-5)

    def test_beta_shift(self, rng):
        x = t64(rng.standard_normal((16, 4, 3, 3)))
        args = (np.zeros(4), np.ones(4), True)
        y0 = F.batch_norm(x, t64(np.ones(4)), t64(np.zeros(4)), *args).data
        beta = np.array([0.5, -1.0, 2.0, 0.0])
        y1 = F.batch_norm(x, t64(np.ones(4)), t64(beta), *args).data
        np.testing.assert_allclose(y1.mean(axis=(0, 2, 3)) - y0.mean(axis=(0, 2, 3)), beta, atol=1e-12)

    @pytest.mark.parametrize("axis", [1, -1])
    def test_moments(self, rng, axis):
        x = rng.standard_normal((8, 5, 4, 3)) * 3 + 2
        c = x.shape[axis]
        y = F.batch_norm(t64(x), t64(np.ones(c)), t64(np.zeros(c)), np.zeros(c), np.ones(c), True,
                         axis=axis).data
        red = tuple(i for i in range(4) if i != axis % 4)
        np.testing.assert_allclose(y.mean(axis=red), 0, atol=1e-10)
        np.testing.assert_allclose(y.var(axis=red), 1, atol=1e-3)

    def test_running_stats_and_eval(self, rng):
        bn = BatchNorm(2)
        x = Tensor(rng.standard_normal((10, 2)).astype(np.float32) + 3)
        bn(x)
        np.testing.assert_allclose(bn.running_mean, 0.1 * x.data.mean(0), rtol=1e-5)
        np.testing.assert_allclose(bn.running_var, 0.9 + 0.1 * x.data.var(0, ddof=1), rtol=1e-5)
        bn.eval()
        y = bn(x).data
        np.testing.assert_allclose(y, (x.data - bn.running_mean) / np.sqrt(bn.running_var + 1e-5),
                                   rtol=1e-5)

    def test_zero_batch(self):
        with pytest.raises(ValueError):
            F.batch_norm(t64(np.zeros((0, 2))), t64(np.ones(2)), t64(np.zeros(2)), np.zeros(2),
                         np.ones(2), True)


class TestElementwise:
    def test_relu_negative(self):
        x = t64([1.0, 2.0], grad=True)
        y = F.relu(F.scalar_mul(x, -1.0))
        assert not y.data.any()
        F.sum_over(y).backward()
        assert not x.grad.any()

    def test_max_tie_first_index(self):
        x = t64(np.full((2, 4), 3.0), grad=True)
        F.sum_over(F.max_over(x, 1)).backward()
        np.testing.assert_array_equal(x.grad, [[1, 0, 0, 0], [1, 0, 0, 0]])

    def test_matmul_oracle(self, rng):
        a, b = rng.standard_normal((3, 4)), rng.standard_normal((4, 2))
        ref = np.zeros((3, 2))
        for i in range(3):
            for j in range(2):
                for k in range(4):
                    ref[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(F.matmul(t64(a), t64(b)).data, ref, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            F.add(t64(np.zeros((2, 3))), t64(np.zeros((4,))))
        with pytest.raises(ShapeError):
            F.matmul(t64(np.zeros((2, 3))), t64(np.zeros((2, 3))))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 5), st.floats(-10, 10))
    def test_mean_of_constant(self, n, m, v):
        x = t64(np.full((n, m), v))
        np.testing.assert_allclose(F.mean_over(x, 0).data, v, rtol=1e-12, atol=1e-12)

    def test_max_ge_mean(self, rng):
        x = t64(rng.standard_normal((5, 7, 3)))
        assert np.all(F.max_over(x, 1).data >= F.mean_over(x, 1).data)

    def test_l2_unit_norm(self, rng):
        y = F.l2_normalize(t64(rng.standard_normal((6, 9))), -1).data
        np.testing.assert_allclose(np.linalg.norm(y, axis=-1), 1, atol=1e-6)

    def test_deterministic(self, rng):
        x = rng.standard_normal((2, 3, 8, 8)).astype(np.float32)
        w = rng.standard_normal((4, 3, 3, 3)).astype(np.float32)
        a = F.conv2d(Tensor(x), Tensor(w), 1, 1).data
        b = F.conv2d(Tensor(x), Tensor(w), 1, 1).data
        assert np.array_equal(a, b)


class TestSoftmaxCE:
    def test_uniform(self):
        assert float(F.softmax_cross_entropy(t64(np.zeros((3, 7))), [0, 3, 6]).data) == \
            pytest.approx(np.log(7), abs=1e-12)

    def test_margin_limit(self):
        logits = np.zeros((2, 3))
        logits[[0, 1], [1, 2]] = 60.0
        assert float(F.softmax_cross_entropy(t64(logits), [1, 2]).data) < 1e-20

    def test_direct_formula(self, rng):
        z = rng.standard_normal((4, 5))
        t = np.array([0, 4, 2, 2])
        ref = np.mean([-np.log(np.exp(z[i, t[i]]) / np.exp(z[i]).sum()) for i in range(4)])
        assert float(F.softmax_cross_entropy(t64(z), t).data) == pytest.approx(ref, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            F.softmax_cross_entropy(t64(np.zeros((2, 3))), [0, 3])


class TestBackward:
    def test_sum_gives_ones(self, rng):
        p = t64(rng.standard_normal((3, 2)), grad=True)
        F.sum_over(p).backward()
        np.testing.assert_array_equal(p.grad, 1.0)

    def test_square(self, rng):
        v = rng.standard_normal(5)
        p = t64(v, grad=True)
        F.sum_over(F.mul(p, p)).backward()
        np.testing.assert_allclose(p.grad, 2 * v)

    def test_accumulates(self, rng):
        p = t64(rng.standard_normal(4), grad=True)
        loss = F.sum_over(F.mul(F.exp(p), p))
        loss.backward()
        once = p.grad.copy()
        loss.backward()
        np.testing.assert_allclose(p.grad, 2 * once)

    def test_non_scalar_root(self):
        with pytest.raises(ShapeError):
            F.scalar_mul(t64(np.ones(3), grad=True), 2.0).backward()

    def test_no_grad(self):
        p = t64(np.ones(3), grad=True)
        with no_grad():
            y = F.sum_over(F.mul(p, p))
        assert not y.requires_grad

    def test_parameter_default_dtype(self):
        assert Parameter(np.zeros(2)).dtype == np.float32


class TestGradCheck:
    def test_linear_exact(self, rng):
        w = rng.standard_normal(6)
        res = grad_check(lambda x: F.sum_over(F.mul(x, Tensor(w))), t64(rng.standard_normal(6)))
        assert res.passed and res.max_rel_error < 1e-10

    def test_conv_relu_mean(self, rng):
        w = rng.standard_normal((2, 2, 3, 3))
        res = grad_check(lambda x: F.mean_over(F.relu(F.conv2d(x, t64(w), 1, 1))),
                         t64(rng.standard_normal((1, 2, 5, 5))))
        assert res.passed and res.max_rel_error < 1e-4

    def test_softmax(self, rng):
        res = grad_check(lambda x: F.softmax_cross_entropy(x, [1, 0, 2]), t64(rng.standard_normal((3, 4))))
        assert res.passed

    def test_detects_wrong_gradient(self):
        def bad(x):
            y = F.sum_over(F.mul(x, x))
            return Tensor._make(y.data, (x,), lambda g: (g * 3 * x.data,))
        assert not grad_check(bad, t64([1.0, 2.0]))

    def test_full_suite(self):
        entries = run_suite(seed=7)
        failed = [(e.name, e.shape, e.result.max_rel_error) for e in entries if not e.result.passed]
        assert not failed
        per_prim = {}
        for e in entries:
            per_prim.setdefault(e.name, set()).add(e.shape)
        # every primitive checked on at least three shapes
        for name in ("relu", "add", "mul", "scalar_mul", "concat", "max_over", "mean_over",
                     "l2_normalize", "matmul", "conv2d.input", "batch_norm", "softmax_cross_entropy"):
            assert len(per_prim[name]) >= 3, name


class TestModules:
    def test_conv_module_shapes(self, rng):
        conv = Conv2d(3, 5, 3, 2, 1, rng=rng, layout="NHWC")
        assert conv(Tensor(np.zeros((2, 9, 7, 3), np.float32))).shape == (2, 5, 4, 5)

    def test_state_dict_round_trip(self, rng):
        bn = BatchNorm(3)
        bn(Tensor(rng.standard_normal((4, 3)).astype(np.float32)))
        other = BatchNorm(3)
        other.load_state_dict(bn.state_dict())
        for k, v in bn.state_dict().items():
            assert np.array_equal(other.state_dict()[k], v)
