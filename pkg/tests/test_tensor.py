import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zennas import tensor as T
from zennas.errors import StructuralError


def naive_conv(x, w, stride, groups=1):
    """Six nested loops over (b, o, i, j, c, p/q); same zero padding."""
    b, c, h, wd = x.shape
    co, cg, k, _ = w.shape
    p = k // 2
    ho, wo = -(-h // stride), -(-wd // stride)
    og = co // groups
    out = np.zeros((b, co, ho, wo))
    for n in range(b):
        for o in range(co):
            g = o // og
            for i in range(ho):
                for j in range(wo):
                    acc = 0.0
                    for ci in range(cg):
                        for u in range(k):
                            for v in range(k):
                                r, s = i * stride + u - p, j * stride + v - p
                                if 0 <= r < h and 0 <= s < wd:
                                    acc += w[o, ci, u, v] * x[n, g * cg + ci, r, s]
                    out[n, o, i, j] = acc
    return out


def test_identity_kernel():
    x = T.Tensor(np.random.default_rng(0).standard_normal((2, 1, 5, 4)))
    y = T.conv2d(x, T.ConvKernel(np.ones((1, 1, 1, 1))))
    assert np.array_equal(y.data, x.data)


def test_ones_kernel_center_is_nine():
    y = T.conv2d(T.Tensor(np.ones((1, 1, 3, 3))), T.ConvKernel(np.ones((1, 1, 3, 3))))
    assert y.data[0, 0, 1, 1] == 9.0
    assert y.data[0, 0, 0, 0] == 4.0


def test_stride2_5x5_matches_naive_loops():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 2, 9, 9))
    w = rng.standard_normal((3, 2, 5, 5))
    got = T.conv2d(T.Tensor(x), T.ConvKernel(w, stride=2)).data
    ref = naive_conv(x, w, 2)
    assert got.shape == (2, 3, 5, 5)
    assert np.max(np.abs(got - ref)) <= 1e-10 * np.max(np.abs(ref))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), k=st.sampled_from([1, 3, 5, 7]), stride=st.sampled_from([1, 2]),
       h=st.integers(1, 9), w=st.integers(1, 9), c=st.integers(1, 4), depthwise=st.booleans())
def test_conv_matches_naive_loops(seed, k, stride, h, w, c, depthwise):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, c, h, w))
    if depthwise:
        wt, groups = rng.standard_normal((c, 1, k, k)), c
    else:
        wt, groups = rng.standard_normal((3, c, k, k)), 1
    got = T.conv2d(T.Tensor(x), T.ConvKernel(wt, stride=stride, groups=groups)).data
    ref = naive_conv(x, wt, stride, groups)
    assert got.shape == ref.shape
    assert np.allclose(got, ref, rtol=1e-10, atol=1e-10)


def test_grouped_conv_matches_naive_loops():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((1, 4, 6, 6))
    w = rng.standard_normal((6, 2, 3, 3))
    got = T.conv2d(T.Tensor(x), T.ConvKernel(w, groups=2)).data
    assert np.allclose(got, naive_conv(x, w, 1, 2), rtol=1e-10, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), c=st.floats(0.1, 10.0))
def test_conv_is_homogeneous(seed, c):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2, 3, 7, 7))
    kern = T.ConvKernel(rng.standard_normal((4, 3, 3, 3)))
    lhs = T.conv2d(T.Tensor(c * x), kern).data
    rhs = c * T.conv2d(T.Tensor(x), kern).data
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


def test_conv_channel_mismatch_raises():
    with pytest.raises(StructuralError):
        T.conv2d(T.Tensor(np.ones((1, 2, 4, 4))), T.ConvKernel(np.ones((1, 3, 3, 3))))


def test_even_kernel_rejected():
    with pytest.raises(StructuralError):
        T.ConvKernel(np.ones((1, 1, 2, 2)))


def test_tensor_rejects_wrong_rank():
    with pytest.raises(StructuralError):
        T.Tensor(np.ones((2, 3)))


# -- batch norm ---------------------------------------------------------------


def test_bn_sign_channel():
    c = 2.5
    x = np.full((2, 1, 2, 2), c)
    x[0, 0, 0, 0] = x[1, 0, 1, 1] = -c
    y, stats = T.bn_forward(T.Tensor(x))
    assert np.allclose(np.abs(y.data), 1.0)
    assert np.allclose(np.sign(y.data), np.sign(x))
    assert stats.per_channel_sigma[0] == pytest.approx(c)


def test_bn_zero_channel_is_flagged():
    x = np.random.default_rng(0).standard_normal((2, 2, 3, 3))
    x[:, 1] = 0
    y, stats = T.bn_forward(T.Tensor(x))
    assert np.all(y.data[:, 1] == 0)
    assert stats.degenerate.tolist() == [False, True]
    assert stats.has_degenerate


def test_bn_law_of_large_numbers():
    x = 3.0 * np.random.default_rng(7).standard_normal((16, 1, 64, 64))
    _, stats = T.bn_forward(T.Tensor(x))
    assert stats.per_channel_sigma[0] == pytest.approx(3.0, rel=0.02)


def test_bn_mean_sigma_is_channel_average():
    x = np.random.default_rng(2).standard_normal((3, 4, 5, 5)) * np.arange(1, 5)[None, :, None, None]
    _, stats = T.bn_forward(T.Tensor(x))
    per = np.array([np.mean(x[:, j] ** 2) for j in range(4)])
    assert stats.mean_sigma_sq == pytest.approx(per.mean(), rel=1e-12)


def test_bn_standard_mode_subtracts_mean():
    x = np.random.default_rng(4).standard_normal((4, 2, 4, 4)) + 5.0
    y, stats = T.bn_forward(T.Tensor(x), "standard")
    assert np.allclose(y.data.mean(axis=(0, 2, 3)), 0, atol=1e-12)
    assert np.allclose(y.data.std(axis=(0, 2, 3)), 1, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), scale=st.floats(1e-3, 1e3))
def test_bn_output_has_unit_rms(seed, scale):
    x = scale * np.random.default_rng(seed).standard_normal((3, 5, 4, 4))
    y, _ = T.bn_forward(T.Tensor(x))
    rms = np.sqrt(np.mean(y.data ** 2, axis=(0, 2, 3)))
    assert np.allclose(rms, 1.0, atol=1e-6)


def test_bn_needs_two_values():
    with pytest.raises(StructuralError):
        T.bn_forward(T.Tensor(np.ones((1, 1, 1, 1))))


# -- relu, gap, norm ----------------------------------------------------------


def test_relu_values():
    assert T.relu(T.Tensor.from_array([-1.0, 0.0, 2.0])).data.ravel().tolist() == [0, 0, 2]
    assert np.all(T.relu(T.Tensor(-np.ones((1, 2, 3, 3)))).data == 0)


@given(seed=st.integers(0, 2**31 - 1))
def test_relu_idempotent(seed):
    x = T.Tensor(np.random.default_rng(seed).standard_normal((2, 2, 3, 3)))
    once = T.relu(x)
    assert np.array_equal(T.relu(once).data, once.data)


def test_gap_values():
    assert T.gap(T.Tensor(np.full((1, 1, 3, 3), 4.0))).data.item() == 4.0
    assert T.gap(T.Tensor.from_array([[1.0, 2.0], [3.0, 4.0]])).data.item() == 2.5
    x = np.random.default_rng(5).standard_normal((2, 3, 5, 6))
    ref = np.array([[sum(x[b, c].ravel()) / 30 for c in range(3)] for b in range(2)])
    assert np.allclose(T.gap(T.Tensor(x)).data[:, :, 0, 0], ref, rtol=1e-12, atol=1e-15)


def test_frobenius_norm_values():
    assert T.frobenius_norm(T.Tensor(np.zeros((1, 1, 2, 2)))) == 0.0
    x = np.zeros((1, 2, 3, 3))
    x[0, 1, 2, 0] = -7.5
    assert T.frobenius_norm(T.Tensor(x)) == 7.5
    y = np.random.default_rng(6).standard_normal((2, 3, 4, 4))
    ref = math.sqrt(sum(v * v for v in y.ravel()))
    assert T.frobenius_norm(T.Tensor(y)) == pytest.approx(ref, rel=1e-12)


def test_frobenius_norm_does_not_overflow_for_large_finite_values():
    x = np.full((1, 1, 2, 2), 1e200)
    assert T.frobenius_norm(T.Tensor(x)) == pytest.approx(2e200)


def test_max_pool_ignores_padding():
    x = -np.ones((1, 1, 4, 4))
    y = T.max_pool2d(T.Tensor(x))
    assert y.shape == (1, 1, 2, 2)
    assert np.all(y.data == -1)


# -- overflow and determinism -------------------------------------------------


def test_overflow_flag_propagates():
    x = np.ones((1, 1, 3, 3), dtype=np.float32)
    x[0, 0, 0, 0] = np.inf
    t = T.Tensor(x)
    assert t.overflowed
    k = T.ConvKernel(np.ones((1, 1, 3, 3), dtype=np.float32))
    out = T.relu(T.bn_apply(T.conv2d(t, k), T.bn_statistics(T.Tensor(np.ones((1, 1, 3, 3))))))
    assert out.overflowed
    assert T.gap(out).overflowed
    assert T.frobenius_norm(out) == T.OVERFLOW


def test_f32_overflow_is_detected():
    x = T.Tensor(np.full((1, 1, 3, 3), 1e30, dtype=np.float32))
    y = T.conv2d(x, T.ConvKernel(np.full((1, 1, 3, 3), 1e10, dtype=np.float32)))
    assert y.overflowed


def test_seeded_ops_are_bit_identical():
    def run():
        rng = T.make_rng(11)
        x = T.Tensor(T.gaussian(rng, (2, 3, 8, 8)))
        y = T.conv2d(x, T.ConvKernel.sample(rng, 3, 5, 3, stride=2))
        y, _ = T.bn_forward(y)
        return T.relu(y).data

    assert np.array_equal(run(), run())


def test_gaussian_precisions_share_draws():
    a = T.gaussian(T.make_rng(3), (2, 2), "f64")
    b = T.gaussian(T.make_rng(3), (2, 2), "f32")
    assert b.dtype == np.float32
    assert np.array_equal(a.astype(np.float32), b)
