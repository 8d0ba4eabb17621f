"""Forward-only NCHW numeric kernel.

Everything the scoring networks need: an immutable tensor wrapper that tracks
numeric overflow, seeded Gaussian sampling, convolution, the two batch-norm
variants, ReLU, max pooling and global average pooling.

Convolution is cross-correlation (no kernel flip) with zero "same" padding, so
a stride-``s`` layer maps ``H`` to ``ceil(H / s)``.  There is no bias term
anywhere; every convolution is followed by batch norm in the scoring networks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import StructuralError

#: Clamp for per-channel deviations that are exactly zero.
SIGMA_EPS = 1e-10

#: Value returned by :func:`frobenius_norm` for tensors holding non-finite entries.
OVERFLOW = math.inf

DTYPES = {"f64": np.float64, "f32": np.float32}

# im2col buffers larger than this are built batch-chunk by batch-chunk
_COLS_BYTES = 1 << 27


def make_rng(seed):
    """Seeded generator.

    The bit generator is fixed to PCG64 so a seed maps to the same sample
    stream on every platform; ``seed`` may be an int or a sequence of ints.
    """
    return np.random.Generator(np.random.PCG64(seed))


def gaussian(rng, shape, precision="f64"):
    """N(0, 1) samples, always drawn in float64 then cast.

    Drawing in float64 first keeps the 32- and 64-bit modes on identical draws.
    """
    return rng.standard_normal(shape).astype(DTYPES[precision], copy=False)


@dataclass(frozen=True, eq=False)
class Tensor:
    """Dense NCHW array plus an overflow flag.

    ``overflowed`` is set when the data holds any non-finite entry, or when
    any input of the op that produced it was already flagged.
    """

    data: np.ndarray
    overflowed: bool = False

    def __post_init__(self):
        data = self.data
        if not isinstance(data, np.ndarray):
            raise TypeError("Tensor data must be a numpy array")
        if data.ndim != 4:
            raise StructuralError(f"expected NCHW data, got shape {data.shape}")
        if data.dtype not in (np.float64, np.float32):
            raise TypeError(f"unsupported dtype {data.dtype}")
        data.flags.writeable = False
        flag = bool(self.overflowed) or not bool(np.isfinite(data).all())
        object.__setattr__(self, "overflowed", flag)

    @classmethod
    def from_array(cls, array, precision=None):
        """Copy ``array`` into a new tensor (1-3 dim inputs are left-padded to 4)."""
        arr = np.array(array, dtype=DTYPES[precision] if precision else None, copy=True)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        while arr.ndim < 4:
            arr = arr[None]
        return cls(arr)

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __len__(self):
        return self.data.shape[0]


def _wrap(data, *parents):
    return Tensor(data, overflowed=any(p.overflowed for p in parents))


@dataclass(frozen=True, eq=False)
class ConvKernel:
    """Convolution weights of shape ``(C_out, C_in // groups, k, k)``."""

    weights: np.ndarray
    stride: int = 1
    groups: int = 1

    def __post_init__(self):
        w = self.weights
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise StructuralError(f"kernel weights must be (C_out, C_in, k, k), got {w.shape}")
        if w.shape[2] % 2 == 0:
            raise StructuralError(f"kernel size must be odd, got {w.shape[2]}")
        if self.stride not in (1, 2):
            raise StructuralError(f"stride must be 1 or 2, got {self.stride}")
        if w.shape[0] % self.groups:
            raise StructuralError("C_out must be divisible by groups")

    @property
    def k(self):
        return self.weights.shape[2]

    @property
    def padding(self):
        return self.k // 2

    @property
    def in_channels(self):
        return self.weights.shape[1] * self.groups

    @property
    def out_channels(self):
        return self.weights.shape[0]

    @classmethod
    def sample(cls, rng, c_in, c_out, k, stride=1, groups=1, precision="f64"):
        """Kernel with N(0, 1) entries."""
        w = gaussian(rng, (c_out, c_in // groups, k, k), precision)
        return cls(w, stride=stride, groups=groups)


def _tap_range(k, s, h, ho):
    # kernel offsets that overlap the input somewhere; the rest only see padding
    p = k // 2
    return max(0, p - (ho - 1) * s), min(k - 1, h - 1 + p)


def _padded_windows(x, k, s, ho, wo):
    """Cropped kernel bounds and the strided (B, C, Ho, Wo, kk, kk) window view."""
    h, w_ = x.shape[2:]
    p = k // 2
    lo, hi = _tap_range(k, s, min(h, w_), min(ho, wo))
    if h != w_:
        lo, hi = 0, k - 1
    kk = hi - lo + 1
    pad_lo = p - lo
    pad_h = max(0, (ho - 1) * s + hi - p - (h - 1))
    pad_w = max(0, (wo - 1) * s + hi - p - (w_ - 1))
    xp = np.pad(x, ((0, 0), (0, 0), (pad_lo, pad_h), (pad_lo, pad_w)))
    win = sliding_window_view(xp, (kk, kk), axis=(2, 3))[:, :, ::s, ::s][:, :, :ho, :wo]
    return lo, hi, win


def _dense_conv(x, w, k, s, ho, wo):
    # one (C_out, C*kk*kk) x (C*kk*kk, B*Ho*Wo) product per batch chunk
    b, c = x.shape[:2]
    c_out = w.shape[0]
    out = np.empty((c_out, b, ho * wo), dtype=x.dtype)
    if k == 1:
        xs = x[:, :, ::s, ::s] if s > 1 else x
        cols = xs.reshape(b, c, ho * wo).transpose(1, 0, 2).reshape(c, b * ho * wo)
        np.matmul(w.reshape(c_out, c), cols, out=out.reshape(c_out, b * ho * wo))
        return out.reshape(c_out, b, ho, wo).transpose(1, 0, 2, 3)
    lo, hi, win = _padded_windows(x, k, s, ho, wo)
    kk = hi - lo + 1
    w2 = np.ascontiguousarray(w[:, :, lo:hi + 1, lo:hi + 1]).reshape(c_out, c * kk * kk)
    per_item = c * kk * kk * ho * wo * x.itemsize
    step = max(1, _COLS_BYTES // max(per_item, 1))
    for start in range(0, b, step):
        stop = min(b, start + step)
        n = stop - start
        cols = win[start:stop].transpose(1, 4, 5, 0, 2, 3).reshape(c * kk * kk, n * ho * wo)
        out[:, start:stop] = (w2 @ cols).reshape(c_out, n, ho * wo)
    return out.reshape(c_out, b, ho, wo).transpose(1, 0, 2, 3)


def _depthwise_conv(x, w, k, s, ho, wo):
    lo, hi, win = _padded_windows(x, k, s, ho, wo)
    out = np.zeros((x.shape[0], x.shape[1], ho, wo), dtype=x.dtype)
    for i in range(hi - lo + 1):
        for j in range(hi - lo + 1):
            out += win[..., i, j] * w[:, 0, lo + i, lo + j][None, :, None, None]
    return out


def conv2d(input, kernel):
    """Same-padded cross-correlation of an NCHW tensor.

    Dense kernels go through an im2col matrix product; depthwise kernels
    (``groups == C_in == C_out``) accumulate over the k*k taps directly.
    """
    x = input.data
    b, c, h, w_ = x.shape
    if c != kernel.in_channels:
        raise StructuralError(
            f"input has {c} channels, kernel expects {kernel.in_channels}")
    if h < 1 or w_ < 1:
        raise StructuralError("empty spatial extent")
    s, k, g = kernel.stride, kernel.k, kernel.groups
    ho, wo = -(-h // s), -(-w_ // s)
    weights = kernel.weights.astype(x.dtype, copy=False)
    with np.errstate(over="ignore", invalid="ignore"):
        if g == 1:
            out = _dense_conv(x, weights, k, s, ho, wo)
        elif g == c and kernel.out_channels == c:
            out = _depthwise_conv(x, weights, k, s, ho, wo)
        else:
            cg, og = c // g, kernel.out_channels // g
            out = np.concatenate([
                _dense_conv(x[:, i * cg:(i + 1) * cg], weights[i * og:(i + 1) * og], k, s, ho, wo)
                for i in range(g)], axis=1)
    overflowed = input.overflowed or not bool(np.isfinite(kernel.weights).all())
    return Tensor(out, overflowed=overflowed)


@dataclass(frozen=True, eq=False)
class BnStats:
    """Mini-batch statistics of one batch-norm layer.

    ``per_channel_sigma`` holds the (clamped) deviations actually divided by;
    ``mean_sigma_sq`` is the arithmetic mean of the unclamped squared deviations.
    """

    per_channel_sigma: np.ndarray
    mean_sigma_sq: float
    mode: str = "no_mean"
    channel_mean: np.ndarray | None = None
    degenerate: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def mean_sigma(self):
        return math.sqrt(self.mean_sigma_sq)

    @property
    def has_degenerate(self):
        return bool(self.degenerate.any())


BN_MODES = ("no_mean", "standard")


def bn_statistics(input, mode="no_mean"):
    """Per-channel mini-batch statistics without applying them."""
    if mode not in BN_MODES:
        raise ValueError(f"unknown BN mode {mode!r}")
    g = input.data
    b, c, h, w = g.shape
    n = b * h * w
    if n < 2:
        raise StructuralError(f"batch norm needs B*H*W >= 2, got {n}")
    with np.errstate(over="ignore", invalid="ignore"):
        if mode == "no_mean":
            mean = None
            var = np.einsum("bchw,bchw->c", g, g) / n
        else:
            mean = g.mean(axis=(0, 2, 3))
            centred = g - mean[None, :, None, None]
            var = np.einsum("bchw,bchw->c", centred, centred) / n
    var = var.astype(np.float64)
    sigma = np.sqrt(var)
    degenerate = sigma == 0
    sigma = np.where(degenerate, SIGMA_EPS, sigma)
    return BnStats(sigma, float(var.mean()), mode, mean, degenerate)


def bn_apply(input, stats):
    """Normalize ``input`` with previously measured statistics."""
    g = input.data
    if g.shape[1] != stats.per_channel_sigma.shape[0]:
        raise StructuralError("channel count does not match BN statistics")
    inv = (1.0 / stats.per_channel_sigma).astype(g.dtype)[None, :, None, None]
    with np.errstate(over="ignore", invalid="ignore"):
        if stats.channel_mean is not None:
            out = (g - stats.channel_mean.astype(g.dtype)[None, :, None, None]) * inv
        else:
            out = g * inv
    return _wrap(out, input)


def bn_forward(input, mode="no_mean"):
    """Batch-norm forward pass without affine parameters.

    In ``no_mean`` mode each channel is divided by its root mean square over
    (B, H, W); ``standard`` mode subtracts the channel mean first.  Channels
    with zero deviation are clamped to :data:`SIGMA_EPS` and flagged in
    ``stats.degenerate``.  ReLU is left to the caller.
    """
    stats = bn_statistics(input, mode)
    return bn_apply(input, stats), stats


def relu(input):
    return _wrap(np.maximum(input.data, 0), input)


def gap(input):
    """Global average pool to ``(B, C, 1, 1)``."""
    return _wrap(input.data.mean(axis=(2, 3), keepdims=True), input)


def max_pool2d(input, k=3, stride=2):
    """Same-padded max pooling; padding never wins the max."""
    x = input.data
    b, c, h, w = x.shape
    p = k // 2
    ho, wo = -(-h // stride), -(-w // stride)
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)), constant_values=-np.inf)
    out = np.full((b, c, ho, wo), -np.inf, dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            np.maximum(out, xp[:, :, i:i + stride * (ho - 1) + 1:stride,
                               j:j + stride * (wo - 1) + 1:stride], out=out)
    return _wrap(out, input)


def add(a, b):
    if a.shape != b.shape:
        raise StructuralError(f"cannot add {a.shape} and {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        return _wrap(a.data + b.data, a, b)


def scale(input, factor):
    """Multiply by a scalar (positive homogeneity rescaling in the log-domain paths)."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _wrap(input.data * input.data.dtype.type(factor), input)


def frobenius_norm(input):
    """sqrt of the sum of squares, or :data:`OVERFLOW` if any entry is non-finite."""
    x = input.data
    if input.overflowed or not np.isfinite(x).all():
        return OVERFLOW
    x = x.astype(np.float64, copy=False).ravel()
    peak = float(np.abs(x).max()) if x.size else 0.0
    if peak == 0.0:
        return 0.0
    y = x / peak
    return peak * math.sqrt(float(np.dot(y, y)))
