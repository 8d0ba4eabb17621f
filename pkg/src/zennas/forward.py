"""Random-weight forward passes.

:class:`ScoringNet` runs the stripped conv chain used by every expressivity
score, with or without batch norm and optionally with per-layer log-domain
rescaling.  :class:`FullNet` runs the complete network (shortcuts, SE and
classifier) and exists for wall-clock benchmarking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .network import ConvLayer, PoolLayer, expand_units, strip_for_scoring


def sample_kernel(layer, rng, precision):
    return T.ConvKernel.sample(rng, layer.in_ch, layer.out_ch, layer.kernel,
                               layer.stride, layer.groups, precision)


def reachable_taps(k, stride, h):
    """Kernel offsets ``[lo, hi]`` that ever overlap a size-``h`` input.

    With same padding, taps outside this range only ever multiply padding
    zeros, so their weights cannot influence the output.
    """
    p = k // 2
    ho = -(-h // stride)
    return max(0, p - (ho - 1) * stride), min(k - 1, h - 1 + p)


def sample_effective_kernel(layer, rng, precision, h):
    """Kernel whose unreachable taps are zero instead of sampled.

    The output is distributed exactly as with a fully sampled kernel, but
    small feature maps (late stages at low resolution) draw far fewer
    Gaussians.
    """
    lo, hi = reachable_taps(layer.kernel, layer.stride, h)
    if lo == 0 and hi == layer.kernel - 1:
        return sample_kernel(layer, rng, precision)
    w = np.zeros((layer.out_ch, layer.in_ch // layer.groups, layer.kernel, layer.kernel),
                 dtype=T.DTYPES[precision])
    n = hi - lo + 1
    w[:, :, lo:hi + 1, lo:hi + 1] = T.gaussian(
        rng, (layer.out_ch, layer.in_ch // layer.groups, n, n), precision)
    return T.ConvKernel(w, layer.stride, layer.groups)


@dataclass
class Trace:
    """Output of one forward pass plus what the scores need from inside it."""

    output: T.Tensor
    bn_stats: list = field(default_factory=list)
    log_scale: float = 0.0
    relu_codes: list | None = None
    overflow_layer: int | None = None


@dataclass(frozen=True, eq=False)
class ScoringNet:
    """A plain conv chain with sampled N(0, 1) weights.

    ``kernels[i]`` is ``None`` for pooling layers.
    """

    layers: tuple
    kernels: tuple
    in_channels: int
    precision: str = "f64"

    @classmethod
    def sample(cls, plain, rng, precision="f64", resolution=None):
        """Draw N(0, 1) weights for every conv of ``plain``.

        Taps that cannot reach a ``resolution``-sized input are left at zero
        (see :func:`sample_effective_kernel`).
        """
        h = plain.input_resolution if resolution is None else resolution
        kernels = []
        for layer in plain.layers:
            kernels.append(sample_effective_kernel(layer, rng, precision, h)
                           if isinstance(layer, ConvLayer) else None)
            h = layer.out_size(h)
        return cls(plain.layers, tuple(kernels), plain.in_channels, precision)

    @classmethod
    def from_arch(cls, arch, rng, precision="f64", resolution=None):
        return cls.sample(strip_for_scoring(arch), rng, precision, resolution)

    @property
    def depth(self):
        return sum(1 for k in self.kernels if k is not None)

    def forward(self, x, bn_mode=None, ref_batch=None, log_domain=False,
                collect_codes=False, relu_last=True):
        """Run the chain on ``x``.

        Parameters
        ----------
        bn_mode : None, "no_mean" or "standard"
            Batch norm after every conv (``None`` for the BN-free network).
        ref_batch : int, optional
            Measure BN statistics (and log-domain scales) on the first
            ``ref_batch`` samples only and apply them to the whole batch.
            This is how a clean batch and its perturbed copy share one
            normalization.
        log_domain : bool
            After every layer divide by the root mean square of the reference
            samples and accumulate ``log`` of the factor in ``Trace.log_scale``.
            Exact for the BN-free chain because conv is linear and ReLU
            positively homogeneous; keeps deep chains finite.
        collect_codes : bool
            Record the binary ReLU pattern of every sample at every layer.
        relu_last : bool
            Apply ReLU after the final conv.
        """
        n = len(x) if ref_batch is None else ref_batch
        trace = Trace(x, relu_codes=[] if collect_codes else None)
        last = max((i for i, k in enumerate(self.kernels) if k is not None), default=-1)
        conv_index = 0
        for i, (layer, kernel) in enumerate(zip(self.layers, self.kernels)):
            if isinstance(layer, PoolLayer):
                x = T.max_pool2d(x, layer.kernel, layer.stride)
                continue
            x = T.conv2d(x, kernel)
            if bn_mode is not None:
                ref = x if n == len(x) else T.Tensor(x.data[:n])
                stats = T.bn_statistics(ref, bn_mode)
                trace.bn_stats.append(stats)
                x = T.bn_apply(x, stats)
            if relu_last or i != last:
                x = T.relu(x)
                if collect_codes:
                    trace.relu_codes.append((x.data > 0).reshape(len(x), -1))
            conv_index += 1
            if x.overflowed and trace.overflow_layer is None:
                trace.overflow_layer = conv_index
            if log_domain and not x.overflowed:
                ref = x.data[:n]
                rms = math.sqrt(float(np.mean(np.square(ref, dtype=np.float64))))
                if rms > 0 and math.isfinite(rms):
                    x = T.scale(x, 1.0 / rms)
                    trace.log_scale += math.log(rms)
        trace.output = x
        return trace


# --------------------------------------------------------------------------
# full network for benchmarking


@dataclass(frozen=True, eq=False)
class FullNet:
    """Complete network with residual adds, SE modules and classifier."""

    units: tuple
    kernels: tuple
    classifier: np.ndarray | None
    in_channels: int
    precision: str

    def random_input(self, batch_size, resolution, seed=0):
        rng = T.make_rng(seed)
        return T.Tensor(T.gaussian(rng, (batch_size, self.in_channels, resolution, resolution),
                                   self.precision))

    def __call__(self, x):
        for unit, (main_k, short_k, se_w) in zip(self.units, self.kernels):
            identity = x
            n = len(unit.main)
            for i, (layer, k) in enumerate(zip(unit.main, main_k)):
                if isinstance(layer, PoolLayer):
                    x = T.max_pool2d(x, layer.kernel, layer.stride)
                    continue
                x = _bn(T.conv2d(x, k))
                if i < n - 1 or unit.shortcut is None:
                    x = T.relu(x)
                if se_w is not None and unit.se_after == i:
                    x = _se(x, *se_w)
            if unit.shortcut is not None:
                if unit.shortcut != "identity":
                    identity = _bn(T.conv2d(identity, short_k))
                x = T.relu(T.add(x, identity))
        if self.classifier is not None:
            pooled = T.gap(x).data[:, :, 0, 0]
            return pooled @ self.classifier
        return x


def _bn(x):
    # a single spatial position of a single sample has no batch statistics
    b, _, h, w = x.shape
    return T.bn_forward(x, "standard")[0] if b * h * w >= 2 else x


def _se(x, w1, w2):
    pooled = T.gap(x).data[:, :, 0, 0]
    hidden = np.maximum(pooled @ w1, 0)
    with np.errstate(over="ignore"):
        gate = 1.0 / (1.0 + np.exp(-(hidden @ w2)))
    return T.Tensor(x.data * gate[:, :, None, None].astype(x.dtype), x.overflowed)


def build_full_net(arch, seed=0, precision="f32"):
    """Sample every weight of ``arch`` from N(0, 1); SE weights are fan-in scaled."""
    rng = T.make_rng(seed)
    units, kernels = [], []
    for unit in expand_units(arch):
        main_k = []
        for layer in unit.main:
            main_k.append(sample_kernel(layer, rng, precision)
                          if isinstance(layer, ConvLayer) else None)
        short_k = (sample_kernel(unit.shortcut, rng, precision)
                   if isinstance(unit.shortcut, ConvLayer) else None)
        se_w = None
        if unit.se_after is not None:
            c, r = unit.se_channels, unit.se_hidden
            se_w = (T.gaussian(rng, (c, r), precision) / math.sqrt(c),
                    T.gaussian(rng, (r, c), precision) / math.sqrt(r))
        units.append(unit)
        kernels.append((tuple(main_k), short_k, se_w))
    classifier = None
    if arch.blocks and arch.num_classes:
        classifier = T.gaussian(rng, (arch.out_channels, arch.num_classes), precision)
    return FullNet(tuple(units), tuple(kernels), classifier, arch.in_channels, precision)
