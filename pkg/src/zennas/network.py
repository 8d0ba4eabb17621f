"""Unrolling block descriptors into concrete layers.

Two views of the same architecture:

* :func:`expand_units` keeps residual shortcuts and SE modules; the budget
  counters and the latency benchmark walk it.
* :func:`strip_for_scoring` drops shortcuts, SE and the classifier and returns
  the plain conv chain that the expressivity scores run on.  Every conv in it
  is followed by BN and ReLU at scoring time.
"""
from __future__ import annotations

from dataclasses import dataclass

#: SE squeeze width as a fraction of the excited channels
SE_RATIO = 0.25


@dataclass(frozen=True)
class ConvLayer:
    in_ch: int
    out_ch: int
    kernel: int
    stride: int = 1
    groups: int = 1

    def out_size(self, h):
        return -(-h // self.stride)

    def macs(self, h, w):
        ho, wo = self.out_size(h), self.out_size(w)
        return self.kernel * self.kernel * (self.in_ch // self.groups) * self.out_ch * ho * wo

    @property
    def weight_count(self):
        return self.kernel * self.kernel * (self.in_ch // self.groups) * self.out_ch


@dataclass(frozen=True)
class PoolLayer:
    channels: int
    kernel: int = 3
    stride: int = 2

    @property
    def in_ch(self):
        return self.channels

    @property
    def out_ch(self):
        return self.channels

    def out_size(self, h):
        return -(-h // self.stride)


@dataclass(frozen=True)
class Unit:
    """One residual unit: main path, optional shortcut and optional SE.

    ``shortcut`` is ``None`` (no skip), ``"identity"`` or a projection
    :class:`ConvLayer`.  ``se_after`` is the main-path index whose output the
    SE module rescales; ``se_channels`` its width.
    """

    main: tuple
    shortcut: object = None
    se_after: int | None = None
    se_channels: int = 0

    @property
    def se_hidden(self):
        return max(1, int(self.se_channels * SE_RATIO)) if self.se_channels else 0


def _skip(c_in, c_out, stride, projection=True):
    if c_in == c_out and stride == 1:
        return "identity"
    return ConvLayer(c_in, c_out, 1, stride) if projection else None


def expand_units(arch):
    """All units of ``arch`` in forward order."""
    units = []
    for blk in arch.blocks:
        t, k, b = blk.block_type, blk.kernel, blk.bottleneck_ch
        for r in range(blk.layers):
            c_in = blk.in_ch if r == 0 else blk.out_ch
            s = blk.stride if r == 0 else 1
            out = blk.out_ch
            if t == "MaxPool":
                units.append(Unit((PoolLayer(out, 3, s),)))
            elif t == "Conv":
                units.append(Unit((ConvLayer(c_in, out, k, s),)))
            elif t == "Res":
                main = (ConvLayer(c_in, b, k, s), ConvLayer(b, out, k, 1))
                units.append(Unit(main, _skip(c_in, out, s),
                                  se_after=1 if blk.se else None,
                                  se_channels=out if blk.se else 0))
            elif t == "Btn":
                main = (ConvLayer(c_in, b, 1, 1), ConvLayer(b, b, k, s), ConvLayer(b, out, 1, 1))
                units.append(Unit(main, _skip(c_in, out, s),
                                  se_after=1 if blk.se else None,
                                  se_channels=b if blk.se else 0))
            elif t == "MB":
                hidden = b * blk.expansion
                for c1, c2, s2 in ((c_in, b, s), (b, out, 1)):
                    main = (ConvLayer(c1, hidden, 1, 1),
                            ConvLayer(hidden, hidden, k, s2, groups=hidden),
                            ConvLayer(hidden, c2, 1, 1))
                    units.append(Unit(main, _skip(c1, c2, s2, projection=False),
                                      se_after=1 if blk.se else None,
                                      se_channels=hidden if blk.se else 0))
            else:  # pragma: no cover - guarded by BlockDescriptor
                raise ValueError(t)
    return units


@dataclass(frozen=True)
class PlainNet:
    """Residual-free layer chain used for scoring."""

    layers: tuple
    in_channels: int
    input_resolution: int

    @property
    def convs(self):
        return [layer for layer in self.layers if isinstance(layer, ConvLayer)]

    @property
    def depth(self):
        return len(self.convs)

    @property
    def out_channels(self):
        return self.layers[-1].out_ch if self.layers else self.in_channels

    def output_resolution(self, h=None):
        h = self.input_resolution if h is None else h
        for layer in self.layers:
            h = layer.out_size(h)
        return h


def strip_for_scoring(arch):
    """Plain conv chain: shortcuts, SE modules and the classifier removed, blocks unrolled."""
    layers = []
    for unit in expand_units(arch):
        layers.extend(unit.main)
    return PlainNet(tuple(layers), arch.in_channels, arch.input_resolution)
