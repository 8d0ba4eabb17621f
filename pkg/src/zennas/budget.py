"""Inference-budget accounting: FLOPs and parameter counters, latency model, gate.

FLOPs are multiply-accumulates (one MAC counts as one FLOP).  Both counters
walk the full network: residual projections, SE modules and the classifier
are included; BN and ReLU cost no FLOPs, and each BN contributes two
parameters per channel.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .arch import Architecture
from .errors import ConfigError
from .network import ConvLayer, expand_units

# --------------------------------------------------------------------------
# analytic counters


def _walk(arch, resolution, include_se):
    """Yield (macs, params) per unit, tracking the spatial size."""
    h = arch.input_resolution if resolution is None else resolution
    for unit in expand_units(arch):
        h_in = h
        macs = params = 0
        for i, layer in enumerate(unit.main):
            if isinstance(layer, ConvLayer):
                macs += layer.macs(h, h)
                params += layer.weight_count + 2 * layer.out_ch
            h = layer.out_size(h)
            if include_se and unit.se_after == i:
                c, r = unit.se_channels, unit.se_hidden
                macs += 2 * c * r
                params += 2 * c * r + c + r
        if isinstance(unit.shortcut, ConvLayer):
            macs += unit.shortcut.macs(h_in, h_in)
            params += unit.shortcut.weight_count + 2 * unit.shortcut.out_ch
        yield macs, params


def count_flops(arch, resolution=None, include_se=True, include_classifier=True):
    """Multiply-accumulate count of one forward pass at ``resolution``.

    ``resolution`` defaults to ``arch.input_resolution``.  The classifier is
    the ``out_channels x num_classes`` fully connected layer after pooling.
    """
    total = sum(m for m, _ in _walk(arch, resolution, include_se))
    if include_classifier and arch.blocks:
        total += arch.out_channels * arch.num_classes
    return int(total)


def count_params(arch, include_se=True, include_classifier=True):
    """Conv weights, BN scale/shift pairs, SE weights and biases, classifier."""
    total = sum(p for _, p in _walk(arch, None, include_se))
    if include_classifier and arch.blocks and arch.num_classes:
        total += arch.out_channels * arch.num_classes + arch.num_classes
    return int(total)


# --------------------------------------------------------------------------
# latency cost model

COST_MODEL_COLUMNS = ("block_type", "kernel", "c_in", "c_out", "resolution", "stride", "us")


def block_copies(arch, resolution=None):
    """Every repeated copy of every block as a single-layer descriptor.

    Yields ``(descriptor, input_resolution)``; the copies chain exactly as
    the network runs them.
    """
    h = arch.input_resolution if resolution is None else resolution
    for blk in arch.blocks:
        for r in range(blk.layers):
            copy = replace(blk, in_ch=blk.in_ch if r == 0 else blk.out_ch,
                           stride=blk.stride if r == 0 else 1, layers=1)
            yield copy, h
            h = -(-h // copy.stride)


@dataclass
class CostModel:
    """Per-block latency table with log-space interpolation and an analytic fallback.

    ``table`` maps ``(block_type, kernel, c_in, c_out, resolution, stride)``
    to microseconds.  Lookups hit the exact row first, then interpolate
    linearly in (log c_in, log c_out, log resolution) among rows sharing
    block type, kernel and stride.  Points outside the convex hull of those
    rows use ``flops / (throughput_gflops_per_ms * 1e9) + overhead_ms`` when
    ``throughput_gflops_per_ms`` is set.
    """

    table: dict = field(default_factory=dict)
    throughput_gflops_per_ms: float | None = None
    overhead_ms: float = 0.0

    def __post_init__(self):
        for key, us in self.table.items():
            if len(key) != 6 or not us > 0:
                raise ConfigError(f"bad cost model row {key} -> {us}")
        if self.throughput_gflops_per_ms is not None and not self.throughput_gflops_per_ms > 0:
            raise ConfigError("throughput must be positive")
        if self.overhead_ms < 0:
            raise ConfigError("overhead must be non-negative")
        self._interp = {}

    @property
    def has_fallback(self):
        return self.throughput_gflops_per_ms is not None

    @classmethod
    def fallback_only(cls, throughput_gflops_per_ms, overhead_ms=0.0):
        return cls({}, throughput_gflops_per_ms, overhead_ms)

    @classmethod
    def load(cls, path, throughput_gflops_per_ms=None, overhead_ms=0.0):
        """Read a CSV with header ``block_type,kernel,c_in,c_out,resolution,stride,us``.

        Blank lines and lines starting with ``#`` are skipped.
        """
        table = {}
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
        reader = csv.DictReader(lines)
        if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != COST_MODEL_COLUMNS:
            raise ConfigError(f"{path}: header must be {','.join(COST_MODEL_COLUMNS)}")
        for n, row in enumerate(reader, start=2):
            try:
                key = (row["block_type"].strip(), int(row["kernel"]), int(row["c_in"]),
                       int(row["c_out"]), int(row["resolution"]), int(row["stride"]))
                us = float(row["us"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: row {n}: {exc}") from None
            if not us > 0:
                raise ConfigError(f"{path}: row {n}: cost must be positive")
            table[key] = us
        return cls(table, throughput_gflops_per_ms, overhead_ms)

    def save(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COST_MODEL_COLUMNS)
            for key, us in sorted(self.table.items()):
                w.writerow([*key, repr(us)])

    def _interpolator(self, group):
        if group not in self._interp:
            rows = [(k, us) for k, us in self.table.items()
                    if (k[0], k[1], k[5]) == group]
            interp = None
            if len(rows) >= 4:
                from scipy.interpolate import LinearNDInterpolator
                from scipy.spatial import QhullError

                pts = np.log([[k[2], k[3], k[4]] for k, _ in rows])
                vals = np.log([us for _, us in rows])
                try:
                    interp = LinearNDInterpolator(pts, vals)
                except QhullError:  # flat point set, no hull volume
                    interp = None
            self._interp[group] = interp
        return self._interp[group]

    def block_ms(self, block, resolution):
        """Latency of one single-copy block at ``resolution``."""
        key = (block.block_type, block.kernel, block.in_ch, block.out_ch, resolution, block.stride)
        if key in self.table:
            return self.table[key] / 1000.0
        interp = self._interpolator((block.block_type, block.kernel, block.stride))
        if interp is not None:
            val = float(interp(np.log([[block.in_ch, block.out_ch, resolution]]))[0])
            if math.isfinite(val):
                return math.exp(val) / 1000.0
        if not self.has_fallback:
            raise ConfigError(f"no cost entry for {key} and no fallback throughput configured")
        flops = count_flops(Architecture((block,), resolution, 0), include_classifier=False)
        return flops / (self.throughput_gflops_per_ms * 1e9) + self.overhead_ms


def estimate_latency(arch, cost_model):
    """Predicted latency in milliseconds: the sum over every block copy."""
    if cost_model is None:
        raise ConfigError("no cost model configured")
    if not cost_model.table and not cost_model.has_fallback:
        raise ConfigError("cost model is empty and has no fallback")
    return sum(cost_model.block_ms(b, h) for b, h in block_copies(arch))


def bench_latency(arch, batch_size=1, repeats=10, warmup=2, resolution=None,
                  precision="f32", seed=0):
    """Median host wall-clock of a full forward pass, in milliseconds.

    Runs the complete network (residual adds and SE included) on random
    weights.  Not thread safe in spirit: concurrent benchmarks disturb each
    other's timings, so call it serially.
    """
    from .forward import build_full_net

    net = build_full_net(arch, seed=seed, precision=precision)
    res = arch.input_resolution if resolution is None else resolution
    x = net.random_input(batch_size, res, seed=seed + 1)
    for _ in range(warmup):
        net(x)
    times = []
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        net(x)
        times.append((time.perf_counter() - t0) * 1000.0)
    return float(np.median(times))


# --------------------------------------------------------------------------
# budget gate


@dataclass(frozen=True)
class Budget:
    """Upper bounds gating search candidates; unset bounds are ignored."""

    max_flops: float | None = None
    max_params: float | None = None
    max_latency_ms: float | None = None
    max_layers: int | None = None

    def __post_init__(self):
        bounds = (self.max_flops, self.max_params, self.max_latency_ms, self.max_layers)
        if all(b is None for b in bounds):
            raise ConfigError("a budget needs at least one bound")
        for name, b in zip(("max_flops", "max_params", "max_latency_ms", "max_layers"), bounds):
            if b is not None and b < 0:
                raise ConfigError(f"{name} must be non-negative")

    def to_dict(self):
        return {"max_flops": self.max_flops, "max_params": self.max_params,
                "max_latency_ms": self.max_latency_ms, "max_layers": self.max_layers}

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"max_flops", "max_params", "max_latency_ms", "max_layers"}
        if unknown:
            raise ConfigError(f"unknown budget fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class BudgetReport:
    ok: bool
    violations: tuple = ()
    measured: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "within budget" if self.ok else "; ".join(self.violations)


def within_budget(arch, budget, cost_model=None):
    """Check every configured bound; the report lists each violated one."""
    violations, measured = [], {}
    if budget.max_layers is not None:
        measured["layers"] = arch.depth
        if arch.depth > budget.max_layers:
            violations.append(f"layers {arch.depth} > {budget.max_layers}")
    if budget.max_flops is not None:
        measured["flops"] = f = count_flops(arch)
        if f > budget.max_flops:
            violations.append(f"flops {f} > {budget.max_flops:g}")
    if budget.max_params is not None:
        measured["params"] = p = count_params(arch)
        if p > budget.max_params:
            violations.append(f"params {p} > {budget.max_params:g}")
    if budget.max_latency_ms is not None:
        measured["latency_ms"] = lat = estimate_latency(arch, cost_model)
        if lat > budget.max_latency_ms:
            violations.append(f"latency {lat:.4g} ms > {budget.max_latency_ms:g} ms")
    return BudgetReport(not violations, tuple(violations), measured)
