"""Forward-only architecture scores.

* :func:`zen_score` - log of the finite-difference output sensitivity of the
  stripped, BN-equipped network plus the summed log BN deviations.
* :func:`phi_score` - log expected input-gradient norm of the BN-free network,
  estimated by the same finite difference divided by the step size.
* :func:`naswot_score` - log-determinant of the binary ReLU-pattern kernel.
* :func:`theorem1_ratio` - the BN-rescaling identity check between a BN
  network and its BN-free twin on shared weights.
* :func:`fig2_families` - depth and width sweeps over plain conv nets.

All expectations over weights, inputs and perturbations are Monte Carlo:
one mini-batch of ``batch_size`` samples per repeat and ``repeats``
independent weight draws.  Each repeat gets its own child stream of
``numpy.random.SeedSequence(seed)``, so results depend only on the seed.
"""
from __future__ import annotations

import hashlib
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import tensor as T
from .arch import Architecture, BlockDescriptor
from .errors import DegenerateScore
from .forward import ScoringNet
from .network import strip_for_scoring

PROXIES = ("zen", "phi", "naswot", "flops", "params", "random")

# above this share of clamped BN channels the score is flagged as unreliable
DEGENERATE_WARN_RATE = 0.01


@dataclass(frozen=True)
class ScoreConfig:
    """Knobs shared by every score.

    ``resolution`` overrides the architecture's input resolution.
    ``log_domain`` chooses per-layer rescaling for BN-free passes; ``None``
    means on for ``f64`` and off (literal, overflow-prone) for ``f32``.
    """

    alpha: float = 0.01
    batch_size: int = 16
    repeats: int = 4
    resolution: int | None = None
    bn_mode: str = "no_mean"
    precision: str = "f64"
    seed: int = 0
    log_domain: bool | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.batch_size < 1 or self.repeats < 1:
            raise ValueError("batch_size and repeats must be >= 1")
        if self.bn_mode not in T.BN_MODES:
            raise ValueError(f"bn_mode must be one of {T.BN_MODES}")
        if self.precision not in T.DTYPES:
            raise ValueError(f"precision must be one of {tuple(T.DTYPES)}")
        if self.resolution is not None and self.resolution < 1:
            raise ValueError("resolution must be positive")

    @property
    def use_log_domain(self):
        return self.precision == "f64" if self.log_domain is None else self.log_domain

    def streams(self):
        """One independent generator per repeat."""
        return [T.make_rng(s) for s in np.random.SeedSequence(self.seed).spawn(self.repeats)]


@dataclass
class ScoreResult:
    """A score with its Monte Carlo spread.

    ``value`` is the mean of the per-repeat values; ``std_error`` their
    standard deviation over ``sqrt(repeats)`` (``nan`` for one repeat).
    An overflowed result carries ``value = inf``.
    """

    value: float
    std_error: float = math.nan
    overflowed: bool = False
    wall_time: float = 0.0
    per_layer_log_sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    proxy: str = "zen"
    seed: int = 0
    per_repeat: tuple = ()
    degenerate_rate: float = 0.0

    def as_row(self, arch_id):
        return {"arch_id": arch_id, "proxy": self.proxy, "value": self.value,
                "std_error": self.std_error, "wall_time": self.wall_time, "seed": self.seed}


def _summarize(values, proxy, cfg, t0, overflowed=False, log_sigma=None, degenerate_rate=0.0):
    vals = np.asarray(values, dtype=np.float64)
    if overflowed:
        value, err = T.OVERFLOW, math.nan
    else:
        value = float(vals.mean())
        finite = np.isfinite(vals).all()
        err = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 and finite else math.nan
    return ScoreResult(value, err, overflowed, time.perf_counter() - t0,
                       np.zeros(0) if log_sigma is None else log_sigma,
                       proxy, cfg.seed, tuple(float(v) for v in vals), degenerate_rate)


def _input_shape(plain, cfg, batch):
    res = cfg.resolution or plain.input_resolution
    return (batch, plain.in_channels, res, res)


def _perturbed_pair(plain, cfg, rng, bn_mode, log_domain):
    """Sample weights, x and eps; run x and x + alpha*eps with shared normalization.

    Returns the per-sample Frobenius norms of the output difference, and the
    trace of the joint pass.
    """
    net = ScoringNet.sample(plain, rng, cfg.precision, cfg.resolution)
    shape = _input_shape(plain, cfg, cfg.batch_size)
    x = T.gaussian(rng, shape, cfg.precision)
    eps = T.gaussian(rng, shape, cfg.precision)
    both = np.concatenate([x, x + x.dtype.type(cfg.alpha) * eps])
    trace = net.forward(T.Tensor(both), bn_mode=bn_mode, ref_batch=cfg.batch_size,
                        log_domain=log_domain)
    if trace.output.overflowed:
        return None, trace
    out = trace.output.data.astype(np.float64, copy=False)
    diff = out[:cfg.batch_size] - out[cfg.batch_size:]
    norms = np.sqrt(np.einsum("bi,bi->b", *(2 * [diff.reshape(cfg.batch_size, -1)])))
    return norms, trace


def _log_delta(norms, arch_note):
    delta = float(norms.mean())
    if not delta > 0:
        raise DegenerateScore(f"{arch_note}: zero output response (all channels dead)")
    return math.log(delta)


def _check_scorable(plain):
    if plain.depth == 0:
        raise DegenerateScore("architecture has no conv layer to score")


def zen_score(arch, cfg=ScoreConfig()):
    """Zen-Score of ``arch``.

    Residual links, SE modules and the classifier are removed, every conv
    gets BN (``cfg.bn_mode``) and ReLU, all weights and inputs are N(0, 1).
    Per repeat::

        value = log(mean_b ||f(x_b) - f(x_b + alpha * eps_b)||_F) + sum_i log(sigma_bar_i)

    on the pre-pooling feature map, where ``sigma_bar_i`` is the root of the
    channel-averaged squared BN deviation of layer ``i``.  The perturbed pass
    is normalized with the statistics measured on the clean batch, so the
    difference is a true finite difference of one fixed function.

    Raises
    ------
    DegenerateScore
        If the network output does not react to the perturbation at all.
    """
    t0 = time.perf_counter()
    plain = strip_for_scoring(arch) if isinstance(arch, Architecture) else arch
    _check_scorable(plain)
    values, sigmas, degenerate, channels = [], [], 0, 0
    for rng in cfg.streams():
        norms, trace = _perturbed_pair(plain, cfg, rng, cfg.bn_mode, False)
        if norms is None:
            return _summarize([T.OVERFLOW], "zen", cfg, t0, overflowed=True)
        log_sigma = np.array([0.5 * math.log(s.mean_sigma_sq) if s.mean_sigma_sq > 0 else -math.inf
                              for s in trace.bn_stats])
        if not np.isfinite(log_sigma).all():
            raise DegenerateScore("a BN layer received an all-zero input")
        degenerate += sum(int(s.degenerate.sum()) for s in trace.bn_stats)
        channels += sum(s.degenerate.size for s in trace.bn_stats)
        values.append(_log_delta(norms, "zen") + float(log_sigma.sum()))
        sigmas.append(log_sigma)
    rate = degenerate / max(channels, 1)
    if rate > DEGENERATE_WARN_RATE:
        warnings.warn(f"{rate:.1%} of BN channels were degenerate; increase batch or resolution",
                      RuntimeWarning, stacklevel=2)
    return _summarize(values, "zen", cfg, t0, log_sigma=np.mean(sigmas, axis=0),
                      degenerate_rate=rate)


def phi_score(arch, cfg=ScoreConfig(), with_bn=False):
    """Log expected input-gradient norm of the stripped network.

    Per repeat ``log(mean_b ||f(x_b) - f(x_b + alpha * eps_b)||_F) - log(alpha)``
    on the BN-free chain (or with BN after every conv when ``with_bn``).
    In log-domain mode every layer is renormalized and the factor carried as
    a log, so depth never overflows; in literal ``f32`` mode overflow is
    reported as ``value = inf`` with ``overflowed = True``.
    """
    t0 = time.perf_counter()
    plain = strip_for_scoring(arch) if isinstance(arch, Architecture) else arch
    _check_scorable(plain)
    bn_mode = cfg.bn_mode if with_bn else None
    log_domain = cfg.use_log_domain and not with_bn
    values = []
    for rng in cfg.streams():
        norms, trace = _perturbed_pair(plain, cfg, rng, bn_mode, log_domain)
        if norms is None:
            return _summarize([T.OVERFLOW], "phi", cfg, t0, overflowed=True)
        values.append(_log_delta(norms, "phi") + trace.log_scale - math.log(cfg.alpha))
    return _summarize(values, "phi", cfg, t0)


def relu_kernel(codes):
    """Kernel with entries N_A - Hamming(c_a, c_b), summed over layers.

    ``codes`` is a list of ``(B, units)`` boolean arrays.
    """
    b = codes[0].shape[0]
    k = np.zeros((b, b))
    for c in codes:
        c = c.astype(np.float64)
        k += c @ c.T + (1.0 - c) @ (1.0 - c).T
    return k


def logdet_or_neginf(k):
    """``log|det k|`` via LU, or ``-inf`` when ``|det k|`` is below 1e-300."""
    sign, logdet = np.linalg.slogdet(k)
    if sign == 0 or not math.isfinite(logdet) or logdet < math.log(1e-300):
        return -math.inf
    return float(logdet)


def naswot_score(arch, cfg=ScoreConfig()):
    """Log-determinant of the binary activation kernel over one mini-batch.

    Codes are the ReLU on/off patterns of every layer of the stripped
    network with BN (``cfg.bn_mode``).  A singular kernel scores ``-inf``.
    """
    if cfg.batch_size < 2:
        raise ValueError("NASWOT needs batch_size >= 2")
    t0 = time.perf_counter()
    plain = strip_for_scoring(arch) if isinstance(arch, Architecture) else arch
    _check_scorable(plain)
    values = []
    for rng in cfg.streams():
        net = ScoringNet.sample(plain, rng, cfg.precision, cfg.resolution)
        x = T.gaussian(rng, _input_shape(plain, cfg, cfg.batch_size), cfg.precision)
        trace = net.forward(T.Tensor(x), bn_mode=cfg.bn_mode, collect_codes=True)
        values.append(logdet_or_neginf(relu_kernel(trace.relu_codes)))
    vals = np.asarray(values)
    if np.isneginf(vals).any():
        res = _summarize(values, "naswot", cfg, t0)
        res.value, res.std_error = -math.inf, math.nan
        return res
    return _summarize(values, "naswot", cfg, t0)


# --------------------------------------------------------------------------
# BN-rescaling identity


@dataclass
class Theorem1Terms:
    """Per-repeat logs: ``log prod sigma_bar_t^2 + log E||x_L||^2`` and ``log E||x_bar_L||^2``."""

    numerator: np.ndarray
    denominator: np.ndarray

    @property
    def ratio(self):
        if not len(self.numerator):
            return 1.0
        return float(math.exp(logsumexp(self.numerator) - logsumexp(self.denominator)))


def theorem1_terms(arch, cfg=ScoreConfig()):
    """Paired BN / BN-free forward passes on shared weights and inputs.

    The BN network uses ``no_mean`` normalization with statistics of its own
    batch; the BN-free twin runs in log-domain unless ``cfg.log_domain`` is
    explicitly false.
    """
    plain = strip_for_scoring(arch) if isinstance(arch, Architecture) else arch
    if plain.depth == 0:
        return Theorem1Terms(np.zeros(0), np.zeros(0))
    log_domain = cfg.use_log_domain
    num, den = [], []
    for rng in cfg.streams():
        net = ScoringNet.sample(plain, rng, cfg.precision, cfg.resolution)
        x = T.Tensor(T.gaussian(rng, _input_shape(plain, cfg, cfg.batch_size), cfg.precision))
        with_bn = net.forward(x, bn_mode="no_mean")
        free = net.forward(x, bn_mode=None, log_domain=log_domain)
        if free.output.overflowed:
            at = free.overflow_layer
            raise DegenerateScore(
                f"BN-free network overflows at layer {at}; truncate to depth {at - 1} "
                "or use log-domain mode")
        if with_bn.output.overflowed:
            raise DegenerateScore("BN network overflowed")
        sq_bn = T.frobenius_norm(with_bn.output) ** 2
        sq_free = T.frobenius_norm(free.output) ** 2
        if sq_bn == 0 or sq_free == 0:
            raise DegenerateScore("network output is identically zero")
        num.append(sum(math.log(s.mean_sigma_sq) for s in with_bn.bn_stats) + math.log(sq_bn))
        den.append(math.log(sq_free) + 2.0 * free.log_scale)
    return Theorem1Terms(np.array(num), np.array(den))


def theorem1_ratio(arch, cfg=ScoreConfig()):
    """``(prod_t sigma_bar_t^2) E||x_L||^2 / E||x_bar_L||^2``, expectations over repeats.

    Exactly 1 for a network without layers.
    """
    return theorem1_terms(arch, cfg).ratio


# --------------------------------------------------------------------------
# plain-network families


def vanilla_arch(depth, width=64, in_channels=3, kernel=3, resolution=32):
    """``depth`` stacked stride-1 conv layers of equal width."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    blocks = []
    if depth >= 1:
        blocks.append(BlockDescriptor("Conv", kernel, in_channels, width))
    if depth >= 2:
        blocks.append(BlockDescriptor("Conv", kernel, width, width, layers=depth - 1))
    return Architecture(tuple(blocks), resolution, 0)


def two_layer_arch(hidden, channels=16, kernel=3, resolution=32):
    """``channels -> hidden -> channels`` conv pair."""
    return Architecture((BlockDescriptor("Conv", kernel, channels, hidden),
                         BlockDescriptor("Conv", kernel, hidden, channels)), resolution, 0)


FAMILY_DEFAULTS = {"P": range(5, 61, 5), "Q": range(2, 61, 2)}


def fig2_families(kind, with_bn=False, sweep=None, score="phi", cfg=ScoreConfig(),
                  width=64, channels=16, resolution=16):
    """Score a family of plain nets.

    ``kind="P"`` sweeps depth at fixed ``width``; ``kind="Q"`` sweeps the
    hidden width of a two-layer net with ``channels`` in and out.  Returns
    ``[(parameter, ScoreResult), ...]``.  ``score="zen"`` always uses BN.
    """
    if kind not in FAMILY_DEFAULTS:
        raise ValueError("kind must be 'P' or 'Q'")
    if score not in ("phi", "zen"):
        raise ValueError("score must be 'phi' or 'zen'")
    sweep = FAMILY_DEFAULTS[kind] if sweep is None else sweep
    rows = []
    for p in sweep:
        arch = (vanilla_arch(p, width, resolution=resolution) if kind == "P"
                else two_layer_arch(p, channels, resolution=resolution))
        res = zen_score(arch, cfg) if score == "zen" else phi_score(arch, cfg, with_bn=with_bn)
        rows.append((p, res))
    return rows


# --------------------------------------------------------------------------
# dispatch


def random_proxy(arch, seed):
    """Uniform [0, 1) value fixed by the architecture and the seed."""
    digest = hashlib.sha256(f"{arch.key()}:{seed}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2.0 ** 64


def score(arch, proxy="zen", cfg=ScoreConfig()):
    """Score ``arch`` with any proxy in :data:`PROXIES`."""
    from .budget import count_flops, count_params

    if proxy == "zen":
        return zen_score(arch, cfg)
    if proxy == "phi":
        return phi_score(arch, cfg)
    if proxy == "naswot":
        return naswot_score(arch, cfg)
    t0 = time.perf_counter()
    if proxy == "flops":
        value = float(count_flops(arch, cfg.resolution))
    elif proxy == "params":
        value = float(count_params(arch))
    elif proxy == "random":
        value = random_proxy(arch, cfg.seed)
    else:
        raise ValueError(f"unknown proxy {proxy!r}; choose from {PROXIES}")
    return ScoreResult(value, 0.0, False, time.perf_counter() - t0, proxy=proxy, seed=cfg.seed,
                       per_repeat=(value,))
