"""One test per acceptance criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``.  The ResNet
scoring at 224x224 dominates the runtime (several minutes on one core).
"""
import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from oracles import jacobian_delta
from zennas import arch as A
from zennas.arch import Architecture, BlockDescriptor as B
from zennas.budget import Budget, count_flops, count_params, within_budget
from zennas.corpus import resnet
from zennas.proxies import ScoreConfig, fig2_families, theorem1_terms, vanilla_arch, zen_score
from zennas.search import Scorer, SearchConfig, evolve
from zennas.tensor import make_rng

RESNETS = (18, 34, 50, 101, 152)


@pytest.fixture
def verdict(capsys):
    """``verdict(name, ok, detail)`` prints one line past pytest's capture, then asserts."""

    def report(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail

    return report


@pytest.fixture(scope="module")
def resnet_zen():
    cfg = ScoreConfig(batch_size=16, repeats=4, seed=0)
    return {d: zen_score(resnet(d), cfg) for d in RESNETS}


def test_ac1_flops_and_params(verdict):
    flops_ref = {18: 1.82e9, 34: 3.67e9, 50: 4.12e9, 101: 7.85e9, 152: 11.9e9}
    params_ref = {18: 11.7e6, 34: 21.8e6, 50: 25.5e6, 101: 44.5e6, 152: 60.2e6}
    misses = []
    parts = []
    for d in RESNETS:
        f, p = count_flops(resnet(d)), count_params(resnet(d))
        parts.append(f"R{d} {f / 1e9:.3f}G/{p / 1e6:.2f}M")
        if abs(f / flops_ref[d] - 1) > 0.02:
            misses.append(f"R{d} FLOPs {f / 1e9:.3f}G vs {flops_ref[d] / 1e9}G")
        if abs(p / params_ref[d] - 1) > 0.02:
            misses.append(f"R{d} params {p / 1e6:.2f}M vs {params_ref[d] / 1e6}M")
    verdict("AC1 FLOPs/params within 2%", not misses, "; ".join(misses or parts))


def test_ac2_resnet_zen_ordering(verdict, resnet_zen):
    ref = {18: 59.53, 34: 112.32, 50: 140.3, 101: 287.87, 152: 433.57}
    values = [resnet_zen[d].value for d in RESNETS]
    ordered = all(a < b for a, b in zip(values, values[1:]))
    banded = all(abs(resnet_zen[d].value / ref[d] - 1) <= 0.20 for d in RESNETS)
    detail = ", ".join(f"R{d}={resnet_zen[d].value:.2f}" for d in RESNETS)
    verdict("AC2 Zen ordering and 20% band", ordered and banded, detail)


def test_ac3_statistical_error(verdict, resnet_zen):
    rel = {d: r.std_error / abs(r.value) for d, r in resnet_zen.items()}
    detail = ", ".join(f"R{d}={v:.2%}" for d, v in rel.items())
    verdict("AC3 std_error/|value| < 5%", max(rel.values()) < 0.05, detail)


def _random_small_net(rng):
    depth = int(rng.integers(1, 4))
    blocks, c = [], 3
    for _ in range(depth):
        out = int(rng.integers(2, 9))
        blocks.append(B("Conv", int(rng.choice([1, 3, 5])), c, out, int(rng.choice([1, 2]))))
        c = out
    return Architecture(tuple(blocks), 8, 0)


def test_ac4_finite_difference_matches_jacobian(verdict):
    rng = make_rng(2024)
    cfg = ScoreConfig(batch_size=4, repeats=1, seed=11)
    errors = []
    for _ in range(10):
        arch = _random_small_net(rng)
        res = zen_score(arch, cfg)
        delta = math.exp(res.value - res.per_layer_log_sigma.sum())
        oracle = jacobian_delta(arch, cfg, "no_mean")
        errors.append(abs(delta / oracle - 1))
    verdict("AC4 Delta vs Jacobian oracle within 5%", max(errors) < 0.05,
            f"max rel err {max(errors):.2e} over 10 nets")


def test_ac5_overflow_and_log_slope(verdict):
    f32 = fig2_families("P", cfg=ScoreConfig(precision="f32", repeats=2))
    f64 = fig2_families("P", cfg=ScoreConfig(precision="f64", repeats=2))
    deep = [(d, r.overflowed) for d, r in f32 if d >= 40]
    all_overflow = all(o for _, o in deep)
    depths = np.array([d for d, _ in f64], float)
    values = np.array([r.value for _, r in f64])
    slope = np.polyfit(depths, values, 1)[0]
    finite = bool(np.isfinite(values).all())
    onset = min((d for d, r in f32 if r.overflowed), default=None)
    verdict("AC5 f32 overflow at depth>=40, positive f64 slope",
            all_overflow and finite and slope > 0,
            f"f32 overflow onset depth {onset}; f64 slope {slope:.3f}/layer")


def test_ac6_bn_flattening_vs_zen(verdict):
    cfg = ScoreConfig(repeats=4)
    phi_bn = fig2_families("Q", with_bn=True, cfg=cfg)
    zen = fig2_families("Q", score="zen", cfg=cfg)
    v = np.array([r.value for _, r in phi_bn])
    spread = (v.max() - v.min()) / abs(v.mean())
    rho = spearmanr([w for w, _ in zen], [r.value for _, r in zen]).statistic
    verdict("AC6 Phi-with-BN spread < 5%, Zen Spearman > 0.95",
            spread < 0.05 and rho > 0.95, f"spread {spread:.2%}, Spearman {rho:.4f}")


def test_ac7_bn_rescaling_convergence(verdict):
    cfg = ScoreConfig(batch_size=16, repeats=20, seed=0)
    lines, ok = [], True
    for depth in (3, 5):
        ratios = [theorem1_terms(vanilla_arch(depth, 32, resolution=h), cfg).ratio
                  for h in (8, 32, 64)]
        devs = [abs(r - 1) for r in ratios]
        decreasing = devs[0] > devs[1] > devs[2]
        in_band = 0.9 <= ratios[2] <= 1.1
        ok = ok and decreasing and in_band
        lines.append(f"L={depth} |r-1|={'/'.join(f'{d:.3f}' for d in devs)} "
                     f"ratio@65536={ratios[2]:.3f}")
    verdict("AC7 |ratio-1| decreasing in BHW, ratio@65536 in [0.9, 1.1]", ok, "; ".join(lines))


def test_ac8_search_finds_enumeration_argmax(verdict):
    space = A.micro_space()
    score_cfg = ScoreConfig(batch_size=8, repeats=1)
    scorer = Scorer("zen", score_cfg)
    table = {a.key(): scorer(a) for a in A.enumerate_space(space)}
    top = max(table.values())
    hits, monotone = 0, 0
    for seed in range(20):
        cfg = SearchConfig(space, population_size=16, iterations=2000, seed=seed,
                           score_cfg=score_cfg)
        best, log = evolve(cfg, scorer=scorer)
        hits += table[best.key()] == top
        monotone += log.is_monotone()
    verdict("AC8 EA finds argmax >= 95%, monotone log 100%", hits >= 19 and monotone == 20,
            f"argmax {hits}/20, monotone {monotone}/20 over {len(table)} candidates")


def test_ac9_budget_soundness(verdict):
    budget = Budget(max_flops=5e7, max_params=5e5, max_layers=20)
    cfg = SearchConfig(A.search_space_I("cifar"), budget=budget, proxy="flops",
                       population_size=32, iterations=10_000, seed=0)
    violations, checks = [], 0

    def check(s):
        nonlocal checks
        for m in s.population:
            checks += 1
            if not within_budget(m.arch, budget).ok:
                violations.append(m.arch)

    evolve(cfg, on_step=check)
    verdict("AC9 zero gate violations over 10,000 steps", not violations,
            f"{len(violations)} violations in {checks} member checks")


def test_ac10_desk_scale_throughput(verdict):
    arch = resnet(50, resolution=32, num_classes=10)
    single = ScoreConfig(batch_size=16, repeats=1)
    zen_score(arch, single)
    t0 = time.perf_counter()
    zen_score(arch, single)
    t_single = time.perf_counter() - t0
    t0 = time.perf_counter()
    zen_score(arch, ScoreConfig(batch_size=16))
    t_default = time.perf_counter() - t0
    ok = t_single < 2.0 and 1000 * t_default < 3600
    verdict("AC10 R50@32 B=16 single draw < 2 s, T=1000 search < 1 h", ok,
            f"single draw {t_single:.2f}s, 4-repeat score {t_default:.2f}s "
            f"-> 1000 steps ~{1000 * t_default / 60:.0f} min")
