import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zennas import arch as A
from zennas.arch import Architecture, BlockDescriptor as B
from zennas.budget import Budget, count_params
from zennas.corpus import builtin, builtin_names, resnet, zennet
from zennas.errors import ArchParseError, MutationExhausted, SpaceInfeasible
from zennas.network import ConvLayer, strip_for_scoring
from zennas.tensor import make_rng

SPACES = {"I-cifar": A.search_space_I("cifar"), "I-imagenet": A.search_space_I("imagenet"),
          "II-cifar": A.search_space_II("cifar"), "II-imagenet": A.search_space_II("imagenet"),
          "micro": A.micro_space()}


def simple_arch(width=64, btype="Res"):
    return Architecture((B("Conv", 3, 3, 32), B(btype, 3, 32, width, 1, 32, 2 if btype == "MB" else None),
                         B("Conv", 1, width, 128)), 32, 10)


# -- validation ---------------------------------------------------------------


def test_resnet18_is_valid():
    assert A.validate(resnet(18)).ok


def test_every_builtin_is_valid():
    for name in builtin_names():
        assert A.validate(builtin(name)).ok, name


def test_channel_chain_violation():
    a = Architecture((B("Conv", 3, 3, 16), B("Conv", 3, 8, 16)), 32)
    rep = A.validate(a)
    assert not rep.ok
    assert "channel chain" in str(rep)


def test_stride_collapse():
    blocks = [B("Conv", 3, 3, 8, 2)] + [B("Conv", 3, 8, 8, 2) for _ in range(5)]
    rep = A.validate(Architecture(tuple(blocks), 32))
    assert any("stride collapse" in v for v in rep.violations)


def test_depth_cap_violation():
    a = resnet(18)
    assert A.validate(a, max_depth=a.depth).ok
    assert not A.validate(a, max_depth=a.depth - 1).ok


def test_descriptor_schema_rules():
    with pytest.raises(ValueError):
        B("Btn", 3, 8, 8, 1, 4, expansion=2)
    with pytest.raises(ValueError):
        B("MB", 3, 8, 8, 1, 4, expansion=3)
    with pytest.raises(ValueError):
        B("Conv", 4, 8, 8)
    with pytest.raises(ValueError):
        B("Res", 3, 8, 8)


# -- mutation -----------------------------------------------------------------


def test_mutated_kernels_stay_in_set():
    space = SPACES["I-cifar"]
    rng = make_rng(0)
    a = A.random_arch(space, rng)
    for _ in range(1000):
        a = A.mutate(a, space, rng)
        for i in space.mutable_positions(a):
            assert a.blocks[i].kernel in (3, 5, 7)


def test_width_mutation_range():
    space = SPACES["I-cifar"]
    rng = make_rng(1)
    a = simple_arch(64)
    seen = set()
    for _ in range(1000):
        child = A.mutate(a, space, rng)
        w = child.blocks[1].out_ch
        assert 32 <= w <= 128
        assert w % 8 == 0
        seen.add(w)
    assert min(seen) == 32 and max(seen) == 128


def test_mutate_then_validate():
    for name in ("I-cifar", "II-imagenet", "micro"):
        space = SPACES[name]
        rng = make_rng(2)
        a = A.random_arch(space, rng, max_depth=60)
        for _ in range(200):
            a = A.mutate(a, space, rng, max_depth=60)
            assert A.validate(a, space, 60).ok


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), name=st.sampled_from(sorted(SPACES)))
def test_mutate_changes_one_position(seed, name):
    space = SPACES[name]
    rng = make_rng(seed)
    a = A.random_arch(space, rng)
    child = A.mutate(a, space, rng)

    def shape(b):
        d = A.block_to_dict(b)
        d.pop("in")
        if b.block_type == "MaxPool":
            d.pop("out")
        return d

    changed = [i for i, (x, y) in enumerate(zip(a.blocks, child.blocks)) if shape(x) != shape(y)]
    assert len(changed) == 1
    i = changed[0]
    assert all(x == y for x, y in zip(a.blocks[:i], child.blocks[:i]))
    assert child.blocks[i].in_ch == a.blocks[i].in_ch


def test_depth_mutation_never_zero():
    space = SPACES["I-cifar"]
    rng = make_rng(3)
    a = Architecture((B("Conv", 3, 3, 32), B("Res", 3, 32, 32, 1, 16, None, 1),
                      B("Conv", 1, 32, 64)), 32, 10)
    for _ in range(300):
        assert A.mutate(a, space, rng).blocks[1].layers >= 1


def test_mutate_without_mutable_block():
    a = Architecture((B("Conv", 3, 3, 8), B("Conv", 1, 8, 8)), 32)
    with pytest.raises(MutationExhausted):
        A.mutate(a, SPACES["I-cifar"], make_rng(0))


def test_space_ii_only_mb():
    space = SPACES["II-cifar"]
    rng = make_rng(4)
    a = A.random_arch(space, rng)
    for _ in range(200):
        a = A.mutate(a, space, rng)
        assert {a.blocks[i].block_type for i in space.mutable_positions(a)} == {"MB"}


# -- random sampling ----------------------------------------------------------


def test_random_arch_deterministic():
    space = SPACES["II-imagenet"]
    assert A.random_arch(space, make_rng(9)) == A.random_arch(space, make_rng(9))


def test_random_arch_expansions():
    space = SPACES["II-imagenet"]
    rng = make_rng(5)
    for _ in range(1000):
        a = A.random_arch(space, rng)
        for b in a.blocks:
            if b.block_type == "MB":
                assert b.expansion in (1, 2, 4, 6)


def test_random_arch_respects_params_budget():
    space = SPACES["I-cifar"]
    budget = Budget(max_params=1_000_000)
    rng = make_rng(6)
    for _ in range(40):
        a = A.random_arch(space, rng, budget=budget)
        assert count_params(a) <= 1_000_000
        assert A.validate(a, space).ok


def test_random_arch_depth_cap():
    space = SPACES["I-cifar"]
    rng = make_rng(7)
    for _ in range(100):
        assert A.random_arch(space, rng, max_depth=12).depth <= 12


def test_random_arch_infeasible():
    with pytest.raises(SpaceInfeasible):
        A.random_arch(SPACES["I-cifar"], make_rng(0), max_depth=3)
    with pytest.raises(SpaceInfeasible):
        A.random_arch(SPACES["I-cifar"], make_rng(0), budget=Budget(max_params=10))


def test_micro_space_has_144_members():
    archs = A.enumerate_space(A.micro_space())
    assert len(archs) == 144
    assert len({a.key() for a in archs}) == 144
    assert all(A.validate(a, A.micro_space()).ok for a in archs)


# -- serialization ------------------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), name=st.sampled_from(sorted(SPACES)))
def test_round_trip(seed, name):
    a = A.random_arch(SPACES[name], make_rng(seed))
    assert A.parse(A.serialize(a)) == a
    assert A.from_dict(json.loads(A.serialize(a, indent=None))) == a


def test_round_trip_builtins(tmp_path):
    for name in builtin_names():
        a = builtin(name)
        path = tmp_path / "a.json"
        A.save(a, path)
        assert A.load(path) == a


def test_zennet_400m_se_has_six_blocks():
    text = A.serialize(zennet("ZenNet-400M-SE"))
    a = A.parse(text)
    assert len(a.blocks) == 6
    assert all(b.se for b in a.blocks if b.block_type == "MB")


def test_expansion_on_btn_is_parse_error():
    doc = A.to_dict(resnet(50))
    doc["blocks"][2]["expansion"] = 4
    with pytest.raises(ArchParseError) as exc:
        A.from_dict(doc)
    assert exc.value.location == "blocks[2].expansion"


@pytest.mark.parametrize("text, where", [
    ("{not json", "line 1"),
    ('{"blocks": 3}', "blocks"),
    ('{"blocks": [{"block": "Conv", "kernel": 3, "in": 3}]}', "blocks[0].out"),
    ('{"blocks": [{"block": "Conv", "kernel": "3", "in": 3, "out": 8}]}', "blocks[0].kernel"),
    ('{"blocks": [{"block": "Foo", "kernel": 3, "in": 3, "out": 8}]}', "blocks[0].block"),
    ('{"version": 9, "blocks": []}', "version"),
])
def test_parse_errors_carry_location(text, where):
    with pytest.raises(ArchParseError) as exc:
        A.parse(text)
    assert where in str(exc.value)


def test_key_depends_on_content():
    a = resnet(18)
    assert a.key() == resnet(18).key()
    assert a.key() != resnet(34).key()


def test_to_table_has_one_row_per_block():
    a = zennet("ZenNet-1.0M")
    assert len(A.to_table(a).splitlines()) == len(a.blocks) + 2


# -- stripping ----------------------------------------------------------------


def test_strip_conv_only_unchanged():
    a = Architecture((B("Conv", 3, 3, 8, 2), B("Conv", 5, 8, 16, 1, layers=2)), 32)
    plain = strip_for_scoring(a)
    assert plain.layers == (ConvLayer(3, 8, 3, 2), ConvLayer(8, 16, 5, 1), ConvLayer(16, 16, 5, 1))


def test_strip_res_block_layers():
    a = Architecture((B("Res", 3, 64, 64, 1, 64, None, 3),), 56)
    plain = strip_for_scoring(a)
    assert plain.depth == 6
    assert all(isinstance(layer, ConvLayer) for layer in plain.layers)


def test_strip_resnet18_layer_count():
    # stem conv + 8 residual units of two convs; shortcuts gone
    assert strip_for_scoring(resnet(18)).depth == 17
    assert strip_for_scoring(resnet(50)).depth == 49


def test_strip_drops_se():
    a = zennet("ZenNet-400M-SE")
    plain = strip_for_scoring(a)
    assert all(isinstance(layer, ConvLayer) or layer.__class__.__name__ == "PoolLayer"
               for layer in plain.layers)
    b = A.from_dict({**A.to_dict(a), "blocks": [{**d, "se": False} for d in A.to_dict(a)["blocks"]]})
    assert strip_for_scoring(b) == plain


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), name=st.sampled_from(sorted(SPACES)))
def test_strip_keeps_output_channels(seed, name):
    a = A.random_arch(SPACES[name], make_rng(seed))
    assert strip_for_scoring(a).out_channels == a.out_channels


def test_space_from_dict_rejects_unknown():
    with pytest.raises(ValueError):
        A.SearchSpace.from_dict({"space_id": "x", "allowed_block_types": ["Res"], "bogus": 1})
    d = A.micro_space().to_dict()
    assert A.SearchSpace.from_dict(d) == A.micro_space()


def test_quantize_width():
    space = SPACES["I-cifar"]
    assert space.quantize_width(61) == 64
    assert space.quantize_width(1) == 8
    assert space.quantize_width(10_000) == 512
    assert A.micro_space().quantize_width(20) == 16


def test_random_widths_are_quantized():
    rng = np.random.default_rng(0)
    space = SPACES["I-imagenet"]
    for _ in range(50):
        a = A.random_arch(space, make_rng(int(rng.integers(1 << 30))))
        for i in space.mutable_positions(a):
            assert a.blocks[i].out_ch % 8 == 0


def test_budget_shrinking_reaches_minimum_width():
    # small widths must keep shrinking even where rounding would return the same width
    space = SPACES["I-cifar"]
    budget = Budget(max_flops=3e7)
    rng = make_rng(8)
    from zennas.budget import count_flops

    for _ in range(20):
        assert count_flops(A.random_arch(space, rng, budget=budget)) <= 3e7
