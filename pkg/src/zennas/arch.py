"""Architecture descriptors, search spaces, validation, mutation and serialization.

An :class:`Architecture` is an ordered list of block descriptors laid out the
way structure tables list networks: block type, kernel, in/out channels,
stride, bottleneck channels, expansion ratio and duplication count.

Block semantics
---------------
``Conv``     k x k convolution + BN + ReLU.
``Res``      ResNet basic block: k x k (in -> bottleneck, stride), k x k (bottleneck -> out).
``Btn``      ResNet bottleneck block: 1x1, k x k (stride), 1x1.
``MB``       two stacked inverted-residual MobileBlocks, in -> bottleneck -> out, each
             1x1 expand (x expansion), depthwise k x k, 1x1 project.
``MaxPool``  3x3 stride-2 max pooling (fixed stems only, never searched).

``layers`` duplicates a block; only the first copy carries ``in_ch`` and ``stride``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ArchParseError, MutationExhausted, SpaceInfeasible

BLOCK_TYPES = ("Conv", "Res", "Btn", "MB", "MaxPool")
SEARCHABLE_TYPES = ("Conv", "Res", "Btn", "MB")
KERNELS = (1, 3, 5, 7)
EXPANSIONS = (1, 2, 4, 6)

#: convolution layers contributed by one copy of each block type
CONVS_PER_BLOCK = {"Conv": 1, "Res": 2, "Btn": 3, "MB": 6, "MaxPool": 0}

FORMAT_NAME = "zennas.architecture"
FORMAT_VERSION = 1

MAX_MUTATION_ATTEMPTS = 100
MAX_SHRINKS = 50
SHRINK_FACTOR = 0.75


@dataclass(frozen=True)
class BlockDescriptor:
    block_type: str
    kernel: int
    in_ch: int
    out_ch: int
    stride: int = 1
    bottleneck_ch: int | None = None
    expansion: int | None = None
    layers: int = 1
    se: bool = False

    def __post_init__(self):
        t = self.block_type
        if t not in BLOCK_TYPES:
            raise ValueError(f"unknown block type {t!r}")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel}")
        if self.stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {self.stride}")
        if self.in_ch < 1 or self.out_ch < 1:
            raise ValueError("channel counts must be positive")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if t in ("Conv", "MaxPool"):
            if self.bottleneck_ch is not None:
                raise ValueError(f"{t} blocks take no bottleneck")
        elif self.bottleneck_ch is None or self.bottleneck_ch < 1:
            raise ValueError(f"{t} blocks need a positive bottleneck")
        if t == "MB":
            if self.expansion not in EXPANSIONS:
                raise ValueError(f"MB expansion must be one of {EXPANSIONS}, got {self.expansion}")
        elif self.expansion is not None:
            raise ValueError(f"only MB blocks carry an expansion ratio, not {t}")
        if t == "MaxPool" and (self.in_ch != self.out_ch or self.layers != 1 or self.se):
            raise ValueError("MaxPool keeps its channel count, has one layer and no SE")

    @property
    def depth(self):
        """Convolution layers after unrolling ``layers``."""
        return CONVS_PER_BLOCK[self.block_type] * self.layers


@dataclass(frozen=True)
class Architecture:
    blocks: tuple
    input_resolution: int = 224
    num_classes: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if self.input_resolution < 1:
            raise ValueError("input_resolution must be positive")

    def __len__(self):
        return len(self.blocks)

    @property
    def depth(self):
        return sum(b.depth for b in self.blocks)

    @property
    def in_channels(self):
        return self.blocks[0].in_ch if self.blocks else 0

    @property
    def out_channels(self):
        return self.blocks[-1].out_ch if self.blocks else 0

    @property
    def total_stride(self):
        return math.prod(b.stride for b in self.blocks)

    def with_block(self, index, block):
        blocks = list(self.blocks)
        blocks[index] = block
        return replace(self, blocks=tuple(blocks))

    def key(self):
        """Stable content hash, used for score caching."""
        return hashlib.sha1(serialize(self, indent=None).encode()).hexdigest()


# --------------------------------------------------------------------------
# search spaces


@dataclass(frozen=True)
class SearchSpace:
    """Declarative description of a generative architecture space.

    Widths snap to multiples of ``width_quantum`` inside ``width_range`` unless
    ``width_choices`` lists the legal values explicitly.  With ``fixed_ends``
    the first and last blocks (stem and head convolutions) are never mutated.
    """

    space_id: str
    allowed_block_types: tuple
    kernel_set: tuple = (3, 5, 7)
    width_range: tuple = (8, 512)
    bottleneck_range: tuple | None = None
    width_choices: tuple | None = None
    depth_range: tuple = (1, 10)
    expansion_set: tuple = EXPANSIONS
    stage_strides: tuple = (1, 2, 2)
    mutation_factor_range: tuple = (0.5, 2.0)
    width_quantum: int = 8
    input_resolution: int = 32
    input_channels: int = 3
    stem_width: int = 32
    stem_stride: int = 1
    head_width: int = 512
    num_classes: int = 100
    fixed_ends: bool = True

    def __post_init__(self):
        for name in ("allowed_block_types", "kernel_set", "width_range", "depth_range",
                     "expansion_set", "stage_strides", "mutation_factor_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.bottleneck_range is not None:
            object.__setattr__(self, "bottleneck_range", tuple(self.bottleneck_range))
        if self.width_choices is not None:
            object.__setattr__(self, "width_choices", tuple(sorted(self.width_choices)))
        bad = set(self.allowed_block_types) - set(SEARCHABLE_TYPES)
        if bad or not self.allowed_block_types:
            raise ValueError(f"allowed_block_types must be a non-empty subset of {SEARCHABLE_TYPES}")
        if not set(self.kernel_set) <= set(KERNELS):
            raise ValueError(f"kernel_set must be a subset of {KERNELS}")
        lo, hi = self.mutation_factor_range
        if not 0 < lo <= hi:
            raise ValueError("mutation_factor_range must satisfy 0 < lo <= hi")
        if self.depth_range[0] < 1 or self.depth_range[0] > self.depth_range[1]:
            raise ValueError("depth_range must satisfy 1 <= lo <= hi")

    @property
    def stage_count(self):
        return len(self.stage_strides)

    @property
    def bottlenecks(self):
        return self.bottleneck_range or self.width_range

    def mutable_positions(self, arch):
        n = len(arch.blocks)
        out = []
        for i, b in enumerate(arch.blocks):
            if b.block_type not in self.allowed_block_types:
                continue
            if self.fixed_ends and i in (0, n - 1) and b.block_type == "Conv":
                continue
            out.append(i)
        return out

    def quantize_width(self, width, bounds=None):
        if self.width_choices:
            choices = np.asarray(self.width_choices)
            return int(choices[np.argmin(np.abs(choices - width))])
        lo, hi = bounds or self.width_range
        q = self.width_quantum
        w = int(round(width / q)) * q
        return int(min(max(w, lo, q), hi))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown search space fields: {sorted(unknown)}")
        return cls(**data)


def search_space_I(dataset="cifar"):
    """ResNet-style space of residual and bottleneck blocks."""
    if dataset == "cifar":
        return SearchSpace("I", ("Res", "Btn"), width_range=(8, 512), bottleneck_range=(8, 256),
                           stage_strides=(1, 2, 2), input_resolution=32, stem_width=32,
                           stem_stride=1, head_width=512, num_classes=100)
    if dataset == "imagenet":
        return SearchSpace("I", ("Res", "Btn"), width_range=(8, 4096), bottleneck_range=(8, 1024),
                           stage_strides=(1, 2, 2, 2, 2), input_resolution=224, stem_width=32,
                           stem_stride=2, head_width=2048, num_classes=1000)
    raise ValueError(f"unknown dataset {dataset!r}")


def search_space_II(dataset="imagenet"):
    """MobileNet-style space of MB blocks with expansion in {1, 2, 4, 6}."""
    if dataset == "cifar":
        return SearchSpace("II", ("MB",), width_range=(8, 512), bottleneck_range=(8, 256),
                           stage_strides=(1, 2, 2), input_resolution=32, stem_width=32,
                           stem_stride=1, head_width=512, num_classes=100)
    if dataset == "imagenet":
        return SearchSpace("II", ("MB",), width_range=(8, 1024), bottleneck_range=(8, 512),
                           stage_strides=(1, 2, 2, 2, 2), input_resolution=224, stem_width=16,
                           stem_stride=2, head_width=2048, num_classes=1000)
    raise ValueError(f"unknown dataset {dataset!r}")


def micro_space():
    """Two mutable Conv blocks; 3 widths x 2 kernels x 2 depths each = 144 networks."""
    return SearchSpace("micro", ("Conv",), kernel_set=(3, 5), width_range=(8, 32),
                       width_choices=(8, 16, 32), depth_range=(1, 2), stage_strides=(1, 2),
                       input_resolution=16, stem_width=8, stem_stride=1, head_width=16,
                       num_classes=10)


def enumerate_space(space):
    """All architectures of a space with explicit width choices (small spaces only)."""
    if not space.width_choices:
        raise ValueError("enumeration needs explicit width_choices")
    import itertools

    options = []
    for btype in space.allowed_block_types:
        for k in space.kernel_set:
            for w in space.width_choices:
                for d in range(space.depth_range[0], space.depth_range[1] + 1):
                    options.append((btype, k, w, d))
    out = []
    for combo in itertools.product(options, repeat=space.stage_count):
        out.append(_assemble(space, combo))
    return out


def _assemble(space, stages):
    """Build stem + one block per stage + head from ``(type, kernel, width, depth[, b, e])``."""
    blocks = [BlockDescriptor("Conv", 3, space.input_channels, space.stem_width, space.stem_stride)]
    c = space.stem_width
    for stage, s in zip(stages, space.stage_strides):
        btype, k, w, d = stage[:4]
        b = stage[4] if len(stage) > 4 else w
        e = stage[5] if len(stage) > 5 else 1
        if btype == "Conv":
            b = None
        if btype != "MB":
            e = None
        blocks.append(BlockDescriptor(btype, k, c, w, s, b, e, d))
        c = w
    blocks.append(BlockDescriptor("Conv", 1, c, space.head_width, 1))
    return Architecture(tuple(blocks), space.input_resolution, space.num_classes)


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "valid" if self.ok else "; ".join(self.violations)


def validate(arch, space=None, max_depth=None):
    """Check structural invariants, space membership and the depth cap."""
    v = []
    blocks = arch.blocks
    if not blocks:
        v.append("architecture has no blocks")
    for i in range(1, len(blocks)):
        if blocks[i].in_ch != blocks[i - 1].out_ch:
            v.append(f"channel chain broken at block {i}: in={blocks[i].in_ch} "
                     f"but previous out={blocks[i - 1].out_ch}")
    if arch.total_stride > arch.input_resolution:
        v.append(f"stride collapse: total stride {arch.total_stride} exceeds "
                 f"input resolution {arch.input_resolution}")
    if max_depth is not None and arch.depth > max_depth:
        v.append(f"depth {arch.depth} exceeds the cap of {max_depth} layers")
    if space is not None and blocks:
        if blocks[0].in_ch != space.input_channels:
            v.append(f"input channels {blocks[0].in_ch} != space input channels {space.input_channels}")
        n = len(blocks)
        mutable = set(space.mutable_positions(arch))
        for i, b in enumerate(blocks):
            fixed = space.fixed_ends and i in (0, n - 1) and b.block_type == "Conv"
            if b.block_type == "MaxPool" or fixed:
                continue
            if i not in mutable:
                v.append(f"block {i}: type {b.block_type} not allowed in space {space.space_id}")
                continue
            if b.kernel not in space.kernel_set:
                v.append(f"block {i}: kernel {b.kernel} not in {space.kernel_set}")
            if b.block_type == "MB" and b.expansion not in space.expansion_set:
                v.append(f"block {i}: expansion {b.expansion} not in {space.expansion_set}")
            if space.width_choices:
                if b.out_ch not in space.width_choices:
                    v.append(f"block {i}: width {b.out_ch} not in {space.width_choices}")
            elif b.out_ch > space.width_range[1]:
                v.append(f"block {i}: width {b.out_ch} above {space.width_range[1]}")
            if b.layers > space.depth_range[1]:
                v.append(f"block {i}: {b.layers} layers above {space.depth_range[1]}")
    return ValidationReport(v)


# --------------------------------------------------------------------------
# mutation


def _propagate_channels(blocks, index):
    """Forward-only repair: the mutated block's out_ch feeds its successor."""
    c = blocks[index].out_ch
    j = index + 1
    while j < len(blocks):
        nxt = blocks[j]
        if nxt.block_type == "MaxPool":
            blocks[j] = replace(nxt, in_ch=c, out_ch=c)
            j += 1
            continue
        blocks[j] = replace(nxt, in_ch=c)
        break


def _mutate_block(block, space, rng):
    lo, hi = space.mutation_factor_range
    btype = space.allowed_block_types[rng.integers(len(space.allowed_block_types))]
    kernel = int(space.kernel_set[rng.integers(len(space.kernel_set))])
    out_ch = space.quantize_width(block.out_ch * rng.uniform(lo, hi))
    d_lo, d_hi = space.depth_range
    layers = int(min(max(round(block.layers * rng.uniform(lo, hi)), 1, d_lo), d_hi))
    bottleneck = None
    expansion = None
    if btype != "Conv":
        base = block.bottleneck_ch or block.out_ch
        bottleneck = space.quantize_width(base * rng.uniform(lo, hi), space.bottlenecks)
    if btype == "MB":
        expansion = int(space.expansion_set[rng.integers(len(space.expansion_set))])
    return replace(block, block_type=btype, kernel=kernel, out_ch=out_ch, layers=layers,
                   bottleneck_ch=bottleneck, expansion=expansion,
                   se=block.se if btype == "MB" else False)


def mutate(arch, space, rng, max_depth=None):
    """Alter one uniformly chosen block: type, kernel, width and depth together.

    Widths and depths are scaled by factors drawn from the space's mutation
    range, then quantized; the successor's ``in_ch`` is repaired.  Invalid or
    unchanged proposals are redrawn, up to 100 times.
    """
    positions = space.mutable_positions(arch)
    if not positions:
        raise MutationExhausted("architecture has no mutable block")
    for _ in range(MAX_MUTATION_ATTEMPTS):
        idx = positions[rng.integers(len(positions))]
        new_block = _mutate_block(arch.blocks[idx], space, rng)
        if new_block == arch.blocks[idx]:
            continue
        blocks = list(arch.blocks)
        blocks[idx] = new_block
        _propagate_channels(blocks, idx)
        candidate = replace(arch, blocks=tuple(blocks))
        if validate(candidate, space, max_depth).ok:
            return candidate
    raise MutationExhausted(f"no valid mutation in {MAX_MUTATION_ATTEMPTS} attempts")


# --------------------------------------------------------------------------
# random sampling


def _random_width(space, rng, bounds):
    if space.width_choices:
        return int(space.width_choices[rng.integers(len(space.width_choices))])
    lo, hi = bounds
    return space.quantize_width(rng.uniform(lo, hi), bounds)


def _shrink_width(space, w, factor, floor):
    """Scaled and quantized width, at least one step below ``w`` unless at ``floor``."""
    if w <= floor:
        return w
    new = space.quantize_width(w * factor, (floor, w))
    if new >= w:
        # rounding can land back on w for small widths
        if space.width_choices:
            new = max(c for c in space.width_choices if c < w)
        else:
            new = w - space.width_quantum
    return max(floor, new)


def _shrink(arch, space, factor):
    blocks = list(arch.blocks)
    n = len(blocks)
    ends = (0, n - 1) if space.fixed_ends else ()
    ends = tuple(i for i in ends if blocks[i].block_type == "Conv")
    floor = space.width_choices[0] if space.width_choices else space.width_quantum
    for i, b in enumerate(blocks):
        if i in ends or b.block_type == "MaxPool":
            continue
        out_ch = _shrink_width(space, b.out_ch, factor, floor)
        bott = b.bottleneck_ch
        if bott is not None:
            bott = _shrink_width(space, bott, factor, floor)
        blocks[i] = replace(b, out_ch=out_ch, bottleneck_ch=bott)
    for i in range(1, n):
        if blocks[i].in_ch != blocks[i - 1].out_ch:
            blocks[i] = replace(blocks[i], in_ch=blocks[i - 1].out_ch)
            if blocks[i].block_type == "MaxPool":
                blocks[i] = replace(blocks[i], out_ch=blocks[i].in_ch)
    return replace(arch, blocks=tuple(blocks))


def random_arch(space, rng, max_depth=None, budget=None, cost_model=None):
    """Uniformly drawn architecture that satisfies the depth cap and ``budget``.

    Depth is trimmed one layer at a time from the deepest block; widths then
    shrink by 0.75 until the budget holds (at most 50 times), and once they
    reach their floor further layers are trimmed.
    """
    stages = []
    for _ in range(space.stage_count):
        btype = space.allowed_block_types[rng.integers(len(space.allowed_block_types))]
        k = int(space.kernel_set[rng.integers(len(space.kernel_set))])
        w = _random_width(space, rng, space.width_range)
        d = int(rng.integers(space.depth_range[0], space.depth_range[1] + 1))
        b = _random_width(space, rng, space.bottlenecks) if btype != "Conv" else None
        e = int(space.expansion_set[rng.integers(len(space.expansion_set))]) if btype == "MB" else None
        stages.append((btype, k, w, d, b, e))
    arch = _assemble(space, stages)
    if max_depth is not None:
        while arch.depth > max_depth:
            shorter = _trim_layer(arch)
            if shorter is None:
                raise SpaceInfeasible(f"minimum depth exceeds the cap of {max_depth} layers")
            arch = shorter
    if budget is not None:
        from .budget import within_budget

        for _ in range(MAX_SHRINKS + 1):
            if within_budget(arch, budget, cost_model).ok:
                break
            smaller = _shrink(arch, space, SHRINK_FACTOR)
            if smaller == arch:
                # widths are at their floor; give up layers instead
                smaller = _trim_layer(arch)
                if smaller is None:
                    raise SpaceInfeasible("budget unsatisfiable even at minimum width and depth")
            arch = smaller
        else:
            raise SpaceInfeasible("budget unsatisfiable after "
                                  f"{MAX_SHRINKS} width shrinks of {SHRINK_FACTOR}")
    return arch


def _trim_layer(arch):
    """One layer fewer in the deepest repeated block, or None if all are single."""
    blocks = list(arch.blocks)
    cands = [i for i, b in enumerate(blocks) if b.layers > 1]
    if not cands:
        return None
    i = max(cands, key=lambda j: (blocks[j].layers, -j))
    blocks[i] = replace(blocks[i], layers=blocks[i].layers - 1)
    return replace(arch, blocks=tuple(blocks))


# --------------------------------------------------------------------------
# serialization

BLOCK_FIELDS = ("block", "kernel", "in", "out", "stride", "bottleneck", "expansion", "layers", "se")
_FIELDS = BLOCK_FIELDS
_REQUIRED = ("block", "kernel", "in", "out")


def block_to_dict(b):
    return {"block": b.block_type, "kernel": b.kernel, "in": b.in_ch, "out": b.out_ch,
            "stride": b.stride, "bottleneck": b.bottleneck_ch, "expansion": b.expansion,
            "layers": b.layers, "se": b.se}


def to_dict(arch):
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "input_resolution": arch.input_resolution,
        "num_classes": arch.num_classes,
        "blocks": [block_to_dict(b) for b in arch.blocks],
    }


def serialize(arch, indent=1):
    """JSON text with a fixed field order and a format/version tag."""
    if indent is None:
        return json.dumps(to_dict(arch), separators=(",", ":"))
    head = to_dict(arch)
    rows = [json.dumps(block_to_dict(b)) for b in arch.blocks]
    lines = ["{"]
    for key in ("format", "version", "input_resolution", "num_classes"):
        lines.append(f'  "{key}": {json.dumps(head[key])},')
    lines.append('  "blocks": [')
    lines.append(",\n".join("    " + r for r in rows))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _int_field(obj, key, loc, allow_none=False):
    val = obj.get(key)
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        raise ArchParseError(f"expected an integer, got {val!r}", f"{loc}.{key}")
    return val


def from_dict(data):
    if not isinstance(data, dict):
        raise ArchParseError("top level must be an object", "$")
    if data.get("format", FORMAT_NAME) != FORMAT_NAME:
        raise ArchParseError(f"unknown format {data.get('format')!r}", "format")
    version = data.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ArchParseError(f"unsupported version {version!r}", "version")
    blocks_in = data.get("blocks")
    if not isinstance(blocks_in, list):
        raise ArchParseError("missing list of blocks", "blocks")
    blocks = []
    for i, raw in enumerate(blocks_in):
        loc = f"blocks[{i}]"
        if not isinstance(raw, dict):
            raise ArchParseError("block entry must be an object", loc)
        unknown = set(raw) - set(_FIELDS)
        if unknown:
            raise ArchParseError(f"unknown fields {sorted(unknown)}", loc)
        for key in _REQUIRED:
            if key not in raw:
                raise ArchParseError("missing required field", f"{loc}.{key}")
        btype = raw["block"]
        if btype not in BLOCK_TYPES:
            raise ArchParseError(f"unknown block type {btype!r}", f"{loc}.block")
        if btype not in ("MB",) and raw.get("expansion") is not None:
            raise ArchParseError(f"expansion is only valid on MB blocks, not {btype}",
                                 f"{loc}.expansion")
        se = raw.get("se", False)
        if not isinstance(se, bool):
            raise ArchParseError(f"expected a boolean, got {se!r}", f"{loc}.se")
        try:
            blocks.append(BlockDescriptor(
                btype,
                _int_field(raw, "kernel", loc),
                _int_field(raw, "in", loc),
                _int_field(raw, "out", loc),
                _int_field({"stride": raw.get("stride", 1)}, "stride", loc),
                _int_field(raw, "bottleneck", loc, allow_none=True),
                _int_field(raw, "expansion", loc, allow_none=True),
                _int_field({"layers": raw.get("layers", 1)}, "layers", loc),
                se,
            ))
        except ValueError as exc:
            if isinstance(exc, ArchParseError):
                raise
            raise ArchParseError(str(exc), loc) from None
    res = data.get("input_resolution", 224)
    ncls = data.get("num_classes", 1000)
    if isinstance(res, bool) or not isinstance(res, int) or res < 1:
        raise ArchParseError(f"expected a positive integer, got {res!r}", "input_resolution")
    if isinstance(ncls, bool) or not isinstance(ncls, int) or ncls < 0:
        raise ArchParseError(f"expected a non-negative integer, got {ncls!r}", "num_classes")
    return Architecture(tuple(blocks), res, ncls)


def parse(text):
    """Inverse of :func:`serialize`; errors carry a line or field location."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArchParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return from_dict(data)


def load(path):
    with open(path) as fh:
        return parse(fh.read())


def save(arch, path):
    with open(path, "w") as fh:
        fh.write(serialize(arch))


def to_table(arch):
    """Markdown rendering in structure-table layout."""
    rows = ["| block | kernel | in | out | stride | bottleneck | expansion | # layers | se |",
            "|---|---|---|---|---|---|---|---|---|"]
    for b in arch.blocks:
        rows.append(f"| {b.block_type} | {b.kernel} | {b.in_ch} | {b.out_ch} | {b.stride} | "
                    f"{b.bottleneck_ch or '-'} | {b.expansion or '-'} | {b.layers} | "
                    f"{'yes' if b.se else 'no'} |")
    return "\n".join(rows)
