"""Reference architectures: ResNets and the published ZenNet structure tables."""
from __future__ import annotations

from .arch import Architecture, BlockDescriptor as B

_RESNET_BASIC = {18: (2, 2, 2, 2), 34: (3, 4, 6, 3)}
_RESNET_BOTTLENECK = {50: (3, 4, 6, 3), 101: (3, 4, 23, 3), 152: (3, 8, 36, 3)}


def resnet(depth, resolution=224, num_classes=1000):
    """Standard ImageNet ResNet (stride on the k x k conv, projection shortcuts)."""
    stem = [B("Conv", 7, 3, 64, 2), B("MaxPool", 3, 64, 64, 2)]
    blocks = list(stem)
    if depth in _RESNET_BASIC:
        c = 64
        for i, (n, w) in enumerate(zip(_RESNET_BASIC[depth], (64, 128, 256, 512))):
            blocks.append(B("Res", 3, c, w, 1 if i == 0 else 2, w, None, n))
            c = w
    elif depth in _RESNET_BOTTLENECK:
        c = 64
        for i, (n, w) in enumerate(zip(_RESNET_BOTTLENECK[depth], (64, 128, 256, 512))):
            blocks.append(B("Btn", 3, c, 4 * w, 1 if i == 0 else 2, w, None, n))
            c = 4 * w
    else:
        raise ValueError(f"no ResNet-{depth}")
    return Architecture(tuple(blocks), resolution, num_classes)


def _table(rows, resolution=224, num_classes=1000, se=False):
    blocks = []
    for row in rows:
        if len(row) == 7:
            t, k, cin, cout, s, b, n = row
            e = None
        else:
            t, k, cin, cout, s, b, e, n = row
        blocks.append(B(t, k, cin, cout, s, b, e, n, se=se and t == "MB"))
    return Architecture(tuple(blocks), resolution, num_classes)


ZENNET_TABLES = {
    "ZenNet-0.1ms": [
        ("Conv", 3, 3, 24, 2, None, 1), ("Res", 3, 24, 32, 2, 64, 1),
        ("Res", 5, 32, 64, 2, 32, 1), ("Res", 5, 64, 168, 2, 96, 1),
        ("Btn", 5, 168, 320, 1, 120, 1), ("Btn", 5, 320, 640, 2, 304, 3),
        ("Btn", 5, 640, 512, 1, 384, 1), ("Conv", 1, 512, 2384, 1, None, 1)],
    "ZenNet-0.2ms": [
        ("Conv", 3, 3, 24, 2, None, 1), ("Btn", 5, 24, 32, 2, 32, 1),
        ("Btn", 7, 32, 104, 2, 64, 1), ("Btn", 5, 104, 512, 2, 160, 1),
        ("Btn", 5, 512, 344, 1, 192, 1), ("Btn", 5, 344, 688, 2, 320, 4),
        ("Btn", 5, 688, 680, 1, 304, 3), ("Conv", 1, 680, 2552, 1, None, 1)],
    "ZenNet-0.3ms": [
        ("Conv", 3, 3, 24, 2, None, 1), ("Btn", 5, 24, 64, 2, 32, 1),
        ("Btn", 3, 64, 128, 2, 128, 1), ("Btn", 7, 128, 432, 2, 128, 1),
        ("Btn", 5, 432, 272, 1, 160, 1), ("Btn", 5, 272, 848, 2, 384, 4),
        ("Btn", 5, 848, 848, 1, 320, 3), ("Btn", 5, 848, 456, 1, 320, 3),
        ("Conv", 1, 456, 6704, 1, None, 1)],
    "ZenNet-0.5ms": [
        ("Conv", 3, 3, 8, 2, None, 1), ("Btn", 7, 8, 64, 2, 32, 1),
        ("Btn", 3, 64, 152, 2, 128, 1), ("Btn", 5, 152, 640, 2, 192, 4),
        ("Btn", 5, 640, 640, 1, 192, 2), ("Btn", 5, 640, 1536, 2, 384, 4),
        ("Btn", 5, 1536, 816, 1, 384, 3), ("Btn", 5, 816, 816, 1, 384, 3),
        ("Conv", 1, 816, 5304, 1, None, 1)],
    "ZenNet-0.8ms": [
        ("Conv", 3, 3, 16, 2, None, 1), ("Btn", 5, 16, 64, 2, 64, 1),
        ("Btn", 3, 64, 240, 2, 128, 2), ("Btn", 7, 240, 640, 2, 160, 3),
        ("Btn", 7, 640, 768, 1, 192, 4), ("Btn", 5, 768, 1536, 2, 384, 5),
        ("Btn", 5, 1536, 1536, 1, 384, 3), ("Btn", 5, 1536, 2304, 1, 384, 5),
        ("Conv", 1, 2304, 4912, 1, None, 1)],
    "ZenNet-1.2ms": [
        ("Conv", 3, 3, 32, 2, None, 1), ("Btn", 5, 32, 80, 2, 32, 1),
        ("Btn", 7, 80, 432, 2, 128, 5), ("Btn", 7, 432, 640, 2, 192, 3),
        ("Btn", 7, 640, 1008, 1, 160, 5), ("Btn", 7, 1008, 976, 1, 160, 4),
        ("Btn", 5, 976, 2304, 2, 384, 5), ("Btn", 5, 2304, 2496, 1, 384, 5),
        ("Conv", 1, 2496, 3072, 1, None, 1)],
    "ZenNet-400M-SE": [
        ("Conv", 3, 3, 16, 2, None, None, 1), ("MB", 7, 16, 40, 2, 40, 1, 1),
        ("MB", 7, 40, 64, 2, 64, 1, 1), ("MB", 7, 64, 96, 2, 96, 4, 5),
        ("MB", 7, 96, 224, 2, 224, 2, 5), ("Conv", 1, 224, 2048, 1, None, None, 1)],
    "ZenNet-600M-SE": [
        ("Conv", 3, 3, 24, 2, None, None, 1), ("MB", 7, 24, 48, 2, 48, 1, 1),
        ("MB", 7, 48, 72, 2, 72, 2, 1), ("MB", 7, 72, 96, 2, 88, 6, 5),
        ("MB", 7, 96, 192, 2, 168, 4, 5), ("Conv", 1, 192, 2048, 1, None, None, 1)],
    "ZenNet-900M-SE": [
        ("Conv", 3, 3, 16, 2, None, None, 1), ("MB", 7, 16, 48, 2, 72, 1, 1),
        ("MB", 7, 48, 72, 2, 64, 2, 3), ("MB", 7, 72, 152, 2, 144, 2, 3),
        ("MB", 7, 152, 360, 2, 352, 2, 4), ("MB", 7, 360, 288, 1, 264, 4, 3),
        ("Conv", 1, 288, 2048, 1, None, None, 1)],
    "ZenNet-1.0M": [
        ("Conv", 3, 3, 88, 1, None, 1), ("Btn", 7, 88, 120, 1, 16, 1),
        ("Btn", 7, 120, 192, 2, 16, 3), ("Btn", 5, 192, 224, 1, 24, 4),
        ("Btn", 5, 224, 96, 2, 24, 2), ("Btn", 3, 96, 168, 2, 40, 3),
        ("Btn", 3, 168, 112, 1, 48, 3), ("Conv", 1, 112, 512, 1, None, 1)],
    "ZenNet-2.0M": [
        ("Conv", 3, 3, 32, 1, None, 1), ("Btn", 5, 32, 120, 1, 40, 1),
        ("Btn", 5, 120, 176, 2, 32, 3), ("Btn", 7, 176, 272, 1, 24, 3),
        ("Btn", 3, 272, 176, 1, 56, 3), ("Btn", 3, 176, 176, 1, 64, 4),
        ("Btn", 5, 176, 216, 2, 40, 2), ("Btn", 3, 216, 72, 2, 56, 2),
        ("Conv", 1, 72, 512, 1, None, 1)],
}


def zennet(name, num_classes=None):
    rows = ZENNET_TABLES[name]
    cifar = name in ("ZenNet-1.0M", "ZenNet-2.0M")
    return _table(rows, resolution=32 if cifar else 224,
                  num_classes=num_classes or (100 if cifar else 1000),
                  se=name.endswith("-SE"))


def builtin(name):
    """Look up ``resnet18`` .. ``resnet152`` or any ZenNet table name."""
    low = name.lower().replace("-", "")
    if low.startswith("resnet"):
        return resnet(int(low[6:]))
    for key in ZENNET_TABLES:
        if key.lower().replace("-", "") == low or key == name:
            return zennet(key)
    raise KeyError(name)


def builtin_names():
    return [f"resnet{d}" for d in (18, 34, 50, 101, 152)] + list(ZENNET_TABLES)
