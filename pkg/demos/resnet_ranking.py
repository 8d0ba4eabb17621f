"""Rank the ResNet family with every proxy, without training anything.

Scores are taken at 32x32 by default so the script runs in well under a
minute; pass ``--resolution 224`` for the ImageNet-size numbers (minutes).
"""
import argparse

from scipy.stats import kendalltau

from zennas.budget import count_flops, count_params
from zennas.corpus import resnet
from zennas.proxies import ScoreConfig, score

DEPTHS = (18, 34, 50, 101, 152)

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--resolution", type=int, default=32)
parser.add_argument("--repeats", type=int, default=2)
args = parser.parse_args()

cfg = ScoreConfig(batch_size=16, repeats=args.repeats, resolution=args.resolution)
print(f"{'net':>8} {'GFLOPs':>8} {'Mparams':>8} {'zen':>9} {'naswot':>9}")
zen, naswot = [], []
for d in DEPTHS:
    a = resnet(d)
    z = score(a, "zen", cfg)
    n = score(a, "naswot", cfg)
    zen.append(z.value)
    naswot.append(n.value)
    print(f"ResNet{d:<3d}{count_flops(a) / 1e9:8.2f} {count_params(a) / 1e6:8.2f} "
          f"{z.value:9.2f} {n.value:9.2f}")

# depth is a fair stand-in for capacity inside one family
print("Kendall tau vs depth: zen %.2f, naswot %.2f"
      % (kendalltau(DEPTHS, zen).statistic, kendalltau(DEPTHS, naswot).statistic))
