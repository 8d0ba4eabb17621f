"""Why the score needs BN: overflow without it, flattening with it.

Part 1 sweeps the depth of plain width-64 conv stacks.  The literal
float32 computation of the BN-free score overflows once the network is
deep enough, while the float64 log-domain computation keeps growing.

Part 2 sweeps the hidden width of a two-layer net.  With BN inserted the
BN-free score barely moves, because BN divides every layer's growth out
again; adding the per-layer BN log-deviations back (the Zen-Score)
recovers the ordering.  Both plots are written as SVG into ``--out-dir``.
"""
import argparse
import os

from zennas import report as R
from zennas.proxies import ScoreConfig, fig2_families

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--out-dir", default="demo_out")
parser.add_argument("--repeats", type=int, default=2)
args = parser.parse_args()
os.makedirs(args.out_dir, exist_ok=True)

f32 = fig2_families("P", cfg=ScoreConfig(precision="f32", repeats=args.repeats))
f64 = fig2_families("P", cfg=ScoreConfig(precision="f64", repeats=args.repeats))
print("depth  f32        f64-log")
for (d, a), (_, b) in zip(f32, f64):
    print(f"{d:5d}  {'overflow' if a.overflowed else f'{a.value:9.2f}':>9}  {b.value:9.2f}")
R.write_text(os.path.join(args.out_dir, "depth_sweep.svg"), R.line_plot(
    {"f32 literal": ([d for d, _ in f32], [r.value for _, r in f32]),
     "f64 log-domain": ([d for d, _ in f64], [r.value for _, r in f64])},
    title="BN-free score vs depth", xlabel="depth", ylabel="score"))

cfg = ScoreConfig(repeats=args.repeats)
with_bn = fig2_families("Q", with_bn=True, cfg=cfg)
zen = fig2_families("Q", score="zen", cfg=cfg)
print("\nwidth  with-BN   zen")
for (w, a), (_, b) in zip(with_bn, zen):
    print(f"{w:5d}  {a.value:7.3f}  {b.value:7.3f}")
R.write_text(os.path.join(args.out_dir, "width_sweep.svg"), R.line_plot(
    {"BN-free score, BN inserted": ([w for w, _ in with_bn], [r.value for _, r in with_bn]),
     "zen": ([w for w, _ in zen], [r.value for _, r in zen])},
    title="two-layer nets vs hidden width", xlabel="hidden width", ylabel="score"))
print(f"\nplots in {args.out_dir}/")
