"""Evolutionary search on a space small enough to check by brute force.

The micro space has 144 members, so we can score all of them and see
whether the search lands on the true best.
"""
import argparse

from zennas import arch as A
from zennas.proxies import ScoreConfig
from zennas.search import Scorer, SearchConfig, evolve

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--runs", type=int, default=5)
parser.add_argument("--iterations", type=int, default=2000)
args = parser.parse_args()

space = A.micro_space()
score_cfg = ScoreConfig(batch_size=8, repeats=1)
scorer = Scorer("zen", score_cfg)
table = {a.key(): (scorer(a), a) for a in A.enumerate_space(space)}
top, best_arch = max(table.values(), key=lambda t: t[0])
print(f"{len(table)} candidates; best zen {top:.3f}")
print(A.to_table(best_arch))

for seed in range(args.runs):
    cfg = SearchConfig(space, population_size=16, iterations=args.iterations, seed=seed,
                       score_cfg=score_cfg)
    best, log = evolve(cfg, scorer=scorer)
    # first iteration at which the final best was already known
    hit = next(r.iteration for r in log.rows if r.best_score_so_far == log.best_scores[-1])
    print(f"seed {seed}: found {'the optimum' if table[best.key()][0] == top else 'a runner-up'}"
          f" by iteration {hit}")
