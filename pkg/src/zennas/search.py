"""Budget-constrained evolutionary search.

Each iteration picks a population member uniformly at random, mutates it,
drops the child if it breaks the budget or the depth cap, otherwise scores
it and appends it.  Whenever the population grows past its capacity the
lowest-scoring member leaves (oldest first among ties).  The answer is the
best-scoring member.

Scores are cached by (architecture hash, proxy, seed) so duplicates are
free.  With ``parallel_scorers > 1`` candidates are proposed serially from a
snapshot of the population, scored concurrently and inserted in proposal
order, which keeps runs reproducible for a fixed seed.
"""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import arch as A
from .budget import Budget, within_budget
from .errors import CheckpointError, DegenerateScore, MutationExhausted
from .proxies import PROXIES, ScoreConfig, score
from .tensor import make_rng

CHECKPOINT_FORMAT = "zennas.checkpoint"
CHECKPOINT_VERSION = 1
INIT_MODES = ("population", "single")


@dataclass
class SearchConfig:
    """Everything that defines a search run.

    ``max_depth`` is the layer cap L; when unset the budget's
    ``max_layers`` is used.  ``init="population"`` seeds the population with
    ``population_size`` random architectures, ``"single"`` with one (or
    with ``initial_arch`` when given).
    """

    space: A.SearchSpace
    budget: Budget | None = None
    proxy: str = "zen"
    population_size: int = 256
    iterations: int = 96000
    max_depth: int | None = None
    seed: int = 0
    checkpoint_every: int = 0
    checkpoint_path: str | None = None
    parallel_scorers: int = 1
    init: str = "population"
    initial_arch: A.Architecture | None = None
    score_cfg: ScoreConfig = field(default_factory=ScoreConfig)
    cost_model: object = None

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.proxy not in PROXIES:
            raise ValueError(f"proxy must be one of {PROXIES}")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}")
        if self.parallel_scorers < 1:
            raise ValueError("parallel_scorers must be >= 1")

    @property
    def depth_cap(self):
        caps = [c for c in (self.max_depth, self.budget.max_layers if self.budget else None)
                if c is not None]
        return min(caps) if caps else None


@dataclass
class Member:
    arch: A.Architecture
    score: float
    seed: int
    iteration_found: int
    order: int = 0


class Population:
    """Scored architectures with a fixed capacity."""

    def __init__(self, capacity, members=()):
        self.capacity = capacity
        self.members = list(members)
        self._next_order = max((m.order for m in self.members), default=-1) + 1

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def add(self, member):
        """Append ``member``; returns the member trimmed away, if any."""
        member.order = self._next_order
        self._next_order += 1
        self.members.append(member)
        if len(self.members) > self.capacity:
            worst = min(range(len(self.members)),
                        key=lambda i: (self.members[i].score, self.members[i].order))
            return self.members.pop(worst)
        return None

    def best(self):
        return max(self.members, key=lambda m: (m.score, -m.order))

    def scores(self):
        return np.array([m.score for m in self.members], dtype=np.float64)


@dataclass
class LogRow:
    iteration: int
    best_score_so_far: float
    population_min: float
    population_mean: float
    wall_time: float
    rejected: int = 0
    skipped: int = 0


LOG_COLUMNS = tuple(f.name for f in fields(LogRow))


@dataclass
class ConvergenceLog:
    rows: list = field(default_factory=list)

    def append(self, row):
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    @property
    def best_scores(self):
        return [r.best_score_so_far for r in self.rows]

    def is_monotone(self):
        b = self.best_scores
        return all(y >= x for x, y in zip(b, b[1:]))

    def without_timing(self):
        """Rows minus wall-clock time, for run-to-run comparisons."""
        return [tuple(v for k, v in asdict(r).items() if k != "wall_time") for r in self.rows]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(LOG_COLUMNS)
            for r in self.rows:
                w.writerow([getattr(r, c) for c in LOG_COLUMNS])


class Scorer:
    """Cached proxy evaluation; safe to call from several threads."""

    def __init__(self, proxy, score_cfg):
        self.proxy = proxy
        self.cfg = score_cfg
        self.cache = {}
        self.evaluations = 0

    def key(self, arch):
        return (arch.key(), self.proxy, self.cfg.seed)

    def __call__(self, arch):
        k = self.key(arch)
        hit = self.cache.get(k)
        if hit is not None:
            return hit
        try:
            value = score(arch, self.proxy, self.cfg).value
        except DegenerateScore:
            # a dead network loses every comparison instead of stopping the run
            value = -math.inf
        if math.isnan(value):
            value = -math.inf
        self.cache[k] = value
        self.evaluations += 1
        return value


class Searcher:
    """Mutable state of one search run."""

    def __init__(self, cfg, scorer=None):
        self.cfg = cfg
        self.scorer = scorer or Scorer(cfg.proxy, cfg.score_cfg)
        self.rng = make_rng(cfg.seed)
        self.population = Population(cfg.population_size)
        self.log = ConvergenceLog()
        self.iteration = 0
        self.rejected = 0
        self.skipped = 0
        self.best_so_far = -math.inf
        self._t0 = time.perf_counter()
        self._elapsed_before = 0.0

    # -- setup ---------------------------------------------------------------

    def initialize(self):
        cfg = self.cfg
        if cfg.initial_arch is not None:
            archs = [cfg.initial_arch]
        else:
            n = 1 if cfg.init == "single" else cfg.population_size
            archs = [A.random_arch(cfg.space, self.rng, cfg.depth_cap, cfg.budget, cfg.cost_model)
                     for _ in range(n)]
        for a in archs:
            self._insert(a, self.scorer(a))
        self._record()
        return self

    # -- one iteration -------------------------------------------------------

    def propose(self):
        """Select and mutate; returns the child or ``None`` (skipped / gated)."""
        cfg = self.cfg
        parent = self.population.members[int(self.rng.integers(len(self.population)))]
        try:
            child = A.mutate(parent.arch, cfg.space, self.rng, cfg.depth_cap)
        except MutationExhausted:
            self.skipped += 1
            return None
        if not self.admissible(child):
            self.rejected += 1
            return None
        return child

    def admissible(self, arch):
        cap = self.cfg.depth_cap
        if cap is not None and arch.depth > cap:
            return False
        if self.cfg.budget is not None and not within_budget(arch, self.cfg.budget,
                                                             self.cfg.cost_model).ok:
            return False
        return True

    def _insert(self, arch, value):
        self.population.add(Member(arch, value, self.cfg.score_cfg.seed, self.iteration))
        self.best_so_far = max(self.best_so_far, value)

    def _record(self):
        s = self.population.scores()
        finite = s[np.isfinite(s)]
        self.log.append(LogRow(
            self.iteration, self.best_so_far, float(s.min()),
            float(finite.mean()) if len(finite) else float(s.mean()),
            self._elapsed_before + time.perf_counter() - self._t0, self.rejected, self.skipped))

    def step(self):
        self.iteration += 1
        child = self.propose()
        if child is not None:
            self._insert(child, self.scorer(child))
        self._record()

    def step_parallel(self, pool, width):
        """Propose ``width`` candidates from the current population, score together."""
        proposals = []
        for _ in range(width):
            self.iteration += 1
            proposals.append((self.iteration, self.propose()))
        todo = [c for _, c in proposals if c is not None]
        values = list(pool.map(self.scorer, todo))
        it = iter(values)
        for iteration, child in proposals:
            if child is not None:
                saved, self.iteration = self.iteration, iteration
                self._insert(child, next(it))
                self.iteration = saved
        self._record()

    def run(self, until=None, on_step=None):
        cfg = self.cfg
        stop = cfg.iterations if until is None else min(until, cfg.iterations)
        pool = ThreadPoolExecutor(cfg.parallel_scorers) if cfg.parallel_scorers > 1 else None
        try:
            while self.iteration < stop:
                if pool is None:
                    self.step()
                else:
                    self.step_parallel(pool, min(cfg.parallel_scorers, stop - self.iteration))
                if cfg.checkpoint_path and cfg.checkpoint_every and \
                        self.iteration % cfg.checkpoint_every == 0:
                    self.checkpoint(cfg.checkpoint_path)
                if on_step is not None:
                    on_step(self)
        finally:
            if pool is not None:
                pool.shutdown()
        return self

    def best(self):
        return self.population.best().arch

    # -- persistence ---------------------------------------------------------

    def state_dict(self):
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "iteration": self.iteration,
            "rejected": self.rejected,
            "skipped": self.skipped,
            "best_so_far": self.best_so_far,
            "elapsed": self._elapsed_before + time.perf_counter() - self._t0,
            "rng_state": self.rng.bit_generator.state,
            "capacity": self.population.capacity,
            "population": [{"arch": A.to_dict(m.arch), "score": m.score, "seed": m.seed,
                            "iteration_found": m.iteration_found, "order": m.order}
                           for m in self.population],
            "log": [asdict(r) for r in self.log.rows],
        }

    def checkpoint(self, path):
        """Atomically write the full search state as JSON."""
        write_json_atomic(path, self.state_dict())

    def load_state(self, state):
        try:
            if state.get("format") != CHECKPOINT_FORMAT:
                raise CheckpointError("not a search checkpoint")
            if state.get("version") != CHECKPOINT_VERSION:
                raise CheckpointError(
                    f"checkpoint version {state.get('version')!r} is not supported "
                    f"(expected {CHECKPOINT_VERSION})")
            members = [Member(A.from_dict(m["arch"]), float(m["score"]), int(m["seed"]),
                              int(m["iteration_found"]), int(m["order"]))
                       for m in state["population"]]
            rows = [LogRow(**r) for r in state["log"]]
            rng = make_rng(0)
            rng.bit_generator.state = state["rng_state"]
            population = Population(int(state["capacity"]), members)
            iteration = int(state["iteration"])
            counters = int(state["rejected"]), int(state["skipped"])
            best = float(state["best_so_far"])
            elapsed = float(state["elapsed"])
        except CheckpointError:
            raise
        except (KeyError, TypeError, ValueError, A.ArchParseError) as exc:
            raise CheckpointError(f"corrupt checkpoint: {exc}") from None
        if not members:
            raise CheckpointError("corrupt checkpoint: empty population")
        self.population, self.log.rows, self.rng = population, rows, rng
        self.iteration = iteration
        self.rejected, self.skipped = counters
        self.best_so_far = best
        self._elapsed_before, self._t0 = elapsed, time.perf_counter()
        return self


def write_json_atomic(path, obj):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_checkpoint(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None


# --------------------------------------------------------------------------
# functional entry points


def checkpoint(searcher, path):
    searcher.checkpoint(path)


def resume(path, cfg, scorer=None):
    """Searcher restored from ``path``; continue it with :meth:`Searcher.run`."""
    state = read_checkpoint(path)
    if not isinstance(state, dict):
        raise CheckpointError("corrupt checkpoint: top level is not an object")
    return Searcher(cfg, scorer).load_state(state)


def step(pop, cfg, rng, scorer=None):
    """One select-mutate-gate-score-insert-trim cycle on ``pop`` (in place).

    Returns ``pop``.  A child that fails the gate leaves ``pop`` untouched.
    """
    s = Searcher(cfg, scorer)
    s.population, s.rng = pop, rng
    s.iteration = max((m.iteration_found for m in pop), default=0)
    child = s.propose()
    if child is not None:
        s._insert(child, s.scorer(child))
    return pop


def evolve(cfg, resume_from=None, scorer=None, on_step=None):
    """Run the search; returns ``(best architecture, ConvergenceLog)``."""
    if resume_from is not None:
        searcher = resume(resume_from, cfg, scorer)
    else:
        searcher = Searcher(cfg, scorer).initialize()
    searcher.run(on_step=on_step)
    if cfg.checkpoint_path:
        searcher.checkpoint(cfg.checkpoint_path)
    return searcher.best(), searcher.log
