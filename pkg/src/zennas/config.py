"""Search configuration files (YAML, or JSON which is a YAML subset).

Top-level sections, all optional except ``space``::

    space: micro            # named space, or a mapping of SearchSpace fields
    budget:                 # any of max_flops, max_params, max_latency_ms, max_layers
      max_flops: 5.0e8
      max_layers: 30
    cost_model:             # latency table and/or analytic fallback
      path: costs.csv       # relative to the config file
      throughput_gflops_per_ms: 10
      overhead_ms: 0.01
    search:                 # SearchConfig fields
      proxy: zen
      population_size: 256
      iterations: 96000
      seed: 0
    score:                  # ScoreConfig fields
      batch_size: 16
      repeats: 4

Named spaces: ``micro``, ``I-cifar``, ``I-imagenet``, ``II-cifar``, ``II-imagenet``.
"""
from __future__ import annotations

import dataclasses
import os

import yaml

from . import arch as A
from .budget import Budget, CostModel
from .errors import ConfigError
from .proxies import ScoreConfig
from .search import SearchConfig

NAMED_SPACES = {
    "micro": A.micro_space,
    "I-cifar": lambda: A.search_space_I("cifar"),
    "I-imagenet": lambda: A.search_space_I("imagenet"),
    "II-cifar": lambda: A.search_space_II("cifar"),
    "II-imagenet": lambda: A.search_space_II("imagenet"),
}
SECTIONS = ("space", "budget", "cost_model", "search", "score")


def load_config(path):
    """Parsed mapping from a YAML or JSON file."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
    data["_base_dir"] = os.path.dirname(os.path.abspath(path))
    return data


def _section(data, name):
    sec = data.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return sec


def _fields(cls, sec, name, skip=()):
    allowed = {f.name for f in dataclasses.fields(cls)} - set(skip)
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown {name} fields: {sorted(unknown)}")
    return dict(sec)


def build_space(value):
    if isinstance(value, str):
        if value not in NAMED_SPACES:
            raise ConfigError(f"unknown space {value!r}; named spaces are {sorted(NAMED_SPACES)}")
        return NAMED_SPACES[value]()
    if isinstance(value, dict):
        try:
            return A.SearchSpace.from_dict(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad space: {exc}") from None
    raise ConfigError("space must be a name or a mapping")


def _number(name, v):
    # YAML 1.1 reads 2.0e7 (no exponent sign) as a string
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{name} must be a number, got {v!r}") from None
    return v


def build_budget(sec):
    if not sec:
        return None
    sec = {k: _number(k, v) for k, v in sec.items()}
    if isinstance(sec.get("max_layers"), float):
        sec["max_layers"] = int(sec["max_layers"])
    try:
        return Budget.from_dict(sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad budget: {exc}") from None


def build_cost_model(sec, base_dir="."):
    if not sec:
        return None
    unknown = set(sec) - {"path", "throughput_gflops_per_ms", "overhead_ms"}
    if unknown:
        raise ConfigError(f"unknown cost_model fields: {sorted(unknown)}")
    thr = sec.get("throughput_gflops_per_ms")
    over = float(sec.get("overhead_ms", 0.0))
    if sec.get("path"):
        path = os.path.join(base_dir, sec["path"])
        return CostModel.load(path, thr, over)
    return CostModel({}, thr, over)


def build_score_config(sec, **overrides):
    kwargs = _fields(ScoreConfig, sec, "score")
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScoreConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad score settings: {exc}") from None


def build_search_config(data, **overrides):
    """SearchConfig from a loaded config; ``overrides`` win over file values.

    Score overrides (``precision``) go to the score section, everything
    else to the search section.
    """
    if "space" not in data:
        raise ConfigError("config needs a 'space' entry")
    space = build_space(data["space"])
    budget = build_budget(_section(data, "budget"))
    cost_model = build_cost_model(_section(data, "cost_model"), data.get("_base_dir", "."))
    if budget is not None and budget.max_latency_ms is not None and cost_model is None:
        raise ConfigError("a latency bound needs a cost_model section")
    score_over = {k: overrides.pop(k) for k in ("precision",) if k in overrides}
    score_sec = dict(_section(data, "score"))
    search = _fields(SearchConfig, _section(data, "search"), "search",
                     skip=("space", "budget", "score_cfg", "cost_model", "initial_arch"))
    search.update({k: v for k, v in overrides.items() if v is not None})
    score_sec.setdefault("seed", search.get("seed", 0))
    score_cfg = build_score_config(score_sec, **score_over)
    try:
        return SearchConfig(space=space, budget=budget, score_cfg=score_cfg,
                            cost_model=cost_model, **search)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad search settings: {exc}") from None


EXAMPLE_CONFIG = """\
# Search configuration.  Every section except 'space' is optional.
space: micro              # micro | I-cifar | I-imagenet | II-cifar | II-imagenet, or a mapping
budget:
  max_flops: 2.0e7        # multiply-accumulates, classifier included
  max_params: 1.0e6
  max_layers: 12          # conv layers after unrolling
# cost_model:
#   path: costs.csv       # columns block_type,kernel,c_in,c_out,resolution,stride,us
#   throughput_gflops_per_ms: 10
#   overhead_ms: 0.01
search:
  proxy: zen              # zen | phi | naswot | flops | params | random
  population_size: 16
  iterations: 200
  seed: 0
  checkpoint_every: 50
  init: population        # population (N random members) | single
score:
  batch_size: 16
  repeats: 2
  precision: f64
"""
