"""Training-free architecture search with expressivity scores.

Modules
-------
tensor    forward-only NCHW kernel (conv, BN variants, ReLU, pooling)
arch      block descriptors, architectures, search spaces, mutation, JSON format
network   unrolling blocks into layers; the residual-free scoring chain
corpus    ResNets and the published ZenNet structure tables
proxies   Zen-Score, Phi-score, NASWOT, BN-rescaling check, depth/width sweeps
budget    FLOPs/params counters, latency cost model, budget gate
search    evolutionary search with checkpoints
config    YAML search configuration
report    CSV/JSON tables and SVG plots
cli       the ``zennas`` command
"""
from .arch import (Architecture, BlockDescriptor, SearchSpace, enumerate_space, micro_space,
                   mutate, parse, random_arch, search_space_I, search_space_II, serialize,
                   validate)
from .budget import (Budget, CostModel, bench_latency, count_flops, count_params,
                     estimate_latency, within_budget)
from .corpus import builtin, resnet, zennet
from .network import strip_for_scoring
from .errors import (ArchParseError, CheckpointError, ConfigError, DegenerateScore,
                     MutationExhausted, SpaceInfeasible, StructuralError, ZenNASError)
from .proxies import (ScoreConfig, ScoreResult, fig2_families, naswot_score, phi_score, score,
                      theorem1_ratio, zen_score)
from .search import ConvergenceLog, Population, SearchConfig, evolve, resume, step

__version__ = "0.1.0"
