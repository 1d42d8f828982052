"""Simulated annealing over word-level edits.

Each step draws, from one seeded generator and always in this order: the
edit operation, the edit position, the inserted/replacing word (insert and
replace only) and the acceptance uniform.  The acceptance uniform is drawn
even when acceptance is certain, so two objectives that agree on every
decision consume the stream identically.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .corpus import TokenSeq
from .errors import DegenerateOps, EmptyCandidateSet, EmptyInput, InvalidPosition
from .ngram import copy_augment, topk_candidates
from .trajectories import INIT, Trajectory, TrajStep

INSERT = "insert"
REPLACE = "replace"
DELETE = "delete"
OPS = (INSERT, REPLACE, DELETE)


@dataclass(frozen=True)
class SAConfig:
    t_init: float = 3e-2
    anneal_rate: float = 3e-4
    steps: int = 100
    top_k: int = 25
    op_probs: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    seed: int = 0
    min_len: int = 1

    def __post_init__(self):
        if not self.t_init > 0:
            raise ValueError("t_init must be positive")
        if self.anneal_rate < 0:
            raise ValueError("anneal_rate must be >= 0")
        if self.steps < 0 or self.top_k < 1 or self.min_len < 1:
            raise ValueError("steps >= 0, top_k >= 1 and min_len >= 1 required")
        probs = tuple(float(p) for p in self.op_probs)
        if len(probs) != 3 or any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"op_probs must be three non-negative numbers summing to 1, got {self.op_probs}")
        object.__setattr__(self, "op_probs", probs)


@dataclass(frozen=True)
class Proposal:
    op: str
    position: int
    word: str | None
    candidate: TokenSeq
    z: float | None = None  # normalizer of the word distribution


@dataclass
class SearchResult:
    output: TokenSeq
    final: TokenSeq
    trajectory: Trajectory
    output_score: float = field(default=0.0)


def temperature(t: int, cfg: SAConfig) -> float:
    return max(cfg.t_init - cfg.anneal_rate * t, 0.0)


def accept_prob(f_new: float, f_old: float, temp: float) -> float:
    if temp < 0:
        raise ValueError("temperature must be >= 0")
    if f_new >= f_old:
        return 1.0
    if temp == 0:
        return 0.0
    return math.exp((f_new - f_old) / temp)


def _categorical(probs: Sequence[float], rng: np.random.Generator) -> int:
    u = rng.random() * sum(probs)
    acc = 0.0
    last = 0
    for i, p in enumerate(probs):
        if p <= 0:
            continue
        acc += p
        last = i
        if u < acc:
            return i
    return last


def sample_op(cfg: SAConfig, rng: np.random.Generator, current_len: int) -> str:
    """Categorical draw over ops; deletion is excluded at ``min_len``."""
    probs = list(cfg.op_probs)
    if current_len <= cfg.min_len:
        probs[2] = 0.0
    if sum(probs) <= 0:
        raise DegenerateOps(f"no legal edit at length {current_len} with op_probs {cfg.op_probs}")
    return OPS[_categorical(probs, rng)]


def sample_position(x: Sequence[str], mode: str, rng: np.random.Generator) -> int:
    n = len(x) + 1 if mode == INSERT else len(x)
    if n <= 0:
        raise InvalidPosition("cannot edit an empty sentence")
    return int(rng.integers(0, n))


def sample_word(candidates: Sequence[str], log_weights: Sequence[float], rng: np.random.Generator) -> tuple[int, float]:
    """Index drawn proportionally to exp(log_weights), and the normalizer Z."""
    lw = np.asarray(log_weights, dtype=float)
    top = float(lw.max())
    if not math.isfinite(top):
        w = np.ones(len(lw))
        z = 0.0
    else:
        w = np.exp(lw - top)
        z = float(w.sum()) * math.exp(top)
    cdf = np.cumsum(w)
    u = rng.random() * cdf[-1]
    i = int(np.searchsorted(cdf, u, side="right"))
    return min(i, len(candidates) - 1), z


def propose(x: TokenSeq, x0: TokenSeq, position: int, op: str, base, cfg: SAConfig, rng) -> Proposal:
    """Build the edited sentence; words for insert/replace come from the
    language-model top-K plus the words of ``x0``, weighted by the heuristic
    objective of the sentence each would produce."""
    if op == DELETE:
        if not 0 <= position < len(x):
            raise InvalidPosition(f"delete position {position} outside 0..{len(x) - 1}")
        return Proposal(DELETE, position, None, x[:position] + x[position + 1 :])
    models = base.models
    cands = copy_augment(topk_candidates(models.lm_fwd, models.lm_bwd, x, position, op, cfg.top_k), x0)
    if not cands:
        raise EmptyCandidateSet("no candidate words")
    if op == INSERT:
        sentences = [x[:position] + (w,) + x[position:] for w in cands]
    else:
        sentences = [x[:position] + (w,) + x[position + 1 :] for w in cands]
    log_w = [base.log_proposal_weight(s, x0) for s in sentences]
    i, z = sample_word(cands, log_w, rng)
    return Proposal(op, position, cands[i], sentences[i], z)


def search(x0: Sequence[str], objective, cfg: SAConfig = SAConfig(), traj_id: str = "0") -> SearchResult:
    x0 = tuple(x0)
    if not x0:
        raise EmptyInput("search needs a non-empty input sentence")
    base = objective.base
    rng = np.random.default_rng(cfg.seed)
    x = x0
    f_x = objective(x, x0)
    steps = [TrajStep(traj_id, 0, INIT, True, x, f_x)]
    best, best_score = x, f_x
    for t in range(cfg.steps):
        temp = temperature(t, cfg)
        try:
            op = sample_op(cfg, rng, len(x))
        except DegenerateOps:
            # only deletion is enabled and the sentence is at the floor
            steps.append(TrajStep(traj_id, t + 1, DELETE, False, x, f_x))
            continue
        pos = sample_position(x, op, rng)
        prop = propose(x, x0, pos, op, base, cfg, rng)
        f_new = objective(prop.candidate, x0)
        accepted = bool(rng.random() < accept_prob(f_new, f_x, temp))
        steps.append(TrajStep(traj_id, t + 1, op, accepted, prop.candidate, f_new))
        if accepted:
            x, f_x = prop.candidate, f_new
            if f_x > best_score:
                best, best_score = x, f_x
    return SearchResult(best, x, Trajectory(traj_id, steps), best_score)


def _search_one(args):
    x0, objective, cfg, traj_id = args
    return search(x0, objective, cfg, traj_id)


def search_batch(
    inputs: Sequence[TokenSeq],
    objective,
    cfg: SAConfig = SAConfig(),
    indices: Sequence[int] | None = None,
    jobs: int = 1,
) -> list[SearchResult]:
    """Independent searches; input ``i`` uses seed ``cfg.seed + i`` and
    trajectory id ``str(i)``, where ``i`` comes from ``indices`` if given."""
    if indices is None:
        indices = range(len(inputs))
    tasks = [(x0, objective, replace(cfg, seed=cfg.seed + i), str(i)) for x0, i in zip(inputs, indices)]
    if jobs <= 1:
        return [_search_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_search_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
