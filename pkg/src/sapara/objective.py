"""The heuristic paraphrase objective and its surrogate-combined variants.

``f(x | x0) = score_scale * flu(x) * key(x, x0)**P * sen(x, x0)**Q * lex(x, x0)``

assembled in the log domain.  Objectives are callables ``obj(x, x0) -> float``;
every objective exposes ``.base`` (the heuristic objective that owns the
models) because word proposals are always weighted by the heuristic
components, whatever objective drives acceptance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import TokenSeq
from .metrics import UNSMOOTHED, ngram_counts
from .ngram import NGramLM
from .semantics import EPS_CLAMP, EmbeddingTable, extract_keywords

KINDS = ("original", "value", "maxvalue", "s2s")


@dataclass(frozen=True)
class ObjectiveConfig:
    p: float = 8.0
    q: float = 1.0
    s: float = 1.0
    score_scale: float = 1.0
    eps: float = EPS_CLAMP

    def __post_init__(self):
        if min(self.p, self.q, self.s) < 0:
            raise ValueError("objective weights must be non-negative")
        if not self.score_scale > 0:
            raise ValueError("score_scale must be positive")
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")


@dataclass(frozen=True)
class CombineConfig:
    k: float = 0.0
    d: float = 100.0

    def __post_init__(self):
        if not 0.0 <= self.k <= 1.0:
            raise ValueError("k must lie in [0, 1]")
        if not self.d > 0:
            raise ValueError("d must be positive")


@dataclass(frozen=True)
class Models:
    lm_fwd: NGramLM
    lm_bwd: NGramLM
    emb: EmbeddingTable
    stopwords: frozenset[str]


@dataclass(frozen=True)
class ScoreBreakdown:
    flu: float
    sem_key: float  # clamped to [eps, 1], before the P power
    sem_sen: float  # clamped to [eps, 1], before the Q power
    lex: float  # already raised to S
    log_total: float
    total: float
    skipped_keywords: int = 0


class _SourceContext:
    """Everything about x0 that candidate scoring reuses.

    Keyword cosines are filled in lazily, one embedding row at a time.
    """

    def __init__(self, x0: TokenSeq, models: Models):
        emb = models.emb
        self.emb = emb
        self.keywords = extract_keywords(x0, models.stopwords)
        usable = [e for e in self.keywords if e in emb.index]
        self.skipped = len(self.keywords) - len(usable)
        self.kw_unit = emb.unit[[emb.index[e] for e in usable]] if usable else None
        idx = [emb.index[w] for w in x0 if w in emb.index]
        self.sen_unit = None
        if idx:
            mean = emb.matrix[idx].mean(axis=0)
            norm = float(np.linalg.norm(mean))
            if norm > 0:
                self.sen_unit = mean / norm
        self._kw_cos: dict[int, tuple[float, ...]] = {}
        self.refs = [ngram_counts(x0, n) for n in range(UNSMOOTHED.max_n + 1)]
        self.ref_len = len(x0)

    def kw_cos(self, i: int) -> tuple[float, ...]:
        row = self._kw_cos.get(i)
        if row is None:
            row = self._kw_cos[i] = tuple((self.kw_unit @ self.emb.unit[i]).tolist())
        return row

    def keyword_sim(self, idx: list[int], eps: float) -> float:
        if self.kw_unit is None:
            return 1.0
        if not idx:
            return eps
        rows = [self.kw_cos(i) for i in idx]
        return min(max(col) for col in zip(*rows))

    def sentence_sim(self, idx: list[int], eps: float) -> float:
        if self.sen_unit is None or not idx:
            return eps
        total = self.emb.matrix[idx].sum(axis=0)
        norm = math.sqrt(float(total @ total))
        return float(total @ self.sen_unit) / norm if norm > 0 else eps

    def bleu(self, x: TokenSeq) -> float:
        """Unsmoothed single-reference BLEU against x0."""
        c = len(x)
        logs = []
        for n in range(1, UNSMOOTHED.max_n + 1):
            total = c - n + 1
            if total <= 0:
                break
            ref = self.refs[n]
            used: dict = {}
            clipped = 0
            grams = x if n == 1 else zip(*(x[i:] for i in range(n)))
            for g in grams:
                u = used.get(g, 0)
                if u < ref.get(g, 0):
                    used[g] = u + 1
                    clipped += 1
            if clipped == 0:
                return 0.0
            logs.append(math.log(clipped / total))
        r = self.ref_len
        bp = 1.0 if c >= r else math.exp(1.0 - r / c)
        return bp * math.exp(sum(logs) / len(logs))


class HeuristicObjective:
    """Base objective; caches component scores per (x0, x)."""

    def __init__(self, models: Models, cfg: ObjectiveConfig = ObjectiveConfig()):
        self.models = models
        self.cfg = cfg
        self._sources: dict[TokenSeq, _SourceContext] = {}
        self._cache: dict[tuple[TokenSeq, TokenSeq], ScoreBreakdown] = {}

    @property
    def base(self) -> "HeuristicObjective":
        return self

    def _source(self, x0: TokenSeq) -> _SourceContext:
        ctx = self._sources.get(x0)
        if ctx is None:
            ctx = self._sources[x0] = _SourceContext(x0, self.models)
        return ctx

    def _compute(self, x: TokenSeq, x0: TokenSeq) -> ScoreBreakdown:
        cfg = self.cfg
        eps = cfg.eps
        m = self.models
        src = self._source(x0)

        log_flu = m.lm_fwd.log_prob(x)
        index = m.emb.index
        idx = [index[w] for w in x if w in index]
        key = min(1.0, max(eps, src.keyword_sim(idx, eps)))
        sen = min(1.0, max(eps, src.sentence_sim(idx, eps)))
        lex_base = min(1.0, max(eps, 1.0 - src.bleu(x)))
        log_lex = cfg.s * math.log(lex_base)

        log_total = log_flu + cfg.p * math.log(key) + cfg.q * math.log(sen) + log_lex
        return ScoreBreakdown(
            flu=math.exp(log_flu),
            sem_key=key,
            sem_sen=sen,
            lex=math.exp(log_lex),
            log_total=log_total,
            total=cfg.score_scale * math.exp(log_total),
            skipped_keywords=src.skipped,
        )

    def breakdown(self, x: Sequence[str], x0: Sequence[str]) -> ScoreBreakdown:
        key = (tuple(x0), tuple(x))
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = self._compute(key[1], key[0])
        return hit

    def __call__(self, x: Sequence[str], x0: Sequence[str]) -> float:
        return self.breakdown(x, x0).total

    def log_proposal_weight(self, x: Sequence[str], x0: Sequence[str]) -> float:
        """log of flu * sem * lex, the unnormalized word-sampling weight."""
        return self.breakdown(x, x0).log_total


def score(x, x0, models: Models, cfg: ObjectiveConfig = ObjectiveConfig()) -> ScoreBreakdown:
    return HeuristicObjective(models, cfg).breakdown(x, x0)


@dataclass
class CombinedObjective:
    """``k * d * surrogate(x, x0) + (1 - k) * base(x, x0)``."""

    base: HeuristicObjective
    surrogate: Callable[[Sequence[str], Sequence[str]], float]
    k: float
    d: float = 1.0
    kind: str = field(default="value")

    def __post_init__(self):
        if not 0.0 <= self.k <= 1.0:
            raise ValueError("k must lie in [0, 1]")

    def __call__(self, x, x0) -> float:
        return self.k * self.d * self.surrogate(x, x0) + (1.0 - self.k) * self.base(x, x0)


def combine_value(base: HeuristicObjective, surrogate, k: float, kind: str = "value") -> CombinedObjective:
    """Convex mix of a value-like predictor ``surrogate(x, x0)`` with the base."""
    return CombinedObjective(base, surrogate, k, 1.0, kind)


def combine_s2s(base: HeuristicObjective, emission, k: float, d: float = 100.0) -> CombinedObjective:
    """Mix ``d * P_s2s(x | x0)`` with the base; ``emission(x, x0)`` is a probability."""
    return CombinedObjective(base, emission, k, d, "s2s")
