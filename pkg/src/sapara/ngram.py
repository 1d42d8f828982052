"""Interpolated add-k n-gram language models.

Each order contributes an add-k estimate; the estimates are mixed with
fixed per-order weights.  Orders whose context was never observed are
dropped from the mixture and the remaining weights renormalized, so every
conditional distribution over the outcome set (vocabulary minus BOS) is
proper and, for ``add_k > 0``, strictly positive.

A backward model is the same machinery trained on reversed sentences.
:meth:`NGramLM.log_prob` scores a sequence in the order it is given, so
callers hand a backward model the reversed sentence.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import TokenSeq, Vocabulary, build_vocab, read_lines
from .errors import EmptyCorpus, InvalidPosition

FORMAT_TAG = "#sapara-ngram"
FORMAT_VERSION = 1

FORWARD = "forward"
BACKWARD = "backward"


def default_weights(order: int) -> tuple[float, ...]:
    """Geometric weights favouring higher orders, e.g. (1/7, 2/7, 4/7) for trigrams."""
    raw = [2.0**m for m in range(order)]
    total = sum(raw)
    return tuple(r / total for r in raw)


class NGramLM:
    def __init__(
        self,
        vocab: Vocabulary,
        order: int,
        direction: str,
        top_counts: dict[tuple[int, ...], int],
        add_k: float = 0.1,
        weights: Sequence[float] | None = None,
        score_eos: bool = True,
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if direction not in (FORWARD, BACKWARD):
            raise ValueError(f"direction must be forward or backward, got {direction!r}")
        if add_k < 0:
            raise ValueError("add_k must be >= 0")
        weights = tuple(default_weights(order) if weights is None else weights)
        if len(weights) != order or any(w < 0 for w in weights) or sum(weights) <= 0:
            raise ValueError("need one non-negative weight per order with a positive sum")
        self.vocab = vocab
        self.order = order
        self.direction = direction
        self.add_k = float(add_k)
        self.weights = weights
        self.score_eos = score_eos
        self.top_counts = dict(top_counts)

        # counts[m][context] -> {word: count} for m = 1..order (context length m-1)
        self._counts: list[dict[tuple[int, ...], dict[int, int]]] = [dict() for _ in range(order + 1)]
        self._totals: list[dict[tuple[int, ...], int]] = [dict() for _ in range(order + 1)]
        for m in range(1, order + 1):
            table: dict[tuple[int, ...], Counter] = defaultdict(Counter)
            for gram, c in self.top_counts.items():
                table[gram[order - m : order - 1]][gram[-1]] += c
            self._counts[m] = {h: dict(ws) for h, ws in table.items()}
            self._totals[m] = {h: sum(ws.values()) for h, ws in table.items()}

        self.n_outcomes = len(vocab) - 1  # every id except BOS
        self._outcome_mask = np.ones(len(vocab), dtype=bool)
        self._outcome_mask[vocab.bos_id] = False
        self._logp_cache: dict[tuple[tuple[int, ...], int], float] = {}
        self._dist_cache: dict[tuple[int, ...], np.ndarray] = {}
        self._topk_cache: dict = {}

    # -- conditional probabilities -------------------------------------

    def _mixture(self, context: tuple[int, ...]) -> list[tuple[int, float, tuple[int, ...], int]]:
        """(order, weight, context, context_total) for each usable order."""
        n = self.order
        parts = []
        for m in range(1, n + 1):
            h = context[len(context) - (m - 1) :] if m > 1 else ()
            total = self._totals[m].get(h, 0)
            if total > 0:
                parts.append((m, self.weights[m - 1], h, total))
        wsum = sum(p[1] for p in parts)
        if wsum <= 0:
            m, _, h, total = parts[-1]
            return [(m, 1.0, h, total)]
        return [(m, w / wsum, h, total) for m, w, h, total in parts if w > 0]

    def _context(self, history: Sequence[int]) -> tuple[int, ...]:
        need = self.order - 1
        if need == 0:
            return ()
        padded = (self.vocab.bos_id,) * need + tuple(history)
        return padded[len(padded) - need :]

    def cond_prob(self, word: int, context: tuple[int, ...]) -> float:
        """p(word | context); ``context`` holds exactly ``order - 1`` ids."""
        if word == self.vocab.bos_id:
            return 0.0
        k = self.add_k
        p = 0.0
        for m, w, h, total in self._mixture(context):
            c = self._counts[m][h].get(word, 0)
            p += w * (c + k) / (total + k * self.n_outcomes)
        return p

    def cond_logprob(self, word: int, context: tuple[int, ...]) -> float:
        key = (context, word)
        cached = self._logp_cache.get(key)
        if cached is None:
            p = self.cond_prob(word, context)
            cached = math.log(p) if p > 0 else -math.inf
            self._logp_cache[key] = cached
        return cached

    def distribution(self, context: tuple[int, ...]) -> np.ndarray:
        """Full conditional distribution over vocabulary ids (BOS gets 0)."""
        cached = self._dist_cache.get(context)
        if cached is not None:
            return cached
        k = self.add_k
        dist = np.zeros(len(self.vocab))
        for m, w, h, total in self._mixture(context):
            denom = total + k * self.n_outcomes
            level = np.full(len(self.vocab), k / denom)
            for word, c in self._counts[m][h].items():
                level[word] += c / denom
            dist += w * level
        dist[~self._outcome_mask] = 0.0
        dist.flags.writeable = False
        self._dist_cache[context] = dist
        return dist

    # -- sentence scoring -------------------------------------------------

    def log_prob(self, x: Sequence[str]) -> float:
        """Natural-log probability of ``x`` read in the order given."""
        ids = self.vocab.encode(x)
        need = self.order - 1
        padded = (self.vocab.bos_id,) * need + ids
        total = 0.0
        for j in range(need, len(padded)):
            total += self.cond_logprob(padded[j], padded[j - need : j])
        if self.score_eos:
            total += self.cond_logprob(self.vocab.eos_id, padded[len(padded) - need :])
        return total

    def fluency(self, x: Sequence[str]) -> float:
        return math.exp(self.log_prob(x))

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        surf = self.vocab.surfaces
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{FORMAT_TAG}\t{FORMAT_VERSION}\n")
            fh.write(f"order\t{self.order}\n")
            fh.write(f"direction\t{self.direction}\n")
            fh.write(f"add_k\t{self.add_k!r}\n")
            fh.write("weights\t" + " ".join(repr(w) for w in self.weights) + "\n")
            fh.write(f"score_eos\t{int(self.score_eos)}\n")
            fh.write("@vocab\n")
            for i, s in enumerate(surf):
                fh.write(f"{i}\t{s}\n")
            fh.write("@counts\n")
            for gram in sorted(self.top_counts):
                fh.write(" ".join(surf[i] for i in gram) + f"\t{self.top_counts[gram]}\n")

    @classmethod
    def load(cls, path: str | Path) -> "NGramLM":
        lines = read_lines(path)
        if not lines or not lines[0].startswith(FORMAT_TAG):
            raise ValueError(f"{path}: not an n-gram model file")
        version = int(lines[0].split("\t")[1])
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        header: dict[str, str] = {}
        i = 1
        while lines[i] != "@vocab":
            key, value = lines[i].split("\t", 1)
            header[key] = value
            i += 1
        i += 1
        surfaces = []
        while lines[i] != "@counts":
            surfaces.append(lines[i].split("\t", 1)[1])
            i += 1
        vocab = Vocabulary(tuple(surfaces))
        counts = {}
        for line in lines[i + 1 :]:
            if not line:
                continue
            gram, c = line.rsplit("\t", 1)
            counts[tuple(vocab.ids[s] for s in gram.split(" "))] = int(c)
        return cls(
            vocab,
            order=int(header["order"]),
            direction=header["direction"],
            top_counts=counts,
            add_k=float(header["add_k"]),
            weights=[float(w) for w in header["weights"].split()],
            score_eos=bool(int(header["score_eos"])),
        )


def train_lm(
    corpus: Sequence[TokenSeq],
    order: int = 3,
    direction: str = FORWARD,
    vocab: Vocabulary | None = None,
    add_k: float = 0.1,
    weights: Sequence[float] | None = None,
    score_eos: bool = True,
) -> NGramLM:
    """Count BOS-padded n-grams (one EOS per sentence); backward models see
    every sentence reversed."""
    if not corpus:
        raise EmptyCorpus("cannot train a language model on an empty corpus")
    if order < 1:
        raise ValueError("order must be >= 1")
    if vocab is None:
        vocab = build_vocab(corpus)
    need = order - 1
    counts: Counter = Counter()
    for seq in corpus:
        ids = vocab.encode(seq)
        if direction == BACKWARD:
            ids = ids[::-1]
        padded = (vocab.bos_id,) * need + ids + (vocab.eos_id,)
        for j in range(need, len(padded)):
            counts[padded[j - need : j + 1]] += 1
    return NGramLM(vocab, order, direction, counts, add_k=add_k, weights=weights, score_eos=score_eos)


def fluency(lm_fwd: NGramLM, x: Sequence[str]) -> float:
    """Product of forward conditional probabilities, exp(log_prob)."""
    return lm_fwd.fluency(x)


def topk_candidates(
    lm_fwd: NGramLM,
    lm_bwd: NGramLM,
    x: Sequence[str],
    position: int,
    mode: str,
    k: int,
) -> list[str]:
    """Words maximizing p_fwd(w | left context) * p_bwd(w | right context).

    ``mode`` is ``"insert"`` (slot ``position`` in 0..l) or ``"replace"``
    (word ``position`` in 0..l-1).  Ties go to the smaller token id.
    """
    l = len(x)
    if mode == "insert":
        if not 0 <= position <= l:
            raise InvalidPosition(f"insert slot {position} outside 0..{l}")
        prefix, suffix = x[:position], x[position:]
    elif mode == "replace":
        if not 0 <= position < l:
            raise InvalidPosition(f"replace position {position} outside 0..{l - 1}")
        prefix, suffix = x[:position], x[position + 1 :]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _topk_cached(lm_fwd, lm_bwd, tuple(prefix), tuple(suffix), k)


def _topk_cached(lm_fwd, lm_bwd, prefix, suffix, k):
    ctx_f = lm_fwd._context(lm_fwd.vocab.encode(prefix))
    ctx_b = lm_bwd._context(lm_bwd.vocab.encode(suffix[::-1]))
    cache = lm_fwd._topk_cache
    key = (lm_bwd, ctx_f, ctx_b, k)
    hit = cache.get(key)
    if hit is not None:
        return list(hit)
    vocab = lm_fwd.vocab
    scores = lm_fwd.distribution(ctx_f) * lm_bwd.distribution(ctx_b)
    ids = np.arange(vocab.word_ids().start, len(vocab))
    word_scores = scores[ids]
    order = np.lexsort((ids, -word_scores))[:k]
    out = tuple(vocab.surfaces[i] for i in ids[order])
    cache[key] = out
    return list(out)


def copy_augment(candidates: Sequence[str], x0: Sequence[str]) -> list[str]:
    """Union of candidates with the words of ``x0``; candidate order first."""
    out = list(dict.fromkeys(candidates))
    seen = set(out)
    for w in x0:
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out
