"""Sentence-level BLEU, iBLEU and the lexical-diversity score."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyInput, LengthMismatch

EPS_CLAMP = 1e-4


@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    smoothing_k: float = 1.0  # added to numerator and denominator for n >= 2

    def __post_init__(self):
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")
        if self.smoothing_k < 0:
            raise ValueError("smoothing_k must be >= 0")


UNSMOOTHED = BleuConfig(max_n=4, smoothing_k=0.0)


@dataclass(frozen=True)
class IBleuConfig:
    alpha: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


def ngram_counts(seq: Sequence[str], n: int) -> Counter:
    if n == 1:
        return Counter(seq)
    return Counter(zip(*(seq[i:] for i in range(n))))


class References:
    """Pre-counted references, reusable across many candidates."""

    def __init__(self, references: Sequence[Sequence[str]], max_n: int):
        if not references or any(len(r) == 0 for r in references):
            raise EmptyInput("references must be non-empty")
        self.lengths = sorted(len(r) for r in references)
        self.max_counts: list[Counter] = [Counter()]
        for n in range(1, max_n + 1):
            merged: Counter = Counter()
            for r in references:
                for g, c in ngram_counts(r, n).items():
                    if c > merged[g]:
                        merged[g] = c
            self.max_counts.append(merged)

    def closest_length(self, c: int) -> int:
        return min(self.lengths, key=lambda r: (abs(r - c), r))


def bleu_against(candidate: Sequence[str], refs: References, cfg: BleuConfig) -> float:
    c = len(candidate)
    if c == 0:
        raise EmptyInput("candidate must be non-empty")
    log_sum = 0.0
    used = 0
    for n in range(1, cfg.max_n + 1):
        total = c - n + 1
        if total <= 0:
            break
        ref_counts = refs.max_counts[n]
        clipped = 0
        for g, cnt in ngram_counts(candidate, n).items():
            r = ref_counts.get(g)
            if r:
                clipped += cnt if cnt < r else r
        if n >= 2 and cfg.smoothing_k > 0:
            num, den = clipped + cfg.smoothing_k, total + cfg.smoothing_k
        else:
            num, den = clipped, total
        if num == 0:
            return 0.0
        log_sum += math.log(num / den)
        used += 1
    r = refs.closest_length(c)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum / used)


def bleu(candidate: Sequence[str], references: Sequence[Sequence[str]], cfg: BleuConfig = BleuConfig()) -> float:
    """Clipped n-gram precision geometric mean times the brevity penalty.

    Orders longer than the candidate contribute no n-grams and are left out
    of the geometric mean, so ``bleu(x, [x]) == 1`` for any length.
    """
    return bleu_against(candidate, References(references, cfg.max_n), cfg)


def ibleu(candidate, reference, source, cfg: IBleuConfig = IBleuConfig(), bleu_cfg: BleuConfig = BleuConfig()) -> float:
    a = cfg.alpha
    return a * bleu(candidate, [reference], bleu_cfg) - (1.0 - a) * bleu(candidate, [source], bleu_cfg)


def lexical_diversity(x, x0, s: float = 1.0, eps: float = EPS_CLAMP) -> float:
    """(1 - unsmoothed BLEU(x, x0))**s, base clamped to [eps, 1]."""
    base = 1.0 - bleu(x, [x0], UNSMOOTHED)
    return min(1.0, max(eps, base)) ** s


def corpus_bleu(candidates, references, cfg: BleuConfig = BleuConfig()) -> float:
    """Corpus-level BLEU with one reference per candidate (pooled counts)."""
    if len(candidates) != len(references):
        raise LengthMismatch(f"{len(candidates)} candidates vs {len(references)} references")
    if not candidates:
        raise EmptyInput("empty corpus")
    clipped = [0] * (cfg.max_n + 1)
    totals = [0] * (cfg.max_n + 1)
    c_len = r_len = 0
    for cand, ref in zip(candidates, references):
        c_len += len(cand)
        r_len += len(ref)
        for n in range(1, cfg.max_n + 1):
            ref_counts = ngram_counts(ref, n)
            for g, cnt in ngram_counts(cand, n).items():
                clipped[n] += min(cnt, ref_counts.get(g, 0))
            totals[n] += max(0, len(cand) - n + 1)
    log_sum = 0.0
    used = 0
    for n in range(1, cfg.max_n + 1):
        if totals[n] == 0:
            break
        k = cfg.smoothing_k if n >= 2 else 0.0
        num, den = clipped[n] + k, totals[n] + k
        if num == 0:
            return 0.0
        log_sum += math.log(num / den)
        used += 1
    bp = 1.0 if c_len >= r_len else math.exp(1.0 - r_len / c_len)
    return bp * math.exp(log_sum / used)


@dataclass
class EvalReport:
    bleu: list[float]
    ibleu: list[float]
    mean_bleu: float
    mean_ibleu: float
    corpus_bleu: float
    corpus_ibleu: float

    @property
    def mean_bleu_pct(self) -> float:
        return 100.0 * self.mean_bleu

    @property
    def mean_ibleu_pct(self) -> float:
        return 100.0 * self.mean_ibleu

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "bleu", "ibleu"])
            for i, (b, ib) in enumerate(zip(self.bleu, self.ibleu)):
                w.writerow([i, repr(b), repr(ib)])
            w.writerow(["mean", repr(self.mean_bleu), repr(self.mean_ibleu)])
            w.writerow(["corpus", repr(self.corpus_bleu), repr(self.corpus_ibleu)])


def evaluate_corpus(
    outputs,
    references,
    sources,
    bleu_cfg: BleuConfig = BleuConfig(),
    ibleu_cfg: IBleuConfig = IBleuConfig(),
) -> EvalReport:
    if not (len(outputs) == len(references) == len(sources)):
        raise LengthMismatch(f"lengths differ: {len(outputs)}, {len(references)}, {len(sources)}")
    if not outputs:
        raise EmptyInput("nothing to evaluate")
    b = [bleu(o, [r], bleu_cfg) for o, r in zip(outputs, references)]
    ib = [ibleu(o, r, s, ibleu_cfg, bleu_cfg) for o, r, s in zip(outputs, references, sources)]
    a = ibleu_cfg.alpha
    cb_ref = corpus_bleu(outputs, references, bleu_cfg)
    cb_src = corpus_bleu(outputs, sources, bleu_cfg)
    return EvalReport(
        bleu=b,
        ibleu=ib,
        mean_bleu=sum(b) / len(b),
        mean_ibleu=sum(ib) / len(ib),
        corpus_bleu=cb_ref,
        corpus_ibleu=a * cb_ref - (1.0 - a) * cb_src,
    )
