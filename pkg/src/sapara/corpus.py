"""Corpus ingestion: normalization, tokenization, deduplication, vocabulary.

Sentences are represented as tuples of surface strings (``TokenSeq``).
Integer ids live in :class:`Vocabulary` and are only needed where a model
stores tables or breaks ties by id.
"""

from __future__ import annotations

import random
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyAfterNormalization, EmptyCorpus

TokenSeq = tuple[str, ...]

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"
SPECIALS = (UNK, BOS, EOS)


def _strip_punct(text: str) -> str:
    return "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))


def tokenize(text: str) -> TokenSeq:
    """Lowercase, drop Unicode punctuation, split on whitespace.

    Punctuation is deleted rather than replaced by a space, so ``"don't"``
    becomes ``"dont"``.
    """
    tokens = tuple(_strip_punct(text.lower()).split())
    if not tokens:
        raise EmptyAfterNormalization(f"no tokens left in {text!r}")
    return tokens


def detokenize(x: Sequence[str]) -> str:
    return " ".join(x)


def read_lines(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n").rstrip("\r") for line in fh]


def load_corpus(path: str | Path) -> list[TokenSeq]:
    """Tokenize a one-sentence-per-line file, skipping empty lines and
    exact duplicates (first occurrence wins)."""
    seen: set[TokenSeq] = set()
    out: list[TokenSeq] = []
    for line in read_lines(path):
        try:
            seq = tokenize(line)
        except EmptyAfterNormalization:
            continue
        if seq in seen:
            continue
        seen.add(seq)
        out.append(seq)
    if not out:
        raise EmptyCorpus(f"{path}: no sentences survived normalization")
    return out


def load_aligned(path: str | Path) -> list[TokenSeq]:
    """Tokenize every line without deduplication (for aligned reference files)."""
    return [tokenize(line) for line in read_lines(path) if line.strip()]


def save_corpus(corpus: Iterable[TokenSeq], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in corpus:
            fh.write(detokenize(seq) + "\n")


@dataclass(frozen=True)
class Vocabulary:
    """Dense surface<->id mapping with reserved specials at ids 0, 1, 2."""

    surfaces: tuple[str, ...]
    ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.surfaces[: len(SPECIALS)] != SPECIALS:
            raise ValueError("vocabulary must start with the special tokens")
        ids = {s: i for i, s in enumerate(self.surfaces)}
        if len(ids) != len(self.surfaces):
            raise ValueError("duplicate surface in vocabulary")
        object.__setattr__(self, "ids", ids)

    unk_id = 0
    bos_id = 1
    eos_id = 2

    def __len__(self) -> int:
        return len(self.surfaces)

    def __contains__(self, surface: str) -> bool:
        return surface in self.ids

    def id(self, surface: str) -> int:
        return self.ids.get(surface, self.unk_id)

    def lookup(self, idx: int) -> str:
        return self.surfaces[idx]

    def encode(self, x: Sequence[str]) -> tuple[int, ...]:
        ids = self.ids
        return tuple(ids.get(w, 0) for w in x)

    def word_ids(self) -> range:
        """Ids of ordinary (non-special) words."""
        return range(len(SPECIALS), len(self.surfaces))

    def map_unk(self, x: Sequence[str]) -> TokenSeq:
        return tuple(w if w in self.ids else UNK for w in x)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, s in enumerate(self.surfaces):
                fh.write(f"{i}\t{s}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        surfaces = []
        for n, line in enumerate(read_lines(path)):
            if not line:
                continue
            idx, surface = line.split("\t")
            if int(idx) != n:
                raise ValueError(f"{path}: ids must be dense and ordered (line {n + 1})")
            surfaces.append(surface)
        return cls(tuple(surfaces))


def build_vocab(corpus: Sequence[TokenSeq], min_count: int = 1) -> Vocabulary:
    """Words seen at least ``min_count`` times, in order of first occurrence."""
    if not corpus:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter(w for seq in corpus for w in seq)
    order: dict[str, None] = {}
    for seq in corpus:
        for w in seq:
            if counts[w] >= min_count:
                order.setdefault(w, None)
    return Vocabulary(SPECIALS + tuple(order))


def split_indices(n: int, test_fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Deterministic seeded train/test partition of ``range(n)``; both parts sorted."""
    if not 0.0 <= test_fraction <= 1.0:
        raise ValueError("test_fraction must lie in [0, 1]")
    idx = list(range(n))
    random.Random(seed).shuffle(idx)
    n_test = int(round(n * test_fraction))
    return sorted(idx[n_test:]), sorted(idx[:n_test])
