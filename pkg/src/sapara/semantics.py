"""Word embeddings, RAKE keywords and the semantic-preservation score."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import read_lines
from .errors import DimensionMismatch, ZeroVector

EPS_CLAMP = 1e-4


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    words: tuple[str, ...]
    matrix: np.ndarray  # (len(words), dim)
    index: dict[str, int] = field(init=False, repr=False, compare=False)
    unit: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.matrix.shape != (len(self.words), self.dim):
            raise DimensionMismatch(f"matrix shape {self.matrix.shape} does not match {len(self.words)}x{self.dim}")
        object.__setattr__(self, "index", {w: i for i, w in enumerate(self.words)})
        norms = np.linalg.norm(self.matrix, axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(norms > 0, self.matrix / norms, 0.0)
        unit.flags.writeable = False
        self.matrix.flags.writeable = False
        object.__setattr__(self, "unit", unit)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def __len__(self) -> int:
        return len(self.words)

    def get(self, word: str) -> np.ndarray | None:
        """Stored vector, or ``None`` for a miss (never a zero vector)."""
        i = self.index.get(word)
        return None if i is None else self.matrix[i]

    @classmethod
    def from_dict(cls, vectors: dict[str, Sequence[float]]) -> "EmbeddingTable":
        words = tuple(vectors)
        mat = np.array([np.asarray(vectors[w], dtype=float) for w in words])
        if mat.ndim != 2:
            raise DimensionMismatch("vectors have inconsistent lengths")
        return cls(mat.shape[1], words, mat)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read the plain word-vector text format: ``word v1 ... vD`` per line."""
    words: list[str] = []
    rows: list[list[float]] = []
    dim = None
    for n, line in enumerate(read_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.rstrip(" ").split(" ")
        if dim is None:
            dim = len(parts) - 1
        if len(parts) - 1 != dim or dim < 1:
            raise DimensionMismatch(f"{path}:{n}: expected {dim} values, found {len(parts) - 1}")
        words.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    if dim is None:
        raise DimensionMismatch(f"{path}: empty embedding file")
    return EmbeddingTable(dim, tuple(words), np.array(rows))


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for w, row in zip(table.words, table.matrix):
            fh.write(w + " " + " ".join(repr(float(v)) for v in row) + "\n")


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """One word per line; ``None`` loads the bundled English list."""
    if path is None:
        text = resources.files("sapara").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
        lines = text.splitlines()
    else:
        lines = read_lines(path)
    return frozenset(w.strip().lower() for w in lines if w.strip())


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionMismatch(f"cosine of vectors with shapes {u.shape} and {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    c = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(-1.0, c))


def candidate_phrases(x: Sequence[str], stopwords: Iterable[str]) -> list[tuple[str, ...]]:
    """Maximal runs of non-stopwords, first occurrence of each distinct phrase."""
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    phrases: list[tuple[str, ...]] = []
    run: list[str] = []
    for w in list(x) + [None]:
        if w is None or w in stop:
            if run:
                phrases.append(tuple(run))
                run = []
        else:
            run.append(w)
    return list(dict.fromkeys(phrases))


def rake_scores(phrases: Sequence[tuple[str, ...]]) -> list[float]:
    freq: dict[str, int] = {}
    degree: dict[str, int] = {}
    for ph in phrases:
        for w in ph:
            freq[w] = freq.get(w, 0) + 1
            degree[w] = degree.get(w, 0) + len(ph)
    word_score = {w: degree[w] / freq[w] for w in freq}
    return [sum(word_score[w] for w in ph) for ph in phrases]


def extract_keywords(x: Sequence[str], stopwords: Iterable[str]) -> tuple[str, ...]:
    """Words of the ceil(l/3) best RAKE phrases, in sentence order, no repeats."""
    phrases = candidate_phrases(x, stopwords)
    if not phrases:
        return ()
    scores = rake_scores(phrases)
    n_keep = math.ceil(len(x) / 3)
    ranked = sorted(range(len(phrases)), key=lambda i: (-scores[i], i))[:n_keep]
    keep = {w for i in ranked for w in phrases[i]}
    return tuple(dict.fromkeys(w for w in x if w in keep))


def _unit_rows(x: Sequence[str], emb: EmbeddingTable) -> np.ndarray:
    idx = [emb.index[w] for w in x if w in emb.index]
    return emb.unit[idx]


def keyword_sim_detail(
    x: Sequence[str],
    x0: Sequence[str],
    emb: EmbeddingTable,
    stopwords: Iterable[str],
    floor: float = EPS_CLAMP,
) -> tuple[float, int]:
    """(similarity, number of x0 keywords skipped for lack of an embedding)."""
    keywords = extract_keywords(x0, stopwords)
    usable = [e for e in keywords if e in emb.index]
    skipped = len(keywords) - len(usable)
    if not usable:
        return 1.0, skipped
    words = _unit_rows(x, emb)
    if len(words) == 0:
        return floor, skipped
    cos = _unit_rows(usable, emb) @ words.T  # (keywords, words)
    return float(np.clip(cos.max(axis=1).min(), -1.0, 1.0)), skipped


def keyword_sim(x, x0, emb, stopwords, floor: float = EPS_CLAMP) -> float:
    """min over x0 keywords of max over words of x of the cosine similarity."""
    return keyword_sim_detail(x, x0, emb, stopwords, floor)[0]


def sentence_vector(x: Sequence[str], emb: EmbeddingTable) -> np.ndarray:
    idx = [emb.index[w] for w in x if w in emb.index]
    if not idx:
        raise ZeroVector(f"no embeddable words in {' '.join(x)!r}")
    return emb.matrix[idx].mean(axis=0)


def sentence_sim(x, x0, emb: EmbeddingTable) -> float:
    return cosine(sentence_vector(x, emb), sentence_vector(x0, emb))


def clamp(value: float, eps: float = EPS_CLAMP) -> float:
    return min(1.0, max(eps, value))


def combine_semantic(key: float, sen: float, p: float, q: float, eps: float = EPS_CLAMP) -> float:
    """key**p * sen**q with both factors clamped to [eps, 1]."""
    if p < 0 or q < 0:
        raise ValueError("semantic weights must be non-negative")
    return clamp(key, eps) ** p * clamp(sen, eps) ** q


def semantic_score(x, x0, emb, stopwords, p: float = 8.0, q: float = 1.0, eps: float = EPS_CLAMP) -> float:
    key = keyword_sim(x, x0, emb, stopwords, floor=eps)
    try:
        sen = sentence_sim(x, x0, emb)
    except ZeroVector:
        sen = eps
    return combine_semantic(key, sen, p, q, eps)
