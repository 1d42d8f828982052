"""Learned surrogates trained from search trajectories.

* :class:`ValueRegressor` -- a one-hidden-layer tanh network over hand-built
  features of ``(x0, x)``; trained on value or max-value labels by SGD on
  mean squared error.
* :class:`EmissionModel` -- ``p(w_i | w_{i-1}, x0)`` as a mixture of a copy
  distribution over ``x0``, a bigram table and a unigram table, the mixture
  weights fitted by EM on the pseudo-pair cross-entropy.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Vocabulary, build_vocab
from .errors import EmptyTrainingSet, ZeroVector
from .metrics import UNSMOOTHED, bleu
from .objective import Models
from .semantics import extract_keywords, keyword_sim, sentence_sim
from .trajectories import LabeledExample, PseudoPair

FEATURE_NAMES = (
    "log_fluency",
    "keyword_sim",
    "sentence_sim",
    "bleu",
    "length_ratio",
    "edit_distance",
    "keyword_coverage",
    "bias",
)
N_FEATURES = len(FEATURE_NAMES)


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    prev = list(range(len(b) + 1))
    for i, wa in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, wb in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (wa != wb))
        prev = cur
    return prev[-1]


def raw_features(x0: Sequence[str], x: Sequence[str], models: Models) -> np.ndarray:
    """Unstandardized feature vector; the last entry is the constant 1."""
    try:
        sen = sentence_sim(x, x0, models.emb)
    except ZeroVector:
        sen = 0.0
    keywords = extract_keywords(x0, models.stopwords)
    present = set(x)
    coverage = sum(1 for e in keywords if e in present) / len(keywords) if keywords else 1.0
    return np.array(
        [
            models.lm_fwd.log_prob(x),
            keyword_sim(x, x0, models.emb, models.stopwords),
            sen,
            bleu(x, [x0], UNSMOOTHED),
            len(x) / len(x0),
            edit_distance(x0, x) / max(len(x0), len(x)),
            coverage,
            1.0,
        ]
    )


@dataclass(frozen=True)
class RegressorHyper:
    hidden: int = 16
    epochs: int = 50
    batch_size: int = 64
    lr: float = 1e-2
    seed: int = 0
    init_scale: float = 0.1
    momentum: float = 0.0  # heavy-ball term; 0 is plain SGD


@dataclass
class RegressorParams:
    w1: np.ndarray  # (hidden, features)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float

    def flat(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    @classmethod
    def from_flat(cls, v: np.ndarray, hidden: int, features: int) -> "RegressorParams":
        n1 = hidden * features
        return cls(
            v[:n1].reshape(hidden, features).copy(),
            v[n1 : n1 + hidden].copy(),
            v[n1 + hidden : n1 + 2 * hidden].copy(),
            float(v[-1]),
        )

    @classmethod
    def zeros(cls, hidden: int, features: int) -> "RegressorParams":
        return cls(np.zeros((hidden, features)), np.zeros(hidden), np.zeros(hidden), 0.0)

    @classmethod
    def uniform(cls, hidden: int, features: int, rng: np.random.Generator, scale: float) -> "RegressorParams":
        return cls.from_flat(rng.uniform(-scale, scale, hidden * features + 2 * hidden + 1), hidden, features)


def forward(params: RegressorParams, feats: np.ndarray) -> np.ndarray:
    return np.tanh(feats @ params.w1.T + params.b1) @ params.w2 + params.b2


def mse_and_grad(params: RegressorParams, feats: np.ndarray, y: np.ndarray) -> tuple[float, RegressorParams]:
    """Mean squared error over the batch and its gradient."""
    h = np.tanh(feats @ params.w1.T + params.b1)
    err = h @ params.w2 + params.b2 - y
    n = len(y)
    loss = float(err @ err) / n
    g_out = 2.0 * err / n
    g_w2 = h.T @ g_out
    g_b2 = float(g_out.sum())
    g_pre = np.outer(g_out, params.w2) * (1.0 - h * h)
    return loss, RegressorParams(g_pre.T @ feats, g_pre.sum(axis=0), g_w2, g_b2)


@dataclass
class ValueRegressor:
    params: RegressorParams
    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: float = 0.0
    target_std: float = 1.0
    hyper: RegressorHyper = field(default_factory=RegressorHyper)
    final_mse: float = math.nan
    kind: str = "value"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def untrained(cls, hyper: RegressorHyper = RegressorHyper()) -> "ValueRegressor":
        return cls(
            RegressorParams.zeros(hyper.hidden, N_FEATURES),
            np.zeros(N_FEATURES),
            np.ones(N_FEATURES),
            hyper=hyper,
        )

    def standardize(self, raw: np.ndarray) -> np.ndarray:
        out = (raw - self.feature_mean) / self.feature_std
        out[..., -1] = 1.0
        return out

    def featurize(self, x0, x, models: Models) -> np.ndarray:
        return self.standardize(raw_features(x0, x, models))

    def predict_features(self, feats: np.ndarray) -> np.ndarray:
        return forward(self.params, feats) * self.target_std + self.target_mean

    def predict(self, x0, x, models: Models) -> float:
        key = (tuple(x0), tuple(x))
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = float(self.predict_features(self.featurize(x0, x, models)[None, :])[0])
        return hit

    def bind(self, models: Models):
        """Callable ``(x, x0) -> prediction`` for use as a combined objective term."""
        return lambda x, x0: self.predict(x0, x, models)

    def to_dict(self) -> dict:
        return {
            "format": "sapara-regressor",
            "version": 1,
            "kind": self.kind,
            "features": list(FEATURE_NAMES),
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
            "w1": self.params.w1.tolist(),
            "b1": self.params.b1.tolist(),
            "w2": self.params.w2.tolist(),
            "b2": self.params.b2,
            "hyper": asdict(self.hyper),
            "final_mse": self.final_mse,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValueRegressor":
        if d.get("format") != "sapara-regressor":
            raise ValueError("not a regressor model record")
        return cls(
            RegressorParams(np.array(d["w1"]), np.array(d["b1"]), np.array(d["w2"]), float(d["b2"])),
            np.array(d["feature_mean"]),
            np.array(d["feature_std"]),
            float(d["target_mean"]),
            float(d["target_std"]),
            RegressorHyper(**d["hyper"]),
            float(d["final_mse"]),
            d["kind"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ValueRegressor":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_arrays(
    raw: np.ndarray,
    y: np.ndarray,
    hyper: RegressorHyper = RegressorHyper(),
    kind: str = "value",
) -> ValueRegressor:
    """Train on a raw feature matrix (last column = bias) and targets."""
    raw = np.asarray(raw, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise EmptyTrainingSet("no training examples")
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    std[std == 0] = 1.0
    mean[-1], std[-1] = 0.0, 1.0
    t_mean = float(y.mean())
    t_std = float(y.std()) or 1.0

    rng = np.random.default_rng(hyper.seed)
    params = RegressorParams.uniform(hyper.hidden, raw.shape[1], rng, hyper.init_scale)
    model = ValueRegressor(params, mean, std, t_mean, t_std, hyper, kind=kind)
    feats = model.standardize(raw)
    ys = (y - t_mean) / t_std
    n = len(ys)
    arrays = (params.w1, params.b1, params.w2)
    velocity = [np.zeros_like(w) for w in arrays]
    v_b2 = 0.0
    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            idx = order[start : start + hyper.batch_size]
            _, g = mse_and_grad(params, feats[idx], ys[idx])
            for w, v, gw in zip(arrays, velocity, (g.w1, g.b1, g.w2)):
                v *= hyper.momentum
                v -= hyper.lr * gw
                w += v
            # b2 is a plain float, so it is rebound rather than updated in place
            v_b2 = hyper.momentum * v_b2 - hyper.lr * g.b2
            params.b2 += v_b2
    err = model.predict_features(feats) - y
    model.final_mse = float(err @ err) / n
    return model


def train_regressor(
    examples: Sequence[LabeledExample],
    models: Models,
    hyper: RegressorHyper = RegressorHyper(),
    kind: str = "value",
) -> ValueRegressor:
    if not examples:
        raise EmptyTrainingSet("no labeled examples")
    raw = np.stack([raw_features(e.x0, e.x, models) for e in examples])
    y = np.array([e.target for e in examples])
    return fit_arrays(raw, y, hyper, kind)


def predict_value(reg: ValueRegressor, x0, x, models: Models) -> float:
    return reg.predict(x0, x, models)


# -- emission model -----------------------------------------------------------


@dataclass(frozen=True)
class EmissionHyper:
    add_k: float = 0.1
    em_iters: int = 100
    tol: float = 1e-12


class EmissionModel:
    """Copy / bigram / unigram mixture over vocabulary ids (BOS excluded)."""

    def __init__(
        self,
        vocab: Vocabulary,
        unigram: dict[int, int],
        bigram: dict[int, dict[int, int]],
        lambdas: Sequence[float] = (1 / 3, 1 / 3, 1 / 3),
        add_k: float = 0.1,
        history: Sequence[float] = (),
    ):
        lam = tuple(float(v) for v in lambdas)
        if len(lam) != 3 or min(lam) < 0 or abs(sum(lam) - 1.0) > 1e-9:
            raise ValueError("mixture weights must be three non-negative numbers summing to 1")
        if add_k <= 0:
            raise ValueError("add_k must be positive")
        self.vocab = vocab
        self.unigram = dict(unigram)
        self.bigram = {p: dict(ws) for p, ws in bigram.items()}
        self.lambdas = lam
        self.add_k = add_k
        self.history = list(history)
        self.n_outcomes = len(vocab) - 1
        self._uni_total = sum(self.unigram.values())
        self._bi_totals = {p: sum(ws.values()) for p, ws in self.bigram.items()}
        self._cache: dict = {}

    # component probabilities
    def p_uni(self, w: int) -> float:
        return (self.unigram.get(w, 0) + self.add_k) / (self._uni_total + self.add_k * self.n_outcomes)

    def p_bi(self, w: int, prev: int) -> float:
        row = self.bigram.get(prev)
        if row is None:
            return 1.0 / self.n_outcomes
        return (row.get(w, 0) + self.add_k) / (self._bi_totals[prev] + self.add_k * self.n_outcomes)

    def copy_counts(self, x0: Sequence[str]) -> tuple[Counter, int]:
        ids = self.vocab.encode(x0)
        c = Counter(ids)
        c[self.vocab.eos_id] += 1
        return c, len(ids) + 1

    def components(self, x: Sequence[str], x0: Sequence[str]) -> np.ndarray:
        """(len(x)+1, 3) array of copy, bigram, unigram probabilities per position."""
        copy, denom = self.copy_counts(x0)
        ids = self.vocab.encode(x) + (self.vocab.eos_id,)
        prev = self.vocab.bos_id
        rows = []
        for w in ids:
            rows.append((copy.get(w, 0) / denom, self.p_bi(w, prev), self.p_uni(w)))
            prev = w
        return np.array(rows)

    def step_distribution(self, prev: int, x0: Sequence[str]) -> np.ndarray:
        """Full next-word distribution over vocabulary ids given the previous id."""
        V = len(self.vocab)
        copy, denom = self.copy_counts(x0)
        c = np.zeros(V)
        for w, n in copy.items():
            c[w] = n / denom
        k = self.add_k
        uni = np.full(V, k / (self._uni_total + k * self.n_outcomes))
        for w, n in self.unigram.items():
            uni[w] += n / (self._uni_total + k * self.n_outcomes)
        row = self.bigram.get(prev)
        if row is None:
            bi = np.full(V, 1.0 / self.n_outcomes)
        else:
            tot = self._bi_totals[prev] + k * self.n_outcomes
            bi = np.full(V, k / tot)
            for w, n in row.items():
                bi[w] += n / tot
        uni[self.vocab.bos_id] = bi[self.vocab.bos_id] = 0.0
        lc, lb, lu = self.lambdas
        return lc * c + lb * bi + lu * uni

    def log_prob(self, x: Sequence[str], x0: Sequence[str]) -> float:
        key = (tuple(x0), tuple(x))
        hit = self._cache.get(key)
        if hit is None:
            mix = self.components(x, x0) @ np.array(self.lambdas)
            with np.errstate(divide="ignore"):  # a zero mixture term means probability 0
                hit = self._cache[key] = float(np.log(mix).sum())
        return hit

    def prob(self, x: Sequence[str], x0: Sequence[str]) -> float:
        return math.exp(self.log_prob(x, x0))

    def __call__(self, x, x0) -> float:
        return self.prob(x, x0)

    def cross_entropy(self, pairs: Sequence[PseudoPair]) -> float:
        return -sum(self.log_prob(p.xT, p.x0) for p in pairs)

    def to_dict(self) -> dict:
        s = self.vocab.surfaces
        return {
            "format": "sapara-emission",
            "version": 1,
            "vocab": list(s),
            "add_k": self.add_k,
            "lambdas": list(self.lambdas),
            "unigram": {s[w]: c for w, c in sorted(self.unigram.items())},
            "bigram": {s[p]: {s[w]: c for w, c in sorted(ws.items())} for p, ws in sorted(self.bigram.items())},
            "history": self.history,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmissionModel":
        if d.get("format") != "sapara-emission":
            raise ValueError("not an emission model record")
        vocab = Vocabulary(tuple(d["vocab"]))
        ids = vocab.ids
        return cls(
            vocab,
            {ids[w]: c for w, c in d["unigram"].items()},
            {ids[p]: {ids[w]: c for w, c in ws.items()} for p, ws in d["bigram"].items()},
            d["lambdas"],
            d["add_k"],
            d["history"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EmissionModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def em_lambdas(
    components: np.ndarray,
    init: Sequence[float] = (1 / 3, 1 / 3, 1 / 3),
    iters: int = 100,
    tol: float = 1e-12,
) -> tuple[np.ndarray, list[float]]:
    """EM for mixture weights over fixed component probabilities.

    ``components`` is (positions, 3).  Returns the weights and the summed
    cross-entropy before the first update and after each update.
    """
    lam = np.asarray(init, dtype=float)
    history = [float(-np.log(components @ lam).sum())]
    for _ in range(iters):
        weighted = components * lam
        resp = weighted / weighted.sum(axis=1, keepdims=True)
        lam = resp.mean(axis=0)
        history.append(float(-np.log(components @ lam).sum()))
        if history[-2] - history[-1] < tol:
            break
    return lam, history


def train_s2s(
    pairs: Sequence[PseudoPair],
    vocab: Vocabulary | None = None,
    hyper: EmissionHyper = EmissionHyper(),
) -> EmissionModel:
    """Estimate the tables from the xT side, then fit the mixture weights by EM."""
    if not pairs:
        raise EmptyTrainingSet("no pseudo-pairs")
    if vocab is None:
        vocab = build_vocab([p.x0 for p in pairs] + [p.xT for p in pairs])
    unigram: Counter = Counter()
    bigram: dict[int, Counter] = defaultdict(Counter)
    for p in pairs:
        prev = vocab.bos_id
        for w in vocab.encode(p.xT) + (vocab.eos_id,):
            unigram[w] += 1
            bigram[prev][w] += 1
            prev = w
    model = EmissionModel(vocab, unigram, bigram, add_k=hyper.add_k)
    comps = np.concatenate([model.components(p.xT, p.x0) for p in pairs])
    lam, history = em_lambdas(comps, model.lambdas, hyper.em_iters, hyper.tol)
    return EmissionModel(vocab, unigram, bigram, lam / lam.sum(), hyper.add_k, history)


def s2s_prob(model: EmissionModel, x, x0) -> float:
    return model.prob(x, x0)

