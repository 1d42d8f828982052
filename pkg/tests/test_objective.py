import math
import random

import pytest

from sapara.metrics import lexical_diversity
from sapara.objective import (
    CombinedObjective,
    CombineConfig,
    HeuristicObjective,
    ObjectiveConfig,
    combine_s2s,
    combine_value,
    score,
)
from sapara.semantics import keyword_sim, sentence_sim


def _states(corpus, n, seed=0):
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        x0 = rng.choice(corpus)
        x = list(x0)
        for _ in range(rng.randint(0, 3)):
            op = rng.choice("idr")
            if op == "d" and len(x) > 1:
                del x[rng.randrange(len(x))]
            elif op == "i":
                x.insert(rng.randrange(len(x) + 1), rng.choice(rng.choice(corpus)))
            else:
                x[rng.randrange(len(x))] = rng.choice(rng.choice(corpus))
        out.append((tuple(x), x0))
    return out


def test_config_validation():
    with pytest.raises(ValueError):
        ObjectiveConfig(p=-1)
    with pytest.raises(ValueError):
        ObjectiveConfig(score_scale=0)
    with pytest.raises(ValueError):
        CombineConfig(k=1.5)
    with pytest.raises(ValueError):
        CombineConfig(d=0)


def test_identity_has_no_diversity(fixture_models, fixture_corpus):
    x0 = fixture_corpus[0]
    b = score(x0, x0, fixture_models)
    assert b.lex == pytest.approx(1e-4, rel=1e-12)
    assert b.total == pytest.approx(1e-4 * b.flu, rel=1e-9)


def test_zero_weights_leave_fluency(fixture_models, fixture_corpus):
    cfg = ObjectiveConfig(p=0, q=0, s=0, score_scale=3.0)
    for x, x0 in _states(fixture_corpus, 20):
        b = score(x, x0, fixture_models, cfg)
        assert b.total == pytest.approx(3.0 * fixture_models.lm_fwd.fluency(x), rel=1e-12)


def test_breakdown_recomposes_from_components(fixture_models, fixture_corpus):
    m = fixture_models
    cfg = ObjectiveConfig(score_scale=1e7)
    for x, x0 in _states(fixture_corpus, 50, seed=4):
        b = score(x, x0, m, cfg)
        flu = m.lm_fwd.fluency(x)
        key = min(1.0, max(1e-4, keyword_sim(x, x0, m.emb, m.stopwords)))
        sen = min(1.0, max(1e-4, sentence_sim(x, x0, m.emb)))
        lex = lexical_diversity(x, x0)
        want = 1e7 * flu * key**8 * sen * lex
        assert b.total == pytest.approx(want, rel=1e-12)
        assert b.total == pytest.approx(1e7 * b.flu * b.sem_key**8 * b.sem_sen * b.lex, rel=1e-12)
        assert b.log_total == pytest.approx(math.log(b.total / 1e7), abs=1e-9)


def test_scale_keeps_ranking(fixture_models, fixture_corpus):
    a = HeuristicObjective(fixture_models, ObjectiveConfig(score_scale=1.0))
    b = HeuristicObjective(fixture_models, ObjectiveConfig(score_scale=1e6))
    states = _states(fixture_corpus, 40, seed=5)
    x0 = states[0][1]
    cands = [x for x, _ in states]
    assert max(cands, key=lambda x: a(x, x0)) == max(cands, key=lambda x: b(x, x0))
    for x in cands:
        assert b(x, x0) == pytest.approx(1e6 * a(x, x0), rel=1e-12)


def test_combine_value_endpoints(fixture_objective, fixture_corpus):
    sur = lambda x, x0: 0.01 * len(x) + 0.5  # noqa: E731
    zero = combine_value(fixture_objective, sur, 0.0)
    one = combine_value(fixture_objective, sur, 1.0)
    for x, x0 in _states(fixture_corpus, 100, seed=6):
        assert abs(zero(x, x0) - fixture_objective(x, x0)) <= 1e-12 * abs(fixture_objective(x, x0))
        assert one(x, x0) == sur(x, x0)
    assert zero.base is fixture_objective


def test_combination_arithmetic():
    class Const:
        def __init__(self, v):
            self.v = v
            self.base = self

        def __call__(self, x, x0):
            return self.v

    assert combine_value(Const(0.2), Const(0.4), 0.5)((), ()) == pytest.approx(0.3, abs=1e-15)
    assert combine_s2s(Const(0.7), Const(0.004), 1.0, 100.0)((), ()) == pytest.approx(0.4, abs=1e-15)
    assert combine_s2s(Const(0.7), Const(0.004), 0.0)((), ()) == 0.7
    assert combine_s2s(Const(0.5), Const(0.003), 0.2, 100.0)((), ()) == pytest.approx(
        0.2 * 100 * 0.003 + 0.8 * 0.5, abs=1e-15
    )
    with pytest.raises(ValueError):
        CombinedObjective(Const(0), Const(0), 1.2)


def test_affine_in_k(fixture_objective, fixture_corpus):
    sur = lambda x, x0: 1e-3 * len(x0)  # noqa: E731
    for x, x0 in _states(fixture_corpus, 10, seed=7):
        f0 = fixture_objective(x, x0)
        for k in (0, 0.25, 0.5, 0.75, 1):
            v = combine_s2s(fixture_objective, sur, k, 100.0)(x, x0)
            assert v == pytest.approx(f0 + k * (100 * sur(x, x0) - f0), rel=1e-12, abs=1e-15)
