import csv
import math
import random
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sapara.analysis import (
    DEFAULT_GRID,
    acceptance_ratio,
    analyze,
    average_ranks,
    count_escapes,
    escape_indices,
    find_local_minima,
    reevaluate,
    spearman,
    weight_sweep,
    write_diagnostic_tables,
)
from sapara.errors import DegenerateInput, LengthMismatch
from sapara.objective import combine_value, score
from sapara.pipeline import load_parallel
from sapara.search import SAConfig, search_batch
from sapara.trajectories import INIT, TrajStep, Trajectory

from .conftest import FIXTURE
from .oracles import brute_ranks, brute_spearman

GOLDEN = Path(__file__).parent / "golden" / "sweep_value_small.csv"

# 20 steps; minima at 2, 9 and 17; only the first two are later exceeded
# by a score above their predecessor (4 -> 6, 5 -> 7; 6 is never beaten).
CRAFTED = [5, 4, 3, 4, 5, 6, 6, 6, 5, 2, 5, 5, 7, 7, 7, 7, 6, 1, 2, 3]


def test_spearman_examples():
    assert spearman([1, 2, 3], [10, 20, 30]) == 1.0
    assert spearman([1, 2, 3], [3, 2, 1]) == -1.0
    b = [0.3, -1.0, 2.5, 0.0]
    assert spearman([1, 2, 2, 3], b) == pytest.approx(brute_spearman([1, 2, 2, 3], b), abs=1e-9)
    assert average_ranks([1, 2, 2, 3]) == [1.0, 2.5, 2.5, 4.0]


def test_spearman_errors():
    with pytest.raises(DegenerateInput):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        spearman([1], [2])
    with pytest.raises(LengthMismatch):
        spearman([1, 2], [1, 2, 3])


def test_spearman_against_oracle_with_ties():
    rng = random.Random(0)
    for _ in range(200):
        n = rng.randint(2, 12)
        a = [rng.randint(0, 4) for _ in range(n)]
        b = [rng.randint(0, 4) for _ in range(n)]
        if len(set(a)) < 2 or len(set(b)) < 2:
            continue
        assert average_ranks(a) == brute_ranks(a)
        assert spearman(a, b) == pytest.approx(brute_spearman(a, b), abs=1e-9)


@given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=30, unique=True))
def test_spearman_properties(a):
    assert spearman(a, a) == pytest.approx(1.0, abs=1e-12)
    assert spearman(a, [-v for v in a]) == pytest.approx(-1.0, abs=1e-12)
    b = list(reversed(a))
    assert spearman([math.atan(v) * 7 + 1 for v in a], b) == pytest.approx(spearman(a, b), abs=1e-12)


def _traj(accepted, tid="t"):
    steps = [TrajStep(tid, 0, INIT, True, ("a",), 0.0)]
    steps += [TrajStep(tid, i + 1, "replace", acc, ("a",), 0.0) for i, acc in enumerate(accepted)]
    return Trajectory(tid, steps)


def test_acceptance_ratio():
    assert acceptance_ratio([_traj([True] * 100)]) == 100.0
    assert acceptance_ratio([_traj([False] * 100)]) == 0.0
    pattern = [i % 5 == 0 for i in range(100)][:99] + [True]  # 20 + 1
    assert sum(pattern) == 21
    assert acceptance_ratio([_traj(pattern)]) == 21.0
    assert acceptance_ratio([_traj([True] * 10), _traj([False] * 10)]) == 50.0
    with pytest.raises(DegenerateInput):
        acceptance_ratio([_traj([])])


def test_local_minima():
    assert find_local_minima([3, 1, 2]) == [1]
    assert find_local_minima([1, 2, 3, 4]) == []
    assert find_local_minima([4, 3, 2]) == []
    assert find_local_minima([2, 1, 1, 2]) == []
    assert find_local_minima(CRAFTED) == [2, 9, 17]


def test_escapes():
    assert count_escapes([3, 1, 2]) == 0.0
    assert escape_indices([3, 1, 4]) == [1]
    assert count_escapes([3, 1, 4], n_steps=100) == 1.0
    assert escape_indices(CRAFTED) == [2, 9]
    assert count_escapes(CRAFTED) == 10.0
    with pytest.raises(DegenerateInput):
        count_escapes([], n_steps=0)


@pytest.fixture(scope="module")
def small_run(fixture_objective):
    sources, refs = load_parallel(FIXTURE / "corpus.txt", FIXTURE / "references.txt")
    idx = list(range(6))
    inputs = [sources[i] for i in idx]
    references = {str(i): refs[i] for i in idx}
    cfg = SAConfig(steps=20, seed=7)
    trajs = [r.trajectory for r in search_batch(inputs, fixture_objective, cfg, idx)]
    return inputs, idx, references, cfg, trajs


def test_reevaluate(small_run, fixture_objective, fixture_models):
    _, _, references, _, trajs = small_run
    rows = reevaluate(trajs, fixture_objective, references)
    recorded = [s.score for t in trajs for s in t.accepted_steps()]
    assert [r.score for r in rows] == pytest.approx(recorded, rel=1e-9, abs=0)
    assert all(not math.isnan(r.bleu) for r in rows)
    # manual composition for three states
    states = [(s.sentence, t.x0) for t in trajs for s in t.accepted_steps()][:3]
    for (x, x0), r in zip(states, rows):
        assert r.score == pytest.approx(score(x, x0, fixture_models, fixture_objective.cfg).total, rel=1e-12)
    sur = lambda x, x0: 0.1 * len(x) - 0.01 * len(x0)  # noqa: E731
    at_one = reevaluate(trajs, combine_value(fixture_objective, sur, 1.0))
    assert [r.score for r in at_one] == [sur(s.sentence, t.x0) for t in trajs for s in t.accepted_steps()]
    assert all(math.isnan(r.bleu) for r in at_one)


def test_sweep_endpoints(small_run, fixture_objective):
    inputs, idx, references, cfg, trajs = small_run
    sur = lambda x, x0: 1e-3 * len(x)  # noqa: E731
    rep = weight_sweep(
        inputs, idx, references, lambda k: combine_value(fixture_objective, sur, k), fixture_objective, "value", cfg,
        k_grid=(0.0, 1.0), baseline_trajs=trajs,
    )
    assert [r.k for r in rep.rows] == [0.0, 1.0]
    assert rep.trajectories[0.0] == trajs
    base = analyze(trajs, fixture_objective, fixture_objective, references, "value", 0.0)
    assert rep.rows[0] == base


def test_default_grid_and_tables(tmp_path, small_run, fixture_objective):
    inputs, idx, references, _, trajs = small_run
    assert len(DEFAULT_GRID) == 11 and DEFAULT_GRID[0] == 0.0 and DEFAULT_GRID[-1] == 1.0
    sur = lambda x, x0: 1e-3 * len(x)  # noqa: E731
    cfg = SAConfig(steps=20, seed=7)
    reports = {
        kind: weight_sweep(
            inputs[:3], idx[:3], references, lambda k: combine_value(fixture_objective, sur, k), fixture_objective,
            kind, cfg, baseline_trajs=trajs[:3],
        )
        for kind in ("value", "maxvalue")
    }
    assert len(reports["value"].rows) == 11
    # k=0 diagnostics agree across kinds
    a, b = reports["value"].rows[0], reports["maxvalue"].rows[0]
    assert (a.mean_bleu, a.rho_bleu, a.traj_len, a.escapes) == (b.mean_bleu, b.rho_bleu, b.traj_len, b.escapes)
    paths = write_diagnostic_tables(reports, tmp_path)
    assert sorted(p.name for p in paths) == [
        "correlation_bleu.csv", "correlation_ibleu.csv", "escapes.csv", "trajectory_length.csv"
    ]
    with open(tmp_path / "trajectory_length.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "value", "maxvalue"] and len(rows) == 12


def test_golden_sweep(tmp_path, small_run, fixture_objective):
    inputs, idx, references, cfg, trajs = small_run
    sur = lambda x, x0: 2e-3 * len(set(x) - set(x0)) + 1e-3  # noqa: E731
    rep = weight_sweep(
        inputs, idx, references, lambda k: combine_value(fixture_objective, sur, k), fixture_objective, "value", cfg,
        baseline_trajs=trajs,
    )
    out = tmp_path / "sweep.csv"
    rep.write_csv(out)
    assert out.read_text() == GOLDEN.read_text()
