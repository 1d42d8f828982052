import pytest
from hypothesis import given
from hypothesis import strategies as st

from sapara.errors import MalformedTrajectory
from sapara.search import SAConfig, search_batch
from sapara.trajectories import (
    INIT,
    TrajStep,
    Trajectory,
    accepted_scores,
    extract_pseudo_pair,
    label_max_value,
    label_value,
    load_trajectories,
    save_trajectories,
    suffix_max,
)


def make_traj(scores, accepted=None, tid="t"):
    """Trajectory whose step i holds the one-word sentence ('s<i>',)."""
    accepted = accepted or [True] * len(scores)
    steps = [
        TrajStep(tid, i, INIT if i == 0 else "replace", acc, (f"s{i}",), sc)
        for i, (sc, acc) in enumerate(zip(scores, accepted))
    ]
    return Trajectory(tid, steps)


def test_all_rejected():
    t = make_traj([0.3, 0.9, 0.8], [True, False, False])
    assert accepted_scores(t) == [0.3]
    assert extract_pseudo_pair(t).xT == t.x0


def test_empty_and_malformed():
    with pytest.raises(MalformedTrajectory):
        Trajectory("x", [])
    with pytest.raises(MalformedTrajectory):
        Trajectory("x", [TrajStep("x", 1, INIT, True, ("a",), 1.0)])
    with pytest.raises(MalformedTrajectory):
        Trajectory("x", [TrajStep("x", 0, "insert", True, ("a",), 1.0)])
    with pytest.raises(MalformedTrajectory):
        Trajectory("x", [TrajStep("x", 0, INIT, True, ("a",), 1.0), TrajStep("x", 2, "insert", True, ("a",), 1.0)])


def test_label_value():
    one = make_traj([0.7])
    assert [e.target for e in label_value(one)] == [0.7]
    t = make_traj([0.1, 0.4, 0.2, 0.5], [True, True, False, True])
    ex = label_value(t)
    assert [e.x for e in ex] == [("s0",), ("s1",), ("s3",)]
    assert [e.target for e in ex] == [0.1, 0.4, 0.5]
    assert all(e.x0 == ("s0",) for e in ex)


def test_label_max_value():
    assert [e.target for e in label_max_value(make_traj([0.2, 0.5, 0.3, 0.4]))] == [0.5, 0.5, 0.4, 0.4]
    assert [e.target for e in label_max_value(make_traj([0.1, 0.2, 0.3]))] == [0.3, 0.3, 0.3]
    assert [e.target for e in label_max_value(make_traj([0.6]))] == [0.6]


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60))
def test_max_labels_dominate_value_labels(scores):
    t = make_traj(scores)
    value = [e.target for e in label_value(t)]
    best = [e.target for e in label_max_value(t)]
    assert all(a >= b for a, b in zip(best, best[1:]))
    assert all(b >= v for b, v in zip(best, value))
    assert best[-1] == value[-1]
    assert suffix_max(scores) == [max(scores[i:]) for i in range(len(scores))]


def test_roundtrip_and_line_count(tmp_path, fixture_objective, fixture_corpus):
    results = search_batch(fixture_corpus[:3], fixture_objective, SAConfig(steps=15, seed=1))
    trajs = [r.trajectory for r in results]
    path = tmp_path / "t.tsv"
    save_trajectories(trajs, path)
    assert len(path.read_text().splitlines()) == 3 + sum(t.n_sampling_steps for t in trajs)
    back = load_trajectories(path)
    assert back == trajs
    for t in back:
        assert extract_pseudo_pair(t).xT == t.accepted_steps()[-1].sentence
        assert [e.target for e in label_value(t)] == [fixture_objective(s.sentence, t.x0) for s in t.accepted_steps()]


def test_pairs_one_per_trajectory():
    trajs = [make_traj([0.1 * i, 0.2], tid=str(i)) for i in range(50)]
    assert len([extract_pseudo_pair(t) for t in trajs]) == 50


def test_truncated_file(tmp_path):
    path = tmp_path / "t.tsv"
    save_trajectories([make_traj([0.1, 0.2, 0.3])], path)
    text = path.read_text()
    path.write_text(text[:-5])
    with pytest.raises(MalformedTrajectory):
        load_trajectories(path)
    # dropping a whole middle line breaks contiguity
    lines = text.splitlines(keepends=True)
    path.write_text(lines[0] + lines[2])
    with pytest.raises(MalformedTrajectory):
        load_trajectories(path)
    path.write_text(lines[1] + lines[2])
    with pytest.raises(MalformedTrajectory):
        load_trajectories(path)
