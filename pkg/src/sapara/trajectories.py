"""Search trajectories: records, persistence and training labels.

File format, one step per line, tab separated and LF terminated::

    traj_id  step  op  accepted  tokens  score

``accepted`` is 0/1, ``tokens`` is space-joined and ``score`` is written with
``repr`` so that floats round-trip exactly.  Rejected proposals are kept;
labels are built from accepted states only.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import TokenSeq
from .errors import MalformedTrajectory

INIT = "init"
_OPS = {INIT, "insert", "replace", "delete"}


@dataclass(frozen=True)
class TrajStep:
    traj_id: str
    step: int
    op: str
    accepted: bool
    sentence: TokenSeq
    score: float


@dataclass(frozen=True)
class Trajectory:
    traj_id: str
    steps: list[TrajStep]

    def __post_init__(self):
        validate(self)

    @property
    def x0(self) -> TokenSeq:
        return self.steps[0].sentence

    @property
    def n_sampling_steps(self) -> int:
        return len(self.steps) - 1

    def accepted_steps(self) -> list[TrajStep]:
        return [s for s in self.steps if s.accepted]


@dataclass(frozen=True)
class LabeledExample:
    x0: TokenSeq
    x: TokenSeq
    target: float


@dataclass(frozen=True)
class PseudoPair:
    x0: TokenSeq
    xT: TokenSeq


def validate(traj: Trajectory) -> None:
    if not traj.steps:
        raise MalformedTrajectory(f"trajectory {traj.traj_id!r} has no steps")
    first = traj.steps[0]
    if first.step != 0 or not first.accepted or first.op != INIT:
        raise MalformedTrajectory(f"trajectory {traj.traj_id!r} must start with an accepted init step 0")
    for i, s in enumerate(traj.steps):
        if s.step != i:
            raise MalformedTrajectory(f"trajectory {traj.traj_id!r}: step {s.step} found at position {i}")
        if s.traj_id != traj.traj_id:
            raise MalformedTrajectory(f"step {i} belongs to {s.traj_id!r}, not {traj.traj_id!r}")
        if i > 0 and s.op == INIT:
            raise MalformedTrajectory(f"trajectory {traj.traj_id!r}: init op at step {i}")


def accepted_states(traj: Trajectory) -> list[TrajStep]:
    if not traj.steps:
        raise MalformedTrajectory("empty trajectory")
    return traj.accepted_steps()


def accepted_scores(traj: Trajectory) -> list[float]:
    """Scores of the realized state sequence x_0 .. x_T."""
    return [s.score for s in accepted_states(traj)]


def suffix_max(values: Sequence[float]) -> list[float]:
    out = list(values)
    for i in range(len(out) - 2, -1, -1):
        if out[i + 1] > out[i]:
            out[i] = out[i + 1]
    return out


def label_value(traj: Trajectory) -> list[LabeledExample]:
    x0 = traj.x0
    return [LabeledExample(x0, s.sentence, s.score) for s in accepted_states(traj)]


def label_max_value(traj: Trajectory) -> list[LabeledExample]:
    """Each accepted state labeled with the best score at or after it."""
    states = accepted_states(traj)
    targets = suffix_max([s.score for s in states])
    x0 = traj.x0
    return [LabeledExample(x0, s.sentence, t) for s, t in zip(states, targets)]


def extract_pseudo_pair(traj: Trajectory) -> PseudoPair:
    return PseudoPair(traj.x0, accepted_states(traj)[-1].sentence)


# -- persistence ------------------------------------------------------------


def format_step(s: TrajStep) -> str:
    return f"{s.traj_id}\t{s.step}\t{s.op}\t{int(s.accepted)}\t{' '.join(s.sentence)}\t{s.score!r}"


def parse_step(line: str, where: str = "") -> TrajStep:
    parts = line.split("\t")
    if len(parts) != 6:
        raise MalformedTrajectory(f"{where}: expected 6 fields, found {len(parts)}")
    traj_id, step, op, accepted, tokens, score = parts
    try:
        step_i = int(step)
        score_f = float(score)
    except ValueError as exc:
        raise MalformedTrajectory(f"{where}: {exc}") from None
    if op not in _OPS or accepted not in ("0", "1") or not tokens:
        raise MalformedTrajectory(f"{where}: bad op/accepted/tokens field")
    return TrajStep(traj_id, step_i, op, accepted == "1", tuple(tokens.split(" ")), score_f)


def save_trajectories(trajs: Iterable[Trajectory], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for traj in trajs:
            for s in traj.steps:
                fh.write(format_step(s) + "\n")


def load_trajectories(path: str | Path) -> list[Trajectory]:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if text and not text.endswith("\n"):
        raise MalformedTrajectory(f"{path}: truncated final record")
    trajs: list[Trajectory] = []
    current: list[TrajStep] = []
    seen: set[str] = set()
    for n, line in enumerate(text.split("\n")[:-1], start=1):
        step = parse_step(line, f"{path}:{n}")
        if current and step.traj_id != current[0].traj_id:
            trajs.append(Trajectory(current[0].traj_id, current))
            current = []
        if not current:
            if step.traj_id in seen:
                raise MalformedTrajectory(f"{path}:{n}: trajectory {step.traj_id!r} is split")
            seen.add(step.traj_id)
        current.append(step)
    if current:
        trajs.append(Trajectory(current[0].traj_id, current))
    return trajs


def save_examples(examples: Iterable[LabeledExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in examples:
            fh.write(f"{' '.join(e.x0)}\t{' '.join(e.x)}\t{e.target!r}\n")


def load_examples(path: str | Path) -> list[LabeledExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            x0, x, target = line.rstrip("\n").split("\t")
            out.append(LabeledExample(tuple(x0.split(" ")), tuple(x.split(" ")), float(target)))
    return out


def save_pairs(pairs: Iterable[PseudoPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(f"{' '.join(p.x0)}\t{' '.join(p.xT)}\n")


def load_pairs(path: str | Path) -> list[PseudoPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            x0, xt = line.rstrip("\n").split("\t")
            out.append(PseudoPair(tuple(x0.split(" ")), tuple(xt.split(" "))))
    return out
