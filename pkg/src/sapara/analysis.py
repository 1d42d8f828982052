"""Diagnostics over search trajectories.

Rank correlation between an objective and BLEU/iBLEU, acceptance ratio,
local-minimum escapes, and sweeps over the combination weight ``k``.
Correlations are computed over accepted states only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .corpus import TokenSeq
from .errors import DegenerateInput, LengthMismatch
from .metrics import BleuConfig, IBleuConfig, bleu, evaluate_corpus, ibleu
from .search import SAConfig, search_batch
from .trajectories import Trajectory, accepted_states


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties sharing the mean of the ranks they span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = r
        i = j + 1
    return ranks


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    da = [v - ma for v in a]
    db = [v - mb for v in b]
    saa = sum(v * v for v in da)
    sbb = sum(v * v for v in db)
    if saa == 0 or sbb == 0:
        raise DegenerateInput("correlation undefined for a constant vector")
    r = sum(x * y for x, y in zip(da, db)) / math.sqrt(saa * sbb)
    return max(-1.0, min(1.0, r))


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson correlation of tie-averaged ranks."""
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} values")
    if len(a) < 2:
        raise DegenerateInput("need at least two observations")
    return pearson(average_ranks(a), average_ranks(b))


def output_of(traj: Trajectory) -> TokenSeq:
    """Best accepted state by recorded score; earliest wins ties."""
    best = traj.steps[0]
    for s in traj.steps:
        if s.accepted and s.score > best.score:
            best = s
    return best.sentence


@dataclass(frozen=True)
class StateEval:
    traj_id: str
    step: int
    score: float
    bleu: float
    ibleu: float


def reevaluate(
    trajs: Sequence[Trajectory],
    objective: Callable,
    references: Mapping[str, TokenSeq] | None = None,
    bleu_cfg: BleuConfig = BleuConfig(),
    ibleu_cfg: IBleuConfig = IBleuConfig(),
) -> list[StateEval]:
    """Re-score every accepted state; BLEU/iBLEU are NaN without a reference."""
    out = []
    for traj in trajs:
        x0 = traj.x0
        ref = references.get(traj.traj_id) if references else None
        for s in accepted_states(traj):
            if ref is None:
                b = ib = math.nan
            else:
                b = bleu(s.sentence, [ref], bleu_cfg)
                ib = ibleu(s.sentence, ref, x0, ibleu_cfg, bleu_cfg)
            out.append(StateEval(traj.traj_id, s.step, objective(s.sentence, x0), b, ib))
    return out


def write_state_csv(rows: Sequence[StateEval], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["traj_id", "step", "objective", "bleu", "ibleu"])
        for r in rows:
            w.writerow([r.traj_id, r.step, repr(r.score), repr(r.bleu), repr(r.ibleu)])


def acceptance_ratio(trajs: Sequence[Trajectory]) -> float:
    """Accepted proposals per 100 sampling steps, averaged over trajectories."""
    ratios = [
        100.0 * (len(t.accepted_steps()) - 1) / t.n_sampling_steps for t in trajs if t.n_sampling_steps > 0
    ]
    if not ratios:
        raise DegenerateInput("no trajectory has sampling steps")
    return sum(ratios) / len(ratios)


def find_local_minima(scores: Sequence[float]) -> list[int]:
    return [t for t in range(1, len(scores) - 1) if scores[t] < scores[t - 1] and scores[t] < scores[t + 1]]


def escape_indices(scores: Sequence[float]) -> list[int]:
    """Minima later followed by a score above the one just before the dip."""
    later_max = [-math.inf] * (len(scores) + 1)
    for i in range(len(scores) - 1, -1, -1):
        later_max[i] = max(scores[i], later_max[i + 1])
    return [t for t in find_local_minima(scores) if later_max[t + 1] > scores[t - 1]]


def count_escapes(scores: Sequence[float], n_steps: int | None = None) -> float:
    """Escapes per 100 steps; ``n_steps`` defaults to ``len(scores)``."""
    n = len(scores) if n_steps is None else n_steps
    if n <= 0:
        raise DegenerateInput("cannot normalize escapes over zero steps")
    return 100.0 * len(escape_indices(scores)) / n


# -- weight sweeps ------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    kind: str
    k: float
    mean_bleu: float
    mean_ibleu: float
    rho_bleu: float
    rho_ibleu: float
    traj_len: float
    escapes: float


def _safe_spearman(a, b) -> float:
    try:
        return spearman(a, b)
    except DegenerateInput:
        return math.nan


def analyze(
    trajs: Sequence[Trajectory],
    objective: Callable,
    base: Callable,
    references: Mapping[str, TokenSeq],
    kind: str = "original",
    k: float = 0.0,
    rho_trajs: Sequence[Trajectory] | None = None,
    bleu_cfg: BleuConfig = BleuConfig(),
    ibleu_cfg: IBleuConfig = IBleuConfig(),
) -> SweepRow:
    """All four diagnostics for one set of search trajectories.

    ``rho_trajs`` are the trajectories whose states are re-scored for the
    rank correlations (by default ``trajs`` itself); escapes are counted on
    the ``base`` objective re-evaluated along each accepted-state sequence.
    """
    outputs = [output_of(t) for t in trajs]
    report = evaluate_corpus(
        outputs, [references[t.traj_id] for t in trajs], [t.x0 for t in trajs], bleu_cfg, ibleu_cfg
    )
    states = reevaluate(rho_trajs if rho_trajs is not None else trajs, objective, references, bleu_cfg, ibleu_cfg)
    obj = [s.score for s in states]
    n_escapes = 0
    n_steps = 0
    for t in trajs:
        if t.n_sampling_steps == 0:
            continue
        scores = [base(s.sentence, t.x0) for s in accepted_states(t)]
        n_escapes += len(escape_indices(scores))
        n_steps += t.n_sampling_steps
    return SweepRow(
        kind=kind,
        k=k,
        mean_bleu=report.mean_bleu,
        mean_ibleu=report.mean_ibleu,
        rho_bleu=_safe_spearman(obj, [s.bleu for s in states]),
        rho_ibleu=_safe_spearman(obj, [s.ibleu for s in states]),
        traj_len=acceptance_ratio(trajs),
        escapes=100.0 * n_escapes / n_steps if n_steps else math.nan,
    )


@dataclass
class SweepReport:
    rows: list[SweepRow]
    trajectories: dict[float, list[Trajectory]]

    def write_csv(self, path: str | Path) -> None:
        write_rows(self.rows, path)


def write_rows(rows: Sequence[SweepRow], path: str | Path) -> None:
    names = [f.name for f in fields(SweepRow)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for r in rows:
            d = asdict(r)
            w.writerow([d[n] if isinstance(d[n], str) else repr(d[n]) for n in names])


DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(11))


def weight_sweep(
    inputs: Sequence[TokenSeq],
    indices: Sequence[int],
    references: Mapping[str, TokenSeq],
    make_objective: Callable[[float], Callable],
    base: Callable,
    kind: str,
    cfg: SAConfig,
    k_grid: Sequence[float] = DEFAULT_GRID,
    baseline_trajs: Sequence[Trajectory] | None = None,
    jobs: int = 1,
    bleu_cfg: BleuConfig = BleuConfig(),
    ibleu_cfg: IBleuConfig = IBleuConfig(),
) -> SweepReport:
    """Search with ``make_objective(k)`` for each ``k`` and collect diagnostics.

    Correlations re-score ``baseline_trajs`` (searches under the heuristic
    objective) when given, otherwise the sweep's own trajectories.
    """
    rows = []
    per_k = {}
    for k in k_grid:
        objective = make_objective(k)
        results = search_batch(inputs, objective, cfg, indices, jobs)
        trajs = [r.trajectory for r in results]
        per_k[k] = trajs
        rows.append(
            analyze(trajs, objective, base, references, kind, k, baseline_trajs, bleu_cfg, ibleu_cfg)
        )
    return SweepReport(rows, per_k)


DIAGNOSTICS = {
    "correlation_bleu": "rho_bleu",
    "correlation_ibleu": "rho_ibleu",
    "trajectory_length": "traj_len",
    "escapes": "escapes",
}


def write_diagnostic_tables(reports: Mapping[str, SweepReport], out_dir: str | Path) -> list[Path]:
    """One CSV per diagnostic: a row per k, a column per surrogate kind."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kinds = list(reports)
    ks = sorted({r.k for rep in reports.values() for r in rep.rows})
    written = []
    for name, attr in DIAGNOSTICS.items():
        path = out_dir / f"{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", *kinds])
            for k in ks:
                row = [repr(k)]
                for kind in kinds:
                    vals = [getattr(r, attr) for r in reports[kind].rows if r.k == k]
                    row.append(repr(vals[0]) if vals else "")
                w.writerow(row)
        written.append(path)
    return written
