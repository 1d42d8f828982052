"""Stage helpers shared by the CLI and the end-to-end pipeline run."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Sequence

from .analysis import analyze, weight_sweep, write_diagnostic_tables, write_rows
from .config import PATH_KEYS, PipelineConfig
from .corpus import TokenSeq, build_vocab, load_aligned, read_lines, save_corpus, split_indices, tokenize
from .errors import ConfigError, EmptyAfterNormalization, EmptyCorpus, LengthMismatch
from .metrics import evaluate_corpus
from .ngram import BACKWARD, FORWARD, NGramLM, train_lm
from .objective import CombinedObjective, HeuristicObjective, Models, combine_s2s, combine_value
from .search import search_batch
from .semantics import load_embeddings, load_stopwords
from .surrogates import EmissionModel, ValueRegressor, train_regressor, train_s2s
from .trajectories import (
    extract_pseudo_pair,
    label_max_value,
    label_value,
    save_examples,
    save_pairs,
    save_trajectories,
)

LM_FWD = "lm_fwd.ngram"
LM_BWD = "lm_bwd.ngram"


def load_parallel(corpus_path, references_path=None) -> tuple[list[TokenSeq], list[TokenSeq] | None]:
    """Sources (empty lines and duplicates dropped) with their aligned references."""
    src_lines = read_lines(corpus_path)
    ref_lines = read_lines(references_path) if references_path else None
    if ref_lines is not None and len(ref_lines) != len(src_lines):
        raise LengthMismatch(f"{len(src_lines)} source lines vs {len(ref_lines)} reference lines")
    seen: set[TokenSeq] = set()
    sources, refs = [], []
    for i, line in enumerate(src_lines):
        try:
            seq = tokenize(line)
        except EmptyAfterNormalization:
            continue
        if seq in seen:
            continue
        if ref_lines is not None:
            try:
                ref = tokenize(ref_lines[i])
            except EmptyAfterNormalization:
                continue
            refs.append(ref)
        seen.add(seq)
        sources.append(seq)
    if not sources:
        raise EmptyCorpus(f"{corpus_path}: no sentences survived normalization")
    return sources, (refs if ref_lines is not None else None)


def train_lms(corpus: Sequence[TokenSeq], cfg: PipelineConfig) -> tuple[NGramLM, NGramLM]:
    vocab = build_vocab(corpus, cfg.min_count)
    fwd = train_lm(corpus, cfg.lm_order, FORWARD, vocab, cfg.lm_add_k, score_eos=cfg.score_eos)
    bwd = train_lm(corpus, cfg.lm_order, BACKWARD, vocab, cfg.lm_add_k, score_eos=cfg.score_eos)
    return fwd, bwd


def load_models(lm_dir, embeddings, stopwords="") -> Models:
    if not lm_dir:
        raise ConfigError("a language model directory is required")
    lm_dir = Path(lm_dir)
    for name in (LM_FWD, LM_BWD):
        if not (lm_dir / name).exists():
            raise ConfigError(f"missing language model {lm_dir / name}")
    if not embeddings:
        raise ConfigError("an embeddings file is required")
    return Models(
        NGramLM.load(lm_dir / LM_FWD),
        NGramLM.load(lm_dir / LM_BWD),
        load_embeddings(embeddings),
        load_stopwords(stopwords or None),
    )


def load_surrogate(kind: str, path):
    if kind in ("value", "maxvalue"):
        return ValueRegressor.load(path)
    return EmissionModel.load(path)


def objective_factory(kind: str, base: HeuristicObjective, surrogate, d: float) -> Callable[[float], Callable]:
    """``k -> objective`` for one surrogate kind; ``original`` ignores ``k``."""
    if kind == "original":
        return lambda k: base
    if surrogate is None:
        raise ConfigError(f"objective {kind!r} needs a trained model")
    if kind == "s2s":
        return lambda k: combine_s2s(base, surrogate, k, d)
    bound = surrogate.bind(base.models)
    return lambda k: combine_value(base, bound, k, kind)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(root: Path, out: Path) -> dict[str, str]:
    hashes = {
        str(p.relative_to(root)): sha256(p)
        for p in sorted(root.rglob("*"))
        if p.is_file() and p != out
    }
    out.write_text("".join(f"{h}\t{name}\n" for name, h in hashes.items()), encoding="utf-8")
    return hashes


def _k_name(k: float) -> str:
    return f"k{k:g}"


def run_pipeline(cfg: PipelineConfig, log: Callable[[str], None] | None = None) -> dict:
    """Baseline search, surrogate training on the train split, k-sweeps on the
    test split and the diagnostic tables; returns a summary with file hashes."""
    say = log or (lambda msg: None)
    cfg.require_paths("corpus", "references", "embeddings")
    work = Path(cfg.workdir)
    dirs = {name: work / name for name in ("data", "models", "baseline", "labels", "sweep", "reports")}
    for d in dirs.values():
        d.mkdir(parents=True, exist_ok=True)

    sources, refs = load_parallel(cfg.corpus, cfg.references)
    save_corpus(sources, dirs["data"] / "sources.txt")
    save_corpus(refs, dirs["data"] / "references.txt")
    say(f"{len(sources)} sentences")

    fwd, bwd = train_lms(sources, cfg)
    fwd.vocab.save(dirs["data"] / "vocab.tsv")
    fwd.save(dirs["models"] / LM_FWD)
    bwd.save(dirs["models"] / LM_BWD)
    models = Models(fwd, bwd, load_embeddings(cfg.embeddings), load_stopwords(cfg.stopwords or None))
    base = HeuristicObjective(models, cfg.objective_config())
    sa = cfg.sa_config()
    bleu_cfg, ibleu_cfg = cfg.bleu_config(), cfg.ibleu_config()
    ref_by_id = {str(i): r for i, r in enumerate(refs)}

    results = search_batch(sources, base, sa, jobs=cfg.jobs)
    trajs = [r.trajectory for r in results]
    save_trajectories(trajs, dirs["baseline"] / "trajectories.tsv")
    save_corpus([r.output for r in results], dirs["baseline"] / "outputs.txt")
    evaluate_corpus([r.output for r in results], refs, sources, bleu_cfg, ibleu_cfg).write_csv(
        dirs["baseline"] / "eval.csv"
    )
    say("baseline search done")

    train_idx, test_idx = split_indices(len(sources), cfg.test_fraction, cfg.seed)
    (dirs["data"] / "split.tsv").write_text(
        "".join(f"{i}\t{'test' if i in set(test_idx) else 'train'}\n" for i in range(len(sources))),
        encoding="utf-8",
    )
    train_trajs = [trajs[i] for i in train_idx]
    test_trajs = [trajs[i] for i in test_idx]

    value_ex = [e for t in train_trajs for e in label_value(t)]
    max_ex = [e for t in train_trajs for e in label_max_value(t)]
    pairs = [extract_pseudo_pair(t) for t in train_trajs]
    save_examples(value_ex, dirs["labels"] / "value.tsv")
    save_examples(max_ex, dirs["labels"] / "maxvalue.tsv")
    save_pairs(pairs, dirs["labels"] / "pairs.tsv")

    surrogates = {}
    for kind in cfg.kinds:
        if kind == "s2s":
            model = train_s2s(pairs, fwd.vocab, cfg.emission_hyper())
        else:
            model = train_regressor(value_ex if kind == "value" else max_ex, models, cfg.regressor_hyper(), kind)
        model.save(dirs["models"] / f"{kind}.json")
        surrogates[kind] = model
    say("surrogates trained")

    test_inputs = [sources[i] for i in test_idx]
    baseline_row = analyze(test_trajs, base, base, ref_by_id, "original", 0.0, None, bleu_cfg, ibleu_cfg)
    write_rows([baseline_row], dirs["reports"] / "baseline.csv")
    reports = {}
    for kind in cfg.kinds:
        make = objective_factory(kind, base, surrogates[kind], cfg.d)
        rep = weight_sweep(
            test_inputs, test_idx, ref_by_id, make, base, kind, sa, cfg.k_grid, test_trajs, 1, bleu_cfg, ibleu_cfg
        )
        for k, ktrajs in rep.trajectories.items():
            save_trajectories(ktrajs, dirs["sweep"] / f"{kind}_{_k_name(k)}.tsv")
        reports[kind] = rep
        say(f"{kind} sweep done")
    write_rows([r for rep in reports.values() for r in rep.rows], dirs["reports"] / "sweep.csv")
    write_diagnostic_tables(reports, dirs["reports"])
    (dirs["reports"] / "meta.json").write_text(
        json.dumps(
            {
                "correlation_states": "accepted",
                "correlation_trajectories": "baseline search on the test split",
                "escape_objective": "heuristic",
                "n_train": len(train_idx),
                "n_test": len(test_idx),
                "k_grid": list(cfg.k_grid),
                "kinds": list(cfg.kinds),
            },
            sort_keys=True,
            indent=1,
        )
        + "\n",
        encoding="utf-8",
    )
    # paths are left out so that runs in different directories hash the same
    settings = [line for line in cfg.dump().splitlines() if line.split(" = ")[0] not in PATH_KEYS]
    (work / "config.resolved").write_text("\n".join(settings) + "\n", encoding="utf-8")

    hashes = write_manifest(work, work / "manifest.tsv")
    return {
        "command": "pipeline",
        "workdir": str(work),
        "n_sentences": len(sources),
        "n_test": len(test_idx),
        "baseline": {"mean_bleu": baseline_row.mean_bleu, "mean_ibleu": baseline_row.mean_ibleu,
                     "acceptance": baseline_row.traj_len},
        "rows": [asdict(r) for rep in reports.values() for r in rep.rows],
        "files": len(hashes),
        "digest": hashlib.sha256("".join(f"{h}{n}" for n, h in hashes.items()).encode()).hexdigest(),
    }
