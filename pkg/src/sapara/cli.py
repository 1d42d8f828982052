"""Command-line driver: ``sapara <stage> [options]``.

Every stage accepts ``--config FILE`` (flat key = value) and ``--set KEY=VALUE``
overrides; dedicated flags win over both.  Each command prints one JSON
summary line on stdout.  Exit codes: 0 ok, 2 config error, 3 data error,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .analysis import analyze, reevaluate, weight_sweep, write_diagnostic_tables, write_rows, write_state_csv
from .config import PATH_KEYS, PipelineConfig
from .corpus import load_aligned, load_corpus, save_corpus
from .errors import ConfigError, DataError, InvariantViolation
from .metrics import evaluate_corpus
from .objective import HeuristicObjective
from .pipeline import (
    LM_BWD,
    LM_FWD,
    load_models,
    load_parallel,
    load_surrogate,
    objective_factory,
    run_pipeline,
    train_lms,
)
from .search import search_batch
from .surrogates import train_regressor, train_s2s
from .trajectories import (
    extract_pseudo_pair,
    label_max_value,
    label_value,
    load_examples,
    load_pairs,
    load_trajectories,
    save_examples,
    save_pairs,
    save_trajectories,
)

EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True, default=_jsonable))


def _jsonable(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return str(v)


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides: dict = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        overrides[key] = value
    for key in ("seed", "steps", "top_k", "k", "d", "objective", "jobs", "corpus", "references", "embeddings",
                "stopwords", "workdir"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = str(Path(value).resolve()) if key in PATH_KEYS and key != "workdir" else value
    return cfg.with_overrides(overrides)


def _models(args, cfg):
    return load_models(args.lm_dir, cfg.embeddings, cfg.stopwords)


def _objective(cfg, models, kind, model_path, k):
    base = HeuristicObjective(models, cfg.objective_config())
    if kind != "original" and not model_path:
        raise ConfigError(f"--objective {kind} requires --model")
    surrogate = load_surrogate(kind, model_path) if kind != "original" else None
    return base, objective_factory(kind, base, surrogate, cfg.d)(k)


def _references(path, trajs):
    refs = load_aligned(path)
    out = {}
    for t in trajs:
        i = int(t.traj_id)
        if not 0 <= i < len(refs):
            raise DataError(f"trajectory {t.traj_id} has no aligned reference")
        out[t.traj_id] = refs[i]
    return out


# -- commands -----------------------------------------------------------------


def cmd_preprocess(args, cfg):
    sources, refs = load_parallel(cfg.corpus or _need("--corpus"), cfg.references or None)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(sources, out / "sources.txt")
    if refs is not None:
        save_corpus(refs, out / "references.txt")
    return {"sentences": len(sources), "out_dir": str(out)}


def cmd_train_lm(args, cfg):
    corpus = load_corpus(cfg.corpus or _need("--corpus"))
    fwd, bwd = train_lms(corpus, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fwd.save(out / LM_FWD)
    bwd.save(out / LM_BWD)
    fwd.vocab.save(out / "vocab.tsv")
    return {"sentences": len(corpus), "vocab": len(fwd.vocab), "order": cfg.lm_order, "out_dir": str(out)}


def _search(args, cfg, kind):
    inputs = load_corpus(args.input)
    models = _models(args, cfg)
    _, objective = _objective(cfg, models, kind, args.model, cfg.k)
    results = search_batch(inputs, objective, cfg.sa_config(), jobs=cfg.jobs)
    save_corpus([r.output for r in results], args.out)
    if args.traj_out:
        save_trajectories([r.trajectory for r in results], args.traj_out)
    return {"sentences": len(results), "objective": kind, "k": cfg.k, "seed": cfg.seed, "out": args.out}


def cmd_search(args, cfg):
    return _search(args, cfg, cfg.objective)


def cmd_collect(args, cfg):
    if not args.traj_out:
        raise ConfigError("collect requires --traj-out")
    return _search(args, cfg, "original")


def cmd_label(args, cfg):
    trajs = load_trajectories(args.traj)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    value = [e for t in trajs for e in label_value(t)]
    maxv = [e for t in trajs for e in label_max_value(t)]
    save_examples(value, out / "value.tsv")
    save_examples(maxv, out / "maxvalue.tsv")
    save_pairs([extract_pseudo_pair(t) for t in trajs], out / "pairs.tsv")
    return {"trajectories": len(trajs), "examples": len(value), "out_dir": str(out)}


def cmd_train_surrogate(args, cfg):
    if args.kind == "s2s":
        vocab = load_models(args.lm_dir, cfg.embeddings, cfg.stopwords).lm_fwd.vocab if args.lm_dir else None
        model = train_s2s(load_pairs(args.data), vocab, cfg.emission_hyper())
        model.save(args.out)
        return {"kind": "s2s", "lambdas": [float(v) for v in model.lambdas], "out": args.out}
    if not args.lm_dir:
        raise ConfigError("value surrogates need --lm-dir for their features")
    model = train_regressor(load_examples(args.data), _models(args, cfg), cfg.regressor_hyper(), args.kind)
    model.save(args.out)
    return {"kind": args.kind, "final_mse": model.final_mse, "out": args.out}


def cmd_evaluate(args, cfg):
    outputs = load_aligned(args.outputs)
    report = evaluate_corpus(
        outputs, load_aligned(args.references), load_aligned(args.sources), cfg.bleu_config(), cfg.ibleu_config()
    )
    if args.out:
        report.write_csv(args.out)
    return {"sentences": len(outputs), "mean_bleu": report.mean_bleu, "mean_ibleu": report.mean_ibleu,
            "corpus_bleu": report.corpus_bleu, "corpus_ibleu": report.corpus_ibleu}


def cmd_analyze(args, cfg):
    trajs = load_trajectories(args.traj)
    refs = _references(args.references, trajs)
    base, objective = _objective(cfg, _models(args, cfg), cfg.objective, args.model, cfg.k)
    row = analyze(trajs, objective, base, refs, cfg.objective, cfg.k, None, cfg.bleu_config(), cfg.ibleu_config())
    if args.out:
        write_rows([row], args.out)
    if args.states_out:
        write_state_csv(reevaluate(trajs, objective, refs, cfg.bleu_config(), cfg.ibleu_config()), args.states_out)
    return {"row": row.__dict__}


def cmd_sweep(args, cfg):
    baseline = load_trajectories(args.baseline_traj)
    refs = _references(args.references, baseline)
    models = _models(args, cfg)
    base = HeuristicObjective(models, cfg.objective_config())
    if not args.model:
        raise ConfigError(f"sweep over {args.kind} requires --model")
    make = objective_factory(args.kind, base, load_surrogate(args.kind, args.model), cfg.d)
    inputs = [t.x0 for t in baseline]
    indices = [int(t.traj_id) for t in baseline]
    grid = cfg.k_grid if args.k_grid is None else PipelineConfig.parse_value("k_grid", args.k_grid)
    rep = weight_sweep(inputs, indices, refs, make, base, args.kind, cfg.sa_config(), grid, baseline, cfg.jobs,
                       cfg.bleu_config(), cfg.ibleu_config())
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep.write_csv(out / "sweep.csv")
    for k, trajs in rep.trajectories.items():
        save_trajectories(trajs, out / f"{args.kind}_k{k:g}.tsv")
    write_diagnostic_tables({args.kind: rep}, out)
    return {"kind": args.kind, "rows": [r.__dict__ for r in rep.rows], "out_dir": str(out)}


def cmd_pipeline(args, cfg):
    return run_pipeline(cfg, log=lambda msg: print(msg, file=sys.stderr))


def _need(flag):
    raise ConfigError(f"{flag} is required")


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)

    models = _Parser(add_help=False)
    models.add_argument("--lm-dir", help="directory holding the trained language models")
    models.add_argument("--embeddings")
    models.add_argument("--stopwords")

    objective = _Parser(add_help=False)
    objective.add_argument("--objective", choices=["original", "value", "maxvalue", "s2s"])
    objective.add_argument("--model", help="trained surrogate for --objective")
    objective.add_argument("--k", type=float)
    objective.add_argument("--d", type=float)

    p = _Parser(prog="sapara", description="Paraphrasing by simulated annealing with learned surrogates.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("preprocess", parents=[common], help="normalize a corpus and its aligned references")
    s.add_argument("--corpus")
    s.add_argument("--references")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("train-lm", parents=[common], help="train forward and backward n-gram models")
    s.add_argument("--corpus")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_train_lm)

    for name, func, doc in (("search", cmd_search, "paraphrase every input line"),
                            ("collect", cmd_collect, "baseline searches that record trajectories")):
        s = sub.add_parser(name, parents=[common, models, objective], help=doc)
        s.add_argument("--input", required=True)
        s.add_argument("--steps", type=int)
        s.add_argument("--top-k", type=int, dest="top_k")
        s.add_argument("--out", required=True)
        s.add_argument("--traj-out")
        s.set_defaults(func=func)

    s = sub.add_parser("label", parents=[common], help="value / max-value labels and pseudo-pairs")
    s.add_argument("--traj", required=True)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_label)

    s = sub.add_parser("train-surrogate", parents=[common, models], help="fit one surrogate")
    s.add_argument("--kind", required=True, choices=["value", "maxvalue", "s2s"])
    s.add_argument("--data", required=True, help="labels (value kinds) or pairs (s2s)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_surrogate)

    s = sub.add_parser("evaluate", parents=[common], help="BLEU and iBLEU of aligned outputs")
    s.add_argument("--outputs", required=True)
    s.add_argument("--references", required=True)
    s.add_argument("--sources", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("analyze", parents=[common, models, objective], help="diagnostics for saved trajectories")
    s.add_argument("--traj", required=True)
    s.add_argument("--references", required=True, help="references aligned with trajectory ids")
    s.add_argument("--out")
    s.add_argument("--states-out", help="per-state objective/BLEU/iBLEU CSV")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", parents=[common, models], help="re-search over a grid of weights k")
    s.add_argument("--kind", required=True, choices=["value", "maxvalue", "s2s"])
    s.add_argument("--model")
    s.add_argument("--d", type=float)
    s.add_argument("--k-grid", help="comma-separated weights, default from config")
    s.add_argument("--baseline-traj", required=True)
    s.add_argument("--references", required=True)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("pipeline", parents=[common], help="run every stage end to end")
    s.add_argument("--workdir")
    s.add_argument("--corpus")
    s.add_argument("--references")
    s.add_argument("--embeddings")
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        summary = args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    _emit({"command": args.command, "status": "ok", **summary})
    return 0


if __name__ == "__main__":
    sys.exit(main())
