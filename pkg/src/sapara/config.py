"""Flat ``key = value`` pipeline configuration.

Lines starting with ``#`` are comments.  Relative paths in a config file are
resolved against the file's directory; command-line overrides are resolved
against the working directory and always win over the file.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .metrics import BleuConfig, IBleuConfig
from .objective import KINDS, CombineConfig, ObjectiveConfig
from .search import SAConfig
from .surrogates import EmissionHyper, RegressorHyper

PATH_KEYS = ("corpus", "references", "embeddings", "stopwords", "workdir")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(Fraction(v.strip())) for v in text.split(",") if v.strip())


def _words(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class PipelineConfig:
    # paths
    corpus: str = ""
    references: str = ""
    embeddings: str = ""
    stopwords: str = ""  # empty: bundled list
    workdir: str = "work"
    # corpus / language model
    min_count: int = 1
    lm_order: int = 3
    lm_add_k: float = 0.1
    score_eos: bool = True
    # objective
    p: float = 8.0
    q: float = 1.0
    s: float = 1.0
    score_scale: float = 1.0
    eps: float = 1e-4
    # annealing
    t_init: float = 3e-2
    anneal_rate: float = 3e-4
    steps: int = 100
    top_k: int = 25
    op_probs: tuple[float, ...] = (1 / 3, 1 / 3, 1 / 3)
    seed: int = 0
    min_len: int = 1
    # combination
    objective: str = "original"
    k: float = 0.0
    d: float = 100.0
    # surrogates
    hidden: int = 16
    epochs: int = 50
    batch_size: int = 64
    lr: float = 1e-2
    momentum: float = 0.0
    emission_add_k: float = 0.1
    em_iters: int = 100
    # metrics
    max_n: int = 4
    smoothing_k: float = 1.0
    alpha: float = 0.9
    # pipeline
    test_fraction: float = 0.2
    k_grid: tuple[float, ...] = (0.0, 0.2, 1.0)
    kinds: tuple[str, ...] = ("value", "maxvalue", "s2s")
    jobs: int = 1

    # -- construction ----------------------------------------------------

    @classmethod
    def parse_value(cls, key: str, text: str) -> Any:
        types = {f.name: f.type for f in fields(cls)}
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        kind = types[key]
        try:
            if kind == "int":
                return int(text)
            if kind == "float":
                return float(Fraction(text.strip()))
            if kind == "bool":
                return _bool(text)
            if kind == "tuple[float, ...]":
                return _floats(text)
            if kind == "tuple[str, ...]":
                return _words(text)
            return text.strip()
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        values: dict[str, Any] = {}
        for n, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = cls.parse_value(key, value)
            if key in PATH_KEYS and values[key]:
                p = Path(values[key])
                values[key] = str(p if p.is_absolute() else (path.parent / p).resolve())
        return cls().with_overrides(values)

    def with_overrides(self, values: dict[str, Any]) -> "PipelineConfig":
        clean = {}
        for key, value in values.items():
            if value is None:
                continue
            if isinstance(value, str) and key not in PATH_KEYS and key not in ("objective",):
                value = self.parse_value(key, value)
            clean[key] = value
        try:
            cfg = replace(self, **clean)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.objective not in KINDS:
            raise ConfigError(f"objective must be one of {KINDS}, got {self.objective!r}")
        for kind in self.kinds:
            if kind not in KINDS[1:]:
                raise ConfigError(f"unknown surrogate kind {kind!r}")
        if not 0.0 <= self.test_fraction <= 1.0:
            raise ConfigError("test_fraction must lie in [0, 1]")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        for build in (self.objective_config, self.sa_config, self.combine_config, self.bleu_config,
                      self.ibleu_config, self.regressor_hyper, self.emission_hyper):
            try:
                build()
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        for k in self.k_grid:
            if not 0.0 <= k <= 1.0:
                raise ConfigError(f"k grid value {k} outside [0, 1]")

    def require_paths(self, *keys: str) -> None:
        for key in keys:
            value = getattr(self, key)
            if not value:
                raise ConfigError(f"missing required path {key!r}")
            if not Path(value).exists():
                raise ConfigError(f"{key} path does not exist: {value}")

    # -- typed views -------------------------------------------------------

    def objective_config(self) -> ObjectiveConfig:
        return ObjectiveConfig(self.p, self.q, self.s, self.score_scale, self.eps)

    def sa_config(self) -> SAConfig:
        return SAConfig(self.t_init, self.anneal_rate, self.steps, self.top_k, tuple(self.op_probs), self.seed,
                        self.min_len)

    def combine_config(self) -> CombineConfig:
        return CombineConfig(self.k, self.d)

    def bleu_config(self) -> BleuConfig:
        return BleuConfig(self.max_n, self.smoothing_k)

    def ibleu_config(self) -> IBleuConfig:
        return IBleuConfig(self.alpha)

    def regressor_hyper(self) -> RegressorHyper:
        return RegressorHyper(self.hidden, self.epochs, self.batch_size, self.lr, self.seed, momentum=self.momentum)

    def emission_hyper(self) -> EmissionHyper:
        return EmissionHyper(self.emission_add_k, self.em_iters)

    def dump(self) -> str:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            out.append(f"{f.name} = {v}")
        return "\n".join(out) + "\n"


def bundled_fixture_config() -> Path:
    from importlib import resources

    return Path(str(resources.files("sapara").joinpath("data/fixture/pipeline.cfg")))
