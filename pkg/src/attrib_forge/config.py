"""Run configuration: INI-style ``key = value`` sections.

Recognised sections are ``run``, ``dataset``, ``schema``, ``model``,
``model.<kind>``, ``ga``, ``svr_tuning``, ``shapley`` and ``compare``. See
``demos/laptops.cfg`` for a complete example.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .genetic_search import GAConfig
from .regressors import DEFAULTS, KIND_ALIASES, RegressorSpec

OUT_ENV = "ATTRIB_FORGE_OUT"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ShapleyConfig:
    background: int = 100
    mode: str = "auto"
    permutations: int = 4096
    exact_cap: int = 15


@dataclass(frozen=True)
class RunConfig:
    input: str
    schema: dict[str, str] = field(default_factory=dict)
    model: str = "svr"
    hyperparams: dict[str, dict[str, float]] = field(default_factory=dict)
    ga: GAConfig = GAConfig()
    tuning: GAConfig | None = None
    per_mask_tuning: bool = False
    folds: int = 10
    rating_filter: int = 10
    max_missing: float = 0.4
    strict_scaling: bool = False
    seed: int = 0
    out: str = "out"
    n_jobs: int = 1
    shapley: ShapleyConfig = ShapleyConfig()
    compare_models: tuple[str, ...] = ("knn", "dtree", "rforest", "svr", "mlp")

    def spec(self, kind: str | None = None) -> RegressorSpec:
        kind = KIND_ALIASES[kind or self.model]
        return RegressorSpec(kind, self.hyperparams.get(kind, {}), self.seed)

    def ga_config(self) -> GAConfig:
        return replace(self.ga, seed=self.seed, n_jobs=self.n_jobs)

    def to_dict(self) -> dict:
        """Resolved settings in a fixed key order (output location excluded)."""
        return {
            "seed": self.seed,
            "input": self.input,
            "rating_filter": self.rating_filter,
            "max_missing": self.max_missing,
            "strict_scaling": self.strict_scaling,
            "schema": dict(self.schema),
            "model": self.model,
            "hyperparams": {k: self.spec(k).hyperparams for k in sorted(
                set(self.compare_models) | {self.model})},
            "folds": self.folds,
            "ga": self.ga_config().to_dict(),
            "svr_tuning": None if self.tuning is None else {
                **self.tuning.to_dict(), "per_mask": self.per_mask_tuning},
            "shapley": {
                "background": self.shapley.background,
                "mode": self.shapley.mode,
                "permutations": self.shapley.permutations,
                "exact_cap": self.shapley.exact_cap,
            },
            "compare_models": list(self.compare_models),
        }

    def to_ini(self) -> str:
        """Serialize back to the config file format."""
        lines = ["[run]", f"seed = {self.seed}", f"folds = {self.folds}",
                 f"strict_scaling = {str(self.strict_scaling).lower()}", "",
                 "[dataset]", f"input = {self.input}", f"rating_filter = {self.rating_filter}",
                 f"max_missing = {self.max_missing!r}", "", "[schema]"]
        lines += [f"{k} = {v}" for k, v in self.schema.items()]
        lines += ["", "[model]", f"kind = {self.model}"]
        for k, v in self.spec().hyperparams.items():
            lines.append(f"{k} = {v!r}")
        for kind in self.compare_models:
            if kind == self.model:
                continue
            lines += ["", f"[model.{kind}]"]
            lines += [f"{k} = {v!r}" for k, v in self.spec(kind).hyperparams.items()]
        g = self.ga
        lines += ["", "[ga]", f"population = {g.population}", f"generations = {g.generations}",
                  f"crossover_rate = {g.crossover_rate!r}", f"mutation_rate = {g.mutation_rate!r}",
                  f"top_k = {g.top_k}"]
        lines += ["", "[svr_tuning]", f"enabled = {str(self.tuning is not None).lower()}"]
        if self.tuning is not None:
            t = self.tuning
            lines += [f"per_mask = {str(self.per_mask_tuning).lower()}",
                      f"population = {t.population}", f"generations = {t.generations}",
                      f"crossover_rate = {t.crossover_rate!r}",
                      f"mutation_rate = {t.mutation_rate!r}"]
        s = self.shapley
        lines += ["", "[shapley]", f"background = {s.background}", f"mode = {s.mode}",
                  f"permutations = {s.permutations}", f"exact_cap = {s.exact_cap}",
                  "", "[compare]", f"models = {', '.join(self.compare_models)}", ""]
        return "\n".join(lines)


def _get(section, key, conv, default):
    if section is None or key not in section:
        return default
    raw = section[key].strip()
    try:
        if conv is bool:
            return section.getboolean(key)
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: cannot parse {raw!r}") from exc


def _ga_section(section, base: GAConfig) -> GAConfig:
    try:
        return replace(
            base,
            population=_get(section, "population", int, base.population),
            generations=_get(section, "generations", int, base.generations),
            crossover_rate=_get(section, "crossover_rate", float, base.crossover_rate),
            mutation_rate=_get(section, "mutation_rate", float, base.mutation_rate),
            top_k=_get(section, "top_k", int, base.top_k),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _kind(name: str) -> str:
    kind = KIND_ALIASES.get(name.strip().lower())
    if kind is None:
        raise ConfigError(f"unknown model kind {name!r}")
    return kind


def load_config(path: str | Path, **overrides) -> RunConfig:
    """Parse a config file; keyword overrides (CLI flags) win when not None."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # column names are case-sensitive
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    sec = {name: parser[name] for name in parser.sections()}
    run, ds = sec.get("run"), sec.get("dataset")

    if ds is None or "input" not in ds:
        raise ConfigError("config needs [dataset] input = <csv path>")
    input_path = Path(ds["input"].strip())
    if not input_path.is_absolute():
        input_path = (path.parent / input_path).resolve()

    model = _kind(sec["model"]["kind"]) if "model" in sec and "kind" in sec["model"] else "svr"
    hyper: dict[str, dict[str, float]] = {}
    for name, section in sec.items():
        if name == "model":
            target = model
        elif name.startswith("model."):
            target = _kind(name.split(".", 1)[1])
        else:
            continue
        for k, v in section.items():
            if k == "kind":
                continue
            if k not in DEFAULTS[target]:
                raise ConfigError(f"[{name}] unknown hyperparameter {k!r} for {target}")
            try:
                hyper.setdefault(target, {})[k] = float(v)
            except ValueError as exc:
                raise ConfigError(f"[{name}] {k}: cannot parse {v!r}") from exc

    ga = _ga_section(sec.get("ga"), GAConfig())
    tuning, per_mask = None, False
    tsec = sec.get("svr_tuning")
    if tsec is not None and _get(tsec, "enabled", bool, False):
        tuning = _ga_section(tsec, GAConfig(population=20, generations=10))
        per_mask = _get(tsec, "per_mask", bool, False)

    shp = sec.get("shapley")
    shapley = ShapleyConfig(
        background=_get(shp, "background", int, 100),
        mode=_get(shp, "mode", str, "auto"),
        permutations=_get(shp, "permutations", int, 4096),
        exact_cap=_get(shp, "exact_cap", int, 15),
    )
    if shapley.mode not in ("auto", "exact", "sampled"):
        raise ConfigError(f"[shapley] mode must be auto, exact or sampled, not {shapley.mode!r}")

    compare = tuple(DEFAULTS)
    if "compare" in sec and "models" in sec["compare"]:
        compare = tuple(_kind(k) for k in sec["compare"]["models"].split(",") if k.strip())

    out = _get(run, "out", str, None) or os.environ.get(OUT_ENV) or "out"
    if run is not None and "out" in run and not Path(out).is_absolute():
        out = str((path.parent / out).resolve())

    cfg = RunConfig(
        input=str(input_path),
        schema=dict(sec["schema"]) if "schema" in sec else {},
        model=model,
        hyperparams=hyper,
        ga=ga,
        tuning=tuning,
        per_mask_tuning=per_mask,
        folds=_get(run, "folds", int, 10),
        rating_filter=_get(ds, "rating_filter", int, 10),
        max_missing=_get(ds, "max_missing", float, 0.4),
        strict_scaling=_get(run, "strict_scaling", bool, False),
        seed=_get(run, "seed", int, 0),
        out=out,
        n_jobs=_get(run, "n_jobs", int, 1),
        shapley=shapley,
        compare_models=compare,
    )
    return apply_overrides(cfg, **overrides)


def apply_overrides(cfg: RunConfig, seed=None, model=None, folds=None, generations=None,
                    pop=None, topk=None, out=None, n_jobs=None) -> RunConfig:
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if model is not None:
        changes["model"] = _kind(model)
    if folds is not None:
        changes["folds"] = folds
    if out is not None:
        changes["out"] = out
    if n_jobs is not None:
        changes["n_jobs"] = n_jobs
    ga = {}
    if generations is not None:
        ga["generations"] = generations
    if pop is not None:
        ga["population"] = pop
    if topk is not None:
        ga["top_k"] = topk
    if ga:
        try:
            changes["ga"] = replace(cfg.ga, **ga)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if changes.get("folds", cfg.folds) < 2:
        raise ConfigError("folds must be at least 2")
    return replace(cfg, **changes)
