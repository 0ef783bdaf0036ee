"""Genetic-algorithm wrapper feature selection.

Genomes are boolean masks over the dataset columns; fitness is the
cross-validated MAE of a regressor trained on the selected columns (lower is
better). A small real-coded GA tunes the SVR ``C``/``gamma`` pair.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from joblib import Parallel, delayed

from .dataset import EncodedDataset
from .evaluation import FoldPlan, MetricTriple, cross_validate, make_folds
from .regressors import RegressorSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GAConfig:
    population: int = 100
    generations: int = 50
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    top_k: int = 5
    seed: int = 0
    n_jobs: int = 1
    memoize: bool = True

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "generations": self.generations,
            "crossover_rate": self.crossover_rate,
            "mutation_rate": self.mutation_rate,
            "top_k": self.top_k,
            "seed": self.seed,
        }


@dataclass
class Individual:
    mask: np.ndarray
    fitness: MetricTriple
    birth: int = 0

    @property
    def mae(self) -> float:
        return self.fitness.mae


@dataclass(frozen=True)
class HyperGenome:
    c: float
    gamma: float


@dataclass
class GAResult:
    top: list[Individual]
    history: list[dict]
    spec: RegressorSpec
    evaluations: int
    archive: dict[bytes, MetricTriple] = field(repr=False, default_factory=dict)

    @property
    def best(self) -> Individual:
        return self.top[0]


def repair(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Turn on one uniformly chosen bit if the mask is empty."""
    if not mask.any():
        mask = mask.copy()
        mask[rng.integers(mask.size)] = True
    return mask


def init_population(d: int, config: GAConfig, rng: np.random.Generator) -> list[np.ndarray]:
    if d < 1:
        raise ValueError("need at least one feature")
    return [repair(rng.random(d) < 0.5, rng) for _ in range(config.population)]


def selection_probabilities(maes) -> np.ndarray:
    """Roulette probabilities under minimization.

    Weight ``(max - mae) + eps`` with ``eps = 1e-9 + 0.01 * (max - min)`` so
    the worst individual keeps a small, non-zero chance.
    """
    maes = np.asarray(maes, dtype=float)
    hi, lo = maes.max(), maes.min()
    w = (hi - maes) + (1e-9 + 0.01 * (hi - lo))
    return w / w.sum()


def roulette_select(population: list[Individual], rng: np.random.Generator) -> Individual:
    if not population:
        raise ValueError("empty population")
    p = selection_probabilities([ind.mae for ind in population])
    return population[int(rng.choice(len(population), p=p))]


def uniform_swap(a: np.ndarray, b: np.ndarray,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Exchange each position between the parents with probability 1/2."""
    swap = rng.random(a.size) < 0.5
    return np.where(swap, b, a), np.where(swap, a, b)


def crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator,
              rate: float = 0.9) -> tuple[np.ndarray, np.ndarray]:
    """Uniform crossover applied with probability ``rate``; otherwise clones."""
    if a.shape != b.shape:
        raise ValueError("parents differ in length")
    if rng.random() >= rate:
        return a.copy(), b.copy()
    c1, c2 = uniform_swap(a, b, rng)
    return repair(c1, rng), repair(c2, rng)


def mutate(m: np.ndarray, rng: np.random.Generator, rate: float = 0.1) -> np.ndarray:
    """With probability ``rate`` flip exactly one uniformly chosen bit.

    A flip that would empty the mask is undone, so the result is always at
    Hamming distance 0 or 1 from the input.
    """
    if rng.random() >= rate:
        return m.copy()
    out = m.copy()
    j = rng.integers(out.size)
    out[j] = not out[j]
    if not out.any():
        out[j] = True
    return out


def survive(parents: list[Individual], offspring: list[Individual],
            size: int) -> list[Individual]:
    """Elitist (mu + lambda) truncation: best ``size`` by MAE, older first on ties."""
    merged = sorted(parents + offspring, key=lambda ind: (ind.mae, ind.birth))
    return merged[:size]


def _key(mask: np.ndarray) -> bytes:
    return np.packbits(mask.astype(bool)).tobytes() + bytes([mask.size % 8])


def _evaluate_mask(data, mask, spec, plan, strict_scaling, tune_config):
    if tune_config is not None:
        genome = tune_svr(data, mask, tune_config, spec=spec, plan=plan,
                          strict_scaling=strict_scaling)
        spec = spec.with_params(C=genome.c, gamma=genome.gamma)
    return cross_validate(data, mask, spec, plan, strict_scaling)


class _Evaluator:
    """Memoizing fitness function; an archive of every evaluated mask is kept."""

    def __init__(self, data, spec, plan, config, strict_scaling, tune_config):
        self.data, self.spec, self.plan = data, spec, plan
        self.n_jobs, self.memoize = config.n_jobs, config.memoize
        self.strict_scaling = strict_scaling
        self.tune_config = tune_config
        self.archive: dict[bytes, MetricTriple] = {}
        self.calls = 0

    def __call__(self, masks: list[np.ndarray]) -> list[MetricTriple]:
        todo, seen = [], set()
        for m in masks:
            k = _key(m)
            if (not self.memoize or k not in self.archive) and k not in seen:
                todo.append(m)
                seen.add(k)
        args = (self.data, self.spec, self.plan, self.strict_scaling, self.tune_config)
        if self.n_jobs == 1 or len(todo) < 2:
            results = [_evaluate_mask(self.data, m, *args[1:]) for m in todo]
        else:
            results = Parallel(n_jobs=self.n_jobs)(
                delayed(_evaluate_mask)(self.data, m, *args[1:]) for m in todo
            )
        self.calls += len(todo)
        for m, r in zip(todo, results):
            self.archive.setdefault(_key(m), r)
        return [self.archive[_key(m)] for m in masks]


def run_ga(
    data: EncodedDataset,
    spec: RegressorSpec,
    config: GAConfig = GAConfig(),
    plan: FoldPlan | None = None,
    folds: int = 10,
    strict_scaling: bool = False,
    tune_config: GAConfig | None = None,
    per_mask_tuning: bool = False,
    progress: Callable[[dict], None] | None = None,
) -> GAResult:
    """Evolve feature masks and return the ``top_k`` distinct best ones.

    One fold plan is frozen for the whole run so fitness is a pure function
    of the mask. For an SVR spec, ``tune_config`` enables the real-coded
    hyperparameter search: once on the full feature set by default, or for
    every mask when ``per_mask_tuning`` is set.
    """
    rng = np.random.default_rng(config.seed)
    if plan is None:
        plan = make_folds(data.n_samples, folds, config.seed)
    d = data.n_features

    if tune_config is not None and spec.kind != "svr":
        tune_config = None
    if tune_config is not None and not per_mask_tuning:
        genome = tune_svr(data, np.ones(d, dtype=bool), tune_config, spec=spec, plan=plan,
                          strict_scaling=strict_scaling)
        spec = spec.with_params(C=genome.c, gamma=genome.gamma)
        tune_config = None
    evaluate = _Evaluator(data, spec, plan, config, strict_scaling, tune_config)

    births = iter(range(10**12))
    masks = init_population(d, config, rng)
    population = [Individual(m, f, next(births)) for m, f in zip(masks, evaluate(masks))]
    history = []

    def record(gen):
        maes = [ind.mae for ind in population]
        entry = {
            "generation": gen,
            "best_mae": float(min(maes)),
            "mean_mae": float(np.mean(maes)),
            "evaluations": len(evaluate.archive),
        }
        history.append(entry)
        log.debug("generation %d best %.6f mean %.6f", gen, entry["best_mae"], entry["mean_mae"])
        if progress is not None:
            progress(entry)

    population = survive(population, [], config.population)
    record(0)
    for gen in range(1, config.generations + 1):
        children = []
        while len(children) < config.population:
            a = roulette_select(population, rng)
            b = roulette_select(population, rng)
            c1, c2 = crossover(a.mask, b.mask, rng, config.crossover_rate)
            children.append(mutate(c1, rng, config.mutation_rate))
            children.append(mutate(c2, rng, config.mutation_rate))
        children = children[: config.population]
        offspring = [Individual(m, f, next(births)) for m, f in zip(children, evaluate(children))]
        population = survive(population, offspring, config.population)
        record(gen)

    order = list(evaluate.archive)  # insertion order = first evaluation
    ranked = sorted(range(len(order)), key=lambda i: (evaluate.archive[order[i]].mae, i))
    top = []
    for i in ranked[: config.top_k]:
        k = order[i]
        mask = np.unpackbits(np.frombuffer(k[:-1], dtype=np.uint8))[:d].astype(bool)
        top.append(Individual(mask, evaluate.archive[k], i))
    return GAResult(top=top, history=history, spec=spec, evaluations=evaluate.calls,
                    archive=dict(evaluate.archive))


def exhaustive_search(data: EncodedDataset, spec: RegressorSpec, plan: FoldPlan,
                      strict_scaling: bool = False) -> list[tuple[np.ndarray, MetricTriple]]:
    """Cross-validate every non-empty mask. Only sensible for small d."""
    d = data.n_features
    out = []
    for code in range(1, 2**d):
        mask = np.array([(code >> j) & 1 for j in range(d)], dtype=bool)
        out.append((mask, cross_validate(data, mask, spec, plan, strict_scaling)))
    return out


def tune_svr(
    data: EncodedDataset,
    mask,
    config: GAConfig,
    spec: RegressorSpec | None = None,
    plan: FoldPlan | None = None,
    folds: int = 10,
    c_bounds: tuple[float, float] = (0.1, 100.0),
    gamma_bounds: tuple[float, float] = (1e-3, 10.0),
    strict_scaling: bool = False,
) -> HyperGenome:
    """Real-coded GA over ``(log C, log gamma)`` minimizing CV MAE of an SVR.

    Blend crossover draws each child coordinate uniformly between the
    parents' coordinates; Gaussian mutation uses sigma = 10% of the log range
    and clamps to the bounds.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("mask selects no features")
    spec = spec or RegressorSpec("svr")
    if plan is None:
        plan = make_folds(data.n_samples, folds, config.seed)
    rng = np.random.default_rng([config.seed, 1])
    lo = np.log([c_bounds[0], gamma_bounds[0]])
    hi = np.log([c_bounds[1], gamma_bounds[1]])
    sigma = 0.1 * (hi - lo)
    cache: dict[bytes, float] = {}

    def to_genome(g):
        c = float(np.clip(math.exp(g[0]), c_bounds[0], c_bounds[1]))
        gamma = float(np.clip(math.exp(g[1]), gamma_bounds[0], gamma_bounds[1]))
        return HyperGenome(c, gamma)

    def fitness(g):
        k = g.tobytes()
        if k not in cache:
            h = to_genome(g)
            cache[k] = cross_validate(data, mask, spec.with_params(C=h.c, gamma=h.gamma),
                                      plan, strict_scaling).mae
        return cache[k]

    births = iter(range(10**12))
    pop = []
    for _ in range(config.population):
        g = lo + rng.random(2) * (hi - lo)
        pop.append((fitness(g), next(births), g))
    pop.sort(key=lambda t: (t[0], t[1]))

    for _ in range(config.generations):
        children = []
        while len(children) < config.population:
            p = selection_probabilities([t[0] for t in pop])
            a = pop[int(rng.choice(len(pop), p=p))][2]
            b = pop[int(rng.choice(len(pop), p=p))][2]
            if rng.random() < config.crossover_rate:
                c1 = a + rng.random(2) * (b - a)
                c2 = a + rng.random(2) * (b - a)
            else:
                c1, c2 = a.copy(), b.copy()
            for c in (c1, c2):
                if rng.random() < config.mutation_rate:
                    c = np.clip(c + rng.normal(0.0, 1.0, 2) * sigma, lo, hi)
                children.append(np.clip(c, lo, hi))
        children = children[: config.population]
        pop = sorted(pop + [(fitness(c), next(births), c) for c in children],
                     key=lambda t: (t[0], t[1]))[: config.population]
    return to_genome(pop[0][2])
