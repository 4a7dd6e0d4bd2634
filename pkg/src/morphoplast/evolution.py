"""Genetic algorithm over developmental genomes.

Three co-evolution conditions share one GA loop and differ only in how a
genome's fitness is scored:

* ``A`` — 54-gene genomes, evaluated with frozen weights.
* ``B`` — 54-gene genomes, evaluated under a fixed anti-Hebbian rule.
* ``C`` — 56-gene genomes carrying their own (eta, lambda) pair, evaluated
  under that pair.  Selection is then free to tune the learning rule along
  with the body plan.

The loop is deterministic: every stochastic step draws from a stream derived
from (run seed, generation index), so a run log is a pure function of its
config.  Fitness values are cached by genome content hash; elites therefore
cost nothing to re-score but still count toward the evaluation budget
(population + generations x population, e.g. 10,050 at the default sizes).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace

import numpy as np

from .envs import EnvSpec
from .evaluation import DEFAULT_SEEDS, evaluate_network
from .genome import (
    ACROBOT_PLASTICITY_BOUNDS,
    CARTPOLE_PLASTICITY_BOUNDS,
    Genome,
    PlasticityGeneBounds,
    PlasticityParams,
    crossover,
    genome_hash,
    mutate,
    sample_random,
)
from .morphogenesis import DevelopmentConfig, develop
from .records import make_header

__all__ = [
    "CONDITIONS",
    "FIXED_PLASTICITY",
    "GAConfig",
    "GenerationLog",
    "GARunLog",
    "fitness_of",
    "ga_generation_step",
    "run_ga",
    "write_ga_log",
    "read_ga_log",
    "ga_summary_row",
    "GA_SUMMARY_FIELDS",
]

CONDITIONS = ("A", "B", "C")

# Fixed learning rule used by condition B, one per benchmark.
FIXED_PLASTICITY: dict[str, PlasticityParams] = {
    "cartpole": PlasticityParams(eta=-0.01, decay=0.01),
    "acrobot": PlasticityParams(eta=-0.001, decay=0.05),
}

_PLASTICITY_BOUNDS: dict[str, PlasticityGeneBounds] = {
    "cartpole": CARTPOLE_PLASTICITY_BOUNDS,
    "acrobot": ACROBOT_PLASTICITY_BOUNDS,
}

_GRID_DEFAULT = {"cartpole": 10, "acrobot": 20}


@dataclass(frozen=True)
class GAConfig:
    """Everything a GA run depends on; two equal configs give equal logs."""

    condition: str
    env: str = "cartpole"
    width: int | None = None
    height: int | None = None
    iterations: int = 200
    population: int = 50
    generations: int = 200
    selection_fraction: float = 0.2
    elitism: int = 2
    mutation_rate: float = 0.3
    run_seed: int = 0
    seeds: tuple[int, ...] = DEFAULT_SEEDS

    def __post_init__(self) -> None:
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.env not in FIXED_PLASTICITY:
            raise ValueError(f"unknown env {self.env!r}")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be < population")
        if not 0.0 < self.selection_fraction <= 1.0:
            raise ValueError("selection fraction must be in (0, 1]")
        if self.population < 2 or self.generations < 1:
            raise ValueError("population must be >= 2 and generations >= 1")

    @property
    def evolves_plasticity(self) -> bool:
        return self.condition == "C"

    @property
    def plasticity_bounds(self) -> PlasticityGeneBounds:
        return _PLASTICITY_BOUNDS[self.env]

    @property
    def parents_pool_size(self) -> int:
        return max(1, round(self.selection_fraction * self.population))

    def development_config(self) -> DevelopmentConfig:
        side = _GRID_DEFAULT[self.env]
        return DevelopmentConfig(
            width=self.width or side, height=self.height or side, iterations=self.iterations
        )

    def env_spec(self) -> EnvSpec:
        return EnvSpec(self.env)

    def config_hash(self) -> str:
        items = sorted(
            (k, ",".join(map(str, v)) if isinstance(v, tuple) else str(v))
            for k, v in vars(self).items()
        )
        text = "\n".join(f"{k}={v}" for k, v in items)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class GenerationLog:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_genome: Genome
    best_neurons: int
    best_connections: int
    mean_eta: float | None = None
    best_eta: float | None = None
    mean_lambda: float | None = None
    best_lambda: float | None = None
    min_eta: float | None = None
    max_eta: float | None = None

    def to_dict(self) -> dict:
        d = {
            "generation": self.generation,
            "best_fitness": self.best_fitness,
            "mean_fitness": self.mean_fitness,
            "best_genome": self.best_genome.to_dict(),
            "best_neurons": self.best_neurons,
            "best_connections": self.best_connections,
        }
        if self.mean_eta is not None:
            d["mean_eta"] = self.mean_eta
            d["best_eta"] = self.best_eta
            d["mean_lambda"] = self.mean_lambda
            d["best_lambda"] = self.best_lambda
            d["min_eta"] = self.min_eta
            d["max_eta"] = self.max_eta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationLog":
        return cls(
            generation=int(d["generation"]),
            best_fitness=float(d["best_fitness"]),
            mean_fitness=float(d["mean_fitness"]),
            best_genome=Genome.from_dict(d["best_genome"]),
            best_neurons=int(d["best_neurons"]),
            best_connections=int(d["best_connections"]),
            mean_eta=d.get("mean_eta"),
            best_eta=d.get("best_eta"),
            mean_lambda=d.get("mean_lambda"),
            best_lambda=d.get("best_lambda"),
            min_eta=d.get("min_eta"),
            max_eta=d.get("max_eta"),
        )


@dataclass(frozen=True)
class GARunLog:
    config: GAConfig
    generations: tuple[GenerationLog, ...]
    evaluations_counted: int
    evaluations_computed: int

    @property
    def final(self) -> GenerationLog:
        return self.generations[-1]

    def convergence_generation(self, threshold: float = 0.75) -> int | None:
        """First generation whose best fitness reaches ``threshold``."""
        for entry in self.generations:
            if entry.best_fitness >= threshold:
                return entry.generation
        return None


def fitness_of(genome: Genome, config: GAConfig) -> float:
    """Score one genome in [0, 1]; non-functional networks score 0.

    The raw episode reward maps to fitness as mean/500 on CartPole and
    (500 + mean)/500 on Acrobot, so "solved" sits near 1.0 on both.
    """
    net = develop(genome, config.development_config())
    spec = config.env_spec()
    if not net.functional(spec.obs_dim, spec.n_actions):
        return 0.0
    if config.condition == "A":
        params, mode = None, "baseline"
    elif config.condition == "B":
        params, mode = FIXED_PLASTICITY[config.env], "plastic"
    else:
        if genome.plasticity is None:
            raise ValueError("condition C requires genomes with plasticity genes")
        params, mode = genome.plasticity, "plastic"
    result = evaluate_network(net, spec, params, mode, config.seeds)
    mean = result.mean_reward
    fitness = mean / 500.0 if config.env == "cartpole" else (500.0 + mean) / 500.0
    return float(min(1.0, max(0.0, fitness)))


def _ranked(population: list[Genome], fitnesses: list[float]) -> list[int]:
    # ties broken by genome hash so equal-fitness orderings are stable
    return sorted(
        range(len(population)),
        key=lambda i: (-fitnesses[i], genome_hash(population[i])),
    )


def ga_generation_step(
    population: list[Genome],
    fitnesses: list[float],
    config: GAConfig,
    generation: int,
) -> list[Genome]:
    """Produce the next population: elites unchanged, the rest bred.

    Parents are drawn uniformly from the top ``selection_fraction`` of the
    current population (two distinct parents whenever the pool allows).  All
    randomness comes from a (run seed, generation) derived stream.
    """
    if len(population) != config.population or len(fitnesses) != config.population:
        raise ValueError("population/fitness size mismatch")
    order = _ranked(population, fitnesses)
    pool = [population[i] for i in order[: config.parents_pool_size]]
    next_population = [population[i] for i in order[: config.elitism]]

    rng = np.random.default_rng(np.random.SeedSequence([config.run_seed, generation]))
    while len(next_population) < config.population:
        i = int(rng.integers(len(pool)))
        j = int(rng.integers(len(pool)))
        while len(pool) > 1 and j == i:
            j = int(rng.integers(len(pool)))
        child = crossover(pool[i], pool[j], int(rng.integers(2**32)))
        child = mutate(
            child,
            config.mutation_rate,
            int(rng.integers(2**32)),
            plasticity_bounds=config.plasticity_bounds,
        )
        next_population.append(child)
    return next_population


def run_ga(config: GAConfig) -> GARunLog:
    """Run the full GA and return its per-generation log.

    The initial population is sampled gene-wise uniform (condition C also
    draws its plasticity pair uniformly over the benchmark's ranges).  Each
    subsequent generation applies :func:`ga_generation_step`.  Fitness is
    cached by genome hash: re-scored individuals (elites, duplicate
    children) count toward ``evaluations_counted`` but not
    ``evaluations_computed``.
    """
    init_rng = np.random.default_rng(np.random.SeedSequence([config.run_seed, 0]))
    population = [
        sample_random(
            int(init_rng.integers(2**32)),
            with_plasticity=config.evolves_plasticity,
            plasticity_bounds=config.plasticity_bounds,
        )
        for _ in range(config.population)
    ]

    cache: dict[str, float] = {}
    counted = 0
    computed = 0

    def score_all(pop: list[Genome]) -> list[float]:
        nonlocal counted, computed
        values = []
        for g in pop:
            key = genome_hash(g)
            counted += 1
            if key not in cache:
                cache[key] = fitness_of(g, config)
                computed += 1
            values.append(cache[key])
        return values

    def log_entry(generation: int, pop: list[Genome], fits: list[float]) -> GenerationLog:
        best = _ranked(pop, fits)[0]
        net = develop(pop[best], config.development_config())
        entry = GenerationLog(
            generation=generation,
            best_fitness=fits[best],
            mean_fitness=float(np.mean(fits)),
            best_genome=pop[best],
            best_neurons=net.n_neurons,
            best_connections=net.n_connections,
        )
        if config.evolves_plasticity:
            etas = [g.plasticity.eta for g in pop]
            lams = [g.plasticity.decay for g in pop]
            entry = replace(
                entry,
                mean_eta=float(np.mean(etas)),
                best_eta=pop[best].plasticity.eta,
                mean_lambda=float(np.mean(lams)),
                best_lambda=pop[best].plasticity.decay,
                min_eta=float(min(etas)),
                max_eta=float(max(etas)),
            )
        return entry

    fitnesses = score_all(population)
    log = [log_entry(0, population, fitnesses)]

    for generation in range(1, config.generations + 1):
        population = ga_generation_step(population, fitnesses, config, generation)
        fitnesses = score_all(population)
        entry = log_entry(generation, population, fitnesses)
        if entry.best_fitness < log[-1].best_fitness - 1e-12:
            raise AssertionError(
                f"elitism violated: best fitness fell from {log[-1].best_fitness} "
                f"to {entry.best_fitness} at generation {generation}"
            )
        log.append(entry)

    return GARunLog(
        config=config,
        generations=tuple(log),
        evaluations_counted=counted,
        evaluations_computed=computed,
    )


# --- persistence ----------------------------------------------------------

GA_SUMMARY_FIELDS = (
    "run_seed",
    "condition",
    "env",
    "final_best_fitness",
    "final_mean_fitness",
    "final_eta",
    "final_lambda",
    "best_neurons",
    "best_connections",
    "convergence_generation",
    "evaluations_counted",
    "evaluations_computed",
)


def write_ga_log(path, log: GARunLog) -> None:
    """One JSON header line, then one generation per line."""
    header = make_header("coevolve", log.config.config_hash(), log.config.run_seed)
    header["condition"] = log.config.condition
    header["env"] = log.config.env
    header["evaluations_counted"] = log.evaluations_counted
    header["evaluations_computed"] = log.evaluations_computed
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for entry in log.generations:
            fh.write(json.dumps(entry.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")


def read_ga_log(path) -> tuple[dict, list[GenerationLog]]:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty GA log")
    header = json.loads(lines[0])
    return header, [GenerationLog.from_dict(json.loads(ln)) for ln in lines[1:]]


def ga_summary_row(log: GARunLog) -> dict:
    """Flat per-run summary row for the cross-run CSV."""
    final = log.final
    converged = log.convergence_generation()
    return {
        "run_seed": log.config.run_seed,
        "condition": log.config.condition,
        "env": log.config.env,
        "final_best_fitness": final.best_fitness,
        "final_mean_fitness": final.mean_fitness,
        "final_eta": "" if final.best_eta is None else final.best_eta,
        "final_lambda": "" if final.best_lambda is None else final.best_lambda,
        "best_neurons": final.best_neurons,
        "best_connections": final.best_connections,
        "convergence_generation": "" if converged is None else converged,
        "evaluations_counted": log.evaluations_counted,
        "evaluations_computed": log.evaluations_computed,
    }
