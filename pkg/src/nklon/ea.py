"""Generational EA with elitism, tournament selection, 1-point crossover and
bit-flip mutation, used to measure success rates on enumerated landscapes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError
from .landscape import ModelSpec, NkInstance, generate_instance, global_max

MUTATION_FACTORS = (0.01, 0.1, 0.5, 1.0, 1.5, 2.0)
CROSSOVER_RATES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def default_budget(n: int) -> int:
    """Ten percent of the search space, rounded up (26215 at n=18)."""
    return math.ceil(0.1 * 2**n)


@dataclass(frozen=True)
class EaConfig:
    mutation_rate_per_bit: float
    crossover_rate: float
    pop_size: int = 100
    tournament_size: int = 2
    eval_budget: int | None = None  # None: default_budget(n)
    elitism_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mutation_rate_per_bit <= 1.0:
            raise ParameterError("mutation_rate_per_bit must lie in [0, 1]")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ParameterError("crossover_rate must lie in [0, 1]")
        if self.pop_size < 2:
            raise ParameterError("pop_size must be >= 2")
        if self.tournament_size < 1:
            raise ParameterError("tournament_size must be >= 1")
        if not 0 <= self.elitism_count < self.pop_size:
            raise ParameterError("elitism_count must lie in [0, pop_size)")
        if self.eval_budget is not None and self.eval_budget < self.pop_size:
            raise ParameterError("eval_budget must be >= pop_size")

    @classmethod
    def from_factor(cls, n: int, factor: float, crossover_rate: float, **kw) -> "EaConfig":
        """Config with mutation rate ``factor / n``."""
        return cls(factor / n, crossover_rate, **kw)

    def budget(self, n: int) -> int:
        return default_budget(n) if self.eval_budget is None else self.eval_budget


@dataclass
class EaResult:
    success: bool
    evaluations: int  # evaluations at success, else total spent
    generations: int
    best_fitness_trace: list[int] = field(default_factory=list)


def _tournament(fit: np.ndarray, count: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``count`` tournament winners, contestants drawn with replacement.

    The fittest contestant wins; ties are broken uniformly at random.
    """
    contestants = rng.integers(0, len(fit), size=(count, size))
    cf = fit[contestants]
    best = cf.max(axis=1, keepdims=True)
    noise = rng.random((count, size))
    noise[cf != best] = -1.0
    return contestants[np.arange(count), noise.argmax(axis=1)]


def run_ea(inst: NkInstance, target: int, cfg: EaConfig) -> EaResult:
    """One EA run; success when any individual's fitness numerator equals ``target``."""
    n = inst.n
    table = inst.fitness_table
    budget = cfg.budget(n)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    weights = np.int64(1) << np.arange(n, dtype=np.int64)
    n_children = cfg.pop_size - cfg.elitism_count
    n_pairs = (n_children + 1) // 2

    pop = rng.integers(0, inst.size, size=cfg.pop_size, dtype=np.int64)
    fit = table[pop]
    evals = cfg.pop_size
    trace = [int(fit.max())]
    gen = 0
    while True:
        hit = np.flatnonzero(fit == target)
        if len(hit):
            # elites were checked a generation earlier, so a hit is a fresh child
            fresh = cfg.pop_size if gen == 0 else n_children
            at = evals - fresh + int(hit[0]) - (cfg.pop_size - fresh) + 1
            return EaResult(True, at, gen, trace)
        if evals >= budget:
            return EaResult(False, evals, gen, trace)

        parents = pop[_tournament(fit, 2 * n_pairs, cfg.tournament_size, rng)]
        mums, dads = parents[0::2], parents[1::2]
        cross = rng.random(n_pairs) < cfg.crossover_rate
        points = rng.integers(1, n, size=n_pairs) if n > 1 else np.ones(n_pairs, dtype=np.int64)
        low = (np.int64(1) << points) - 1
        c1 = np.where(cross, (mums & low) | (dads & ~low), mums)
        c2 = np.where(cross, (dads & low) | (mums & ~low), dads)
        children = np.empty(2 * n_pairs, dtype=np.int64)
        children[0::2] = c1
        children[1::2] = c2
        children = children[:n_children]
        flips = rng.random((n_children, n)) < cfg.mutation_rate_per_bit
        children ^= flips.astype(np.int64) @ weights

        elite = np.argsort(-fit, kind="stable")[: cfg.elitism_count]
        pop = np.concatenate([pop[elite], children])
        fit = np.concatenate([fit[elite], table[children]])
        evals += n_children
        gen += 1
        trace.append(int(fit.max()))


def run_seed(base: int, run: int) -> int:
    """Seed of run ``run`` derived from ``base`` by counter."""
    return int(np.random.SeedSequence(base, spawn_key=(run,)).generate_state(2, np.uint32).view(np.uint64)[0])


def success_rate(inst: NkInstance, target: int, cfg: EaConfig, runs: int) -> float:
    if runs < 1:
        raise ParameterError("runs must be >= 1")
    wins = sum(run_ea(inst, target, replace(cfg, seed=run_seed(cfg.seed, r))).success for r in range(runs))
    return wins / runs


def instance_seed(base: int, index: int) -> int:
    """Seed of the ``index``-th landscape of a batch."""
    return int(np.random.SeedSequence(base, spawn_key=(index,)).generate_state(2, np.uint32).view(np.uint64)[0])


@dataclass(frozen=True)
class TuneResult:
    mutation_factor: float
    crossover_rate: float
    mean_success: float
    table: dict  # (factor, crossover) -> mean success rate


def grid_tune(
    model: str,
    param,
    n: int,
    k: int,
    runs: int,
    n_instances: int = 30,
    seed: int = 0,
    neighborhood: str = "random",
    **ea_kw,
) -> TuneResult:
    """Best (mutation factor, crossover rate) pair by mean success over seeded instances.

    Ties go to the lower crossover rate, then the lower mutation factor.
    """
    insts = [
        generate_instance(ModelSpec(model, n, k, param, neighborhood, instance_seed(seed, i)))
        for i in range(n_instances)
    ]
    targets = [global_max(x) for x in insts]
    table = {}
    for c in MUTATION_FACTORS:
        for x in CROSSOVER_RATES:
            cfg = EaConfig.from_factor(n, c, x, seed=seed, **ea_kw)
            rates = [success_rate(inst, t, cfg, runs) for inst, t in zip(insts, targets)]
            table[(c, x)] = float(np.mean(rates))
    best = max(table, key=lambda key: (table[key], -key[1], -key[0]))
    return TuneResult(best[0], best[1], table[best], table)
