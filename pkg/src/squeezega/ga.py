"""Adaptive genetic algorithm over discrete pulse sequences.

An individual is a sequence of ``m`` indices into a table of pulse amplitudes.
Each generation: evaluate, score (performance R, fitness F = R - min R),
copy the elites, and fill the rest by roulette selection, adaptive crossover
and decaying per-gene mutation.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import NoiseParams, SequenceSimulator
from .errors import EvaluationError
from .spin_core import build_spin_operators, coherent_spin_state
from .stats import generation_stats

log = logging.getLogger(__name__)

XI_FLOOR = 1e-12


@dataclass
class Individual:
    genes: np.ndarray
    performance: float | None = None
    fitness: float | None = None
    xi_samples: np.ndarray | None = None
    floored: int = 0

    @property
    def final_xi(self) -> float:
        return float(self.xi_samples[-1])

    def copy(self) -> "Individual":
        return Individual(self.genes.copy(), self.performance, self.fitness,
                          self.xi_samples, self.floored)


@dataclass
class GAConfig:
    population_size: int = 50
    generations: int = 20
    c_s: float = 0.8
    f_h: float = 0.5
    m_s: float = 0.2
    p_final: float = 0.8
    p_process: float = 0.2
    elite_count: int = 2
    levels: tuple = (1.0, 0.0, -1.0)
    m: int = 100
    t_total: float = 2.0
    n_spins: int = 10
    kappa: float = 1.0
    noise: NoiseParams = field(default_factory=NoiseParams)
    seed: int = 42
    substeps: int = 100

    def __post_init__(self):
        self.levels = tuple(float(x) for x in self.levels)
        if isinstance(self.noise, dict):
            self.noise = NoiseParams(**self.noise)
        self.validate()

    def validate(self) -> None:
        problems = []
        if self.population_size < 1:
            problems.append("population_size must be >= 1")
        if self.generations < 1:
            problems.append("generations must be >= 1")
        if not 0 < self.c_s <= 1:
            problems.append("c_s must be in (0, 1]")
        if not self.f_h > 0:
            problems.append("f_h must be > 0")
        if not 0 <= self.m_s <= 1:
            problems.append("m_s must be in [0, 1]")
        if self.p_final < 0 or self.p_process < 0 or abs(self.p_final + self.p_process - 1) > 1e-12:
            problems.append("p_final and p_process must be nonnegative and sum to 1")
        if not 0 <= self.elite_count < self.population_size:
            problems.append("elite_count must satisfy 0 <= elite_count < population_size")
        if len(self.levels) < 1:
            problems.append("levels must not be empty")
        if self.m < 1:
            problems.append("m must be >= 1")
        if not self.t_total > 0:
            problems.append("t_total must be > 0")
        if self.n_spins < 1:
            problems.append("n_spins must be >= 1")
        if self.substeps < 1:
            problems.append("substeps must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))

    def simulator(self) -> SequenceSimulator:
        """Evaluator for this configuration, starting from the x-polarized CSS."""
        ops = build_spin_operators(self.n_spins)
        rho0 = coherent_spin_state(ops, np.pi / 2, 0.0)
        return SequenceSimulator(ops, rho0, self.levels, self.t_total, self.m,
                                 self.kappa, self.noise, self.substeps)


@dataclass
class GenerationRecord:
    index: int
    final_xi: np.ndarray
    performances: np.ndarray
    best_performance: float
    mean_performance: float
    median_performance: float
    best_genes: np.ndarray
    best_xi_samples: np.ndarray
    floored_samples: int = 0

    @property
    def best_final_xi(self) -> float:
        return float(self.best_xi_samples[-1])


@dataclass
class GAResult:
    records: list
    best: Individual


def init_population(config: GAConfig, rng: np.random.Generator) -> list[Individual]:
    genes = rng.integers(0, len(config.levels), size=(config.population_size, config.m))
    return [Individual(g) for g in genes]


def performance(xi_samples, p_final: float, p_process: float) -> float:
    """R = p_final / xi_final + p_process * mean(1 / xi_q) over the interior samples q = 1..m-1.

    ``xi_samples`` holds m+1 values (initial state first). With m = 1 there are
    no interior samples and the final value stands in for the process mean.
    """
    xi = np.maximum(np.asarray(getattr(xi_samples, "xi_z_samples", xi_samples), dtype=float),
                    XI_FLOOR)
    if xi.size < 2:
        raise ValueError("need at least two samples (initial and final)")
    inner = xi[1:-1]
    process = np.mean(1.0 / inner) if inner.size else 1.0 / xi[-1]
    return float(p_final / xi[-1] + p_process * process)


def floored_count(xi_samples) -> int:
    return int(np.count_nonzero(np.asarray(xi_samples) <= XI_FLOOR))


def fitness_assign(population: list[Individual]) -> list[Individual]:
    perf = np.array([ind.performance for ind in population], dtype=float)
    fit = perf - perf.min()
    for ind, f in zip(population, fit):
        ind.fitness = float(f)
    return population


def selection_probabilities(fitness) -> np.ndarray:
    f = np.asarray(fitness, dtype=float)
    total = f.sum()
    if total <= 0:
        return np.full(f.size, 1.0 / f.size)
    return f / total


def select_index(fitness, rng: np.random.Generator) -> int:
    """Roulette wheel; uniform when every fitness is zero."""
    cdf = np.cumsum(selection_probabilities(fitness))
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, len(cdf) - 1)


def select_parent(population: list[Individual], rng: np.random.Generator) -> Individual:
    return population[select_index([ind.fitness for ind in population], rng)]


def crossover_rate(f_i: float, f_j: float, c_s: float, f_h: float) -> float:
    return float(min(max(c_s + (1.0 - c_s) * abs(f_i - f_j) / f_h, c_s), 1.0))


def crossover(parent_i: Individual, parent_j: Individual, f_i: float, f_j: float,
              c_s: float, f_h: float, rng: np.random.Generator) -> Individual:
    """Per locus, take parent_i's gene when U <= c_d, else parent_j's."""
    gi, gj = np.asarray(parent_i.genes), np.asarray(parent_j.genes)
    if gi.shape != gj.shape:
        raise ValueError(f"parents differ in length: {gi.shape} vs {gj.shape}")
    c_d = crossover_rate(f_i, f_j, c_s, f_h)
    u = rng.random(gi.size)
    return Individual(np.where(u <= c_d, gi, gj))


def mutation_rate(g_t: int, g: int, m_s: float) -> float:
    if not 1 <= g_t <= g:
        raise ValueError(f"generation index {g_t} outside 1..{g}")
    return m_s * (1.0 - g_t / g)


def mutate(ind: Individual, g_t: int, g: int, m_s: float, level_count: int,
           rng: np.random.Generator, rate: float | None = None) -> Individual:
    """Resample each gene uniformly over all levels with probability m_d.

    ``rate`` overrides m_d (used by tests to force m_d = 1).
    """
    m_d = mutation_rate(g_t, g, m_s) if rate is None else rate
    genes = np.array(ind.genes)
    hit = rng.random(genes.size) < m_d
    fresh = rng.integers(0, level_count, size=genes.size)
    genes[hit] = fresh[hit]
    return Individual(genes)


def _evaluate_chunk(evaluator, gene_list):
    return [np.asarray(evaluator(g).xi_z_samples) for g in gene_list]


def evaluate_population(population: list[Individual], evaluator: Callable, config: GAConfig,
                        generation: int, workers: int = 1, pool=None) -> None:
    """Simulate every individual lacking a performance score, in place."""
    todo = [i for i, ind in enumerate(population) if ind.performance is None]
    if not todo:
        return
    genes = [population[i].genes for i in todo]
    try:
        if pool is not None and workers > 1:
            chunks = [genes[k::workers] for k in range(workers)]
            parts = list(pool.map(_evaluate_chunk, [evaluator] * workers, chunks))
            results = [None] * len(genes)
            for k, part in enumerate(parts):
                results[k::workers] = part
        else:
            results = _evaluate_chunk(evaluator, genes)
    except Exception as exc:
        # pin the failure on an individual by re-running serially
        for i in todo:
            try:
                evaluator(population[i].genes)
            except Exception as inner:
                raise EvaluationError(generation, i, inner) from inner
        raise EvaluationError(generation, -1, exc) from exc
    for i, xi in zip(todo, results):
        ind = population[i]
        ind.xi_samples = xi
        ind.floored = floored_count(xi)
        ind.performance = performance(xi, config.p_final, config.p_process)


def _record(g_t: int, population: list[Individual]) -> GenerationRecord:
    perf = np.array([ind.performance for ind in population])
    final = np.array([ind.final_xi for ind in population])
    best = population[int(np.argmax(perf))]
    st = generation_stats(perf)
    return GenerationRecord(
        index=g_t,
        final_xi=final,
        performances=perf,
        best_performance=float(perf.max()),
        mean_performance=st.mean,
        median_performance=st.median,
        best_genes=best.genes.copy(),
        best_xi_samples=np.array(best.xi_samples),
        floored_samples=sum(ind.floored for ind in population),
    )


def next_generation(population: list[Individual], config: GAConfig, g_t: int,
                    rng: np.random.Generator) -> list[Individual]:
    perf = np.array([ind.performance for ind in population])
    order = np.argsort(-perf, kind="stable")
    new = [population[i].copy() for i in order[:config.elite_count]]
    fitness = np.array([ind.fitness for ind in population])
    while len(new) < config.population_size:
        a = select_index(fitness, rng)
        b = select_index(fitness, rng)
        child = crossover(population[a], population[b], fitness[a], fitness[b],
                          config.c_s, config.f_h, rng)
        child = mutate(child, g_t, config.generations, config.m_s, len(config.levels), rng)
        new.append(child)
    return new


def run_ga(config: GAConfig, evaluator: Callable | None = None,
           rng: np.random.Generator | None = None, workers: int = 1,
           on_generation: Callable[[GenerationRecord], None] | None = None) -> GAResult:
    """Evolve ``config.generations`` generations; returns per-generation records and the best individual.

    ``evaluator`` maps a gene sequence to a Trajectory (defaults to the
    configured open-system simulator). Results depend only on the seed, not
    on ``workers``: evaluation is deterministic and never touches ``rng``.
    """
    config.validate()
    evaluator = config.simulator() if evaluator is None else evaluator
    rng = np.random.default_rng(config.seed) if rng is None else rng
    population = init_population(config, rng)
    records = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for g_t in range(1, config.generations + 1):
            evaluate_population(population, evaluator, config, g_t, workers, pool)
            fitness_assign(population)
            rec = _record(g_t, population)
            records.append(rec)
            if rec.floored_samples:
                log.warning("generation %d: %d xi samples hit the reward floor",
                            g_t, rec.floored_samples)
            if on_generation is not None:
                on_generation(rec)
            if g_t < config.generations:
                population = next_generation(population, config, g_t, rng)
    finally:
        if pool is not None:
            pool.shutdown()
    best = population[int(np.argmax([ind.performance for ind in population]))].copy()
    if config.elite_count == 0:
        # without elitism the last population may have lost the best sequence
        top = max(records, key=lambda r: r.best_performance)
        best = Individual(top.best_genes.copy(), top.best_performance, None,
                          top.best_xi_samples)
    return GAResult(records, best)


def exhaustive_search(evaluator: Callable, m: int, level_count: int, p_final: float,
                      p_process: float) -> tuple[np.ndarray, float]:
    """Best sequence and performance over all level_count**m sequences."""
    best_r, best_g = -np.inf, None
    for flat in range(level_count ** m):
        genes = np.array(np.unravel_index(flat, (level_count,) * m))
        r = performance(evaluator(genes).xi_z_samples, p_final, p_process)
        if r > best_r:
            best_r, best_g = r, genes
    return best_g, float(best_r)


def sequence_from_genes(genes: Sequence[int], levels: Sequence[float]) -> np.ndarray:
    return np.asarray(levels, dtype=float)[np.asarray(genes, dtype=int)]
