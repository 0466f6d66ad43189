import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from squeezega.dynamics import Trajectory
from squeezega.errors import EvaluationError
from squeezega.ga import (
    GAConfig,
    Individual,
    crossover,
    crossover_rate,
    exhaustive_search,
    fitness_assign,
    init_population,
    mutate,
    mutation_rate,
    performance,
    run_ga,
    select_index,
    select_parent,
    selection_probabilities,
)


def small_config(**kw):
    base = dict(population_size=12, generations=6, m=6, n_spins=3, substeps=20, seed=7)
    base.update(kw)
    return GAConfig(**base)


def with_fitness(values):
    return [Individual(np.array([i]), fitness=f) for i, f in enumerate(values)]


@pytest.mark.parametrize("kw", [
    dict(c_s=0.0), dict(c_s=1.2), dict(f_h=0.0), dict(m_s=1.5),
    dict(p_final=0.7, p_process=0.2), dict(elite_count=50), dict(levels=()),
    dict(generations=0), dict(m=0),
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        GAConfig(**kw)


def test_config_defaults():
    c = GAConfig()
    assert (c.c_s, c.f_h, c.m_s, c.p_final, c.p_process) == (0.8, 0.5, 0.2, 0.8, 0.2)
    assert c.levels == (1.0, 0.0, -1.0) and c.m == 100 and c.t_total == 2.0
    assert (c.noise.gamma, c.noise.gamma_z, c.noise.n_th) == (1e-3, 1e-3, 0.0)


def test_init_single_individual():
    pop = init_population(GAConfig(population_size=1, m=1, elite_count=0),
                          np.random.default_rng(0))
    assert len(pop) == 1 and pop[0].genes.shape == (1,) and pop[0].genes[0] in (0, 1, 2)


def test_init_deterministic():
    c = GAConfig()
    a = init_population(c, np.random.default_rng(3))
    b = init_population(c, np.random.default_rng(3))
    assert all(np.array_equal(x.genes, y.genes) for x, y in zip(a, b))


def test_init_uniform_levels():
    pop = init_population(GAConfig(population_size=1000, m=100), np.random.default_rng(11))
    genes = np.concatenate([p.genes for p in pop])
    freq = np.bincount(genes, minlength=3) / genes.size
    assert np.all(np.abs(freq - 1 / 3) < 0.02)


def test_performance_examples():
    assert performance(np.ones(11), 0.8, 0.2) == pytest.approx(1.0)
    xi = np.ones(11)
    xi[-1] = 0.5
    assert performance(xi, 0.8, 0.2) == pytest.approx(1.8)
    # m = 2: the process mean is just the sample after the first pulse
    assert performance([1.0, 0.25, 0.5], 0.8, 0.2) == pytest.approx(0.8 * 2 + 0.2 * 4)
    # the initial sample never enters
    assert performance([1e-3, 1.0, 1.0], 0.8, 0.2) == pytest.approx(1.0)


def test_performance_single_segment_and_floor():
    assert performance([1.0, 0.5], 0.8, 0.2) == pytest.approx(2.0)
    assert np.isfinite(performance([1.0, 0.0, 1.0], 0.8, 0.2))
    assert performance([1.0, 0.0, 1.0], 0.8, 0.2) == pytest.approx(0.8 + 0.2e12)
    traj = Trajectory(np.arange(3), np.array([1.0, 0.5, 0.5]))
    assert performance(traj, 0.8, 0.2) == pytest.approx(2.0)


@pytest.mark.parametrize("perf,expected", [
    ([1, 2, 3], [0, 1, 2]), ([2, 2, 2], [0, 0, 0]), ([5], [0]),
])
def test_fitness_assign(perf, expected):
    pop = [Individual(np.zeros(1), performance=p) for p in perf]
    fitness_assign(pop)
    assert [ind.fitness for ind in pop] == expected


def test_select_zero_fitness_never_picked():
    rng = np.random.default_rng(0)
    pop = with_fitness([0.0, 1.0])
    assert all(select_parent(pop, rng) is pop[1] for _ in range(2000))


@pytest.mark.parametrize("fitness", [[1.0, 1.0], [0.0, 0.0]])
def test_select_even_split(fitness):
    rng = np.random.default_rng(1)
    counts = np.bincount([select_index(fitness, rng) for _ in range(10_000)], minlength=2)
    assert np.all(np.abs(counts / 10_000 - 0.5) < 0.02)


def test_selection_frequencies_within_three_sigma():
    rng = np.random.default_rng(5)
    fitness = rng.random(8) * 3
    fitness[2] = 0.0
    p = selection_probabilities(fitness)
    draws = 10_000
    counts = np.bincount([select_index(fitness, rng) for _ in range(draws)], minlength=8)
    sigma = np.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) <= 3 * sigma + 1e-12)


def test_crossover_rate_examples():
    assert crossover_rate(0.3, 0.3, 0.8, 0.5) == pytest.approx(0.8)
    assert crossover_rate(0.0, 0.5, 0.8, 0.5) == pytest.approx(1.0)
    assert crossover_rate(0.0, 5.0, 0.8, 0.5) == 1.0


@settings(max_examples=200)
@given(fi=st.floats(0, 100), fj=st.floats(0, 100), cs=st.floats(0.01, 1), fh=st.floats(1e-3, 10))
def test_crossover_rate_bounds(fi, fj, cs, fh):
    assert cs <= crossover_rate(fi, fj, cs, fh) <= 1.0


def test_crossover_full_rate_copies_first_parent():
    rng = np.random.default_rng(2)
    a, b = Individual(np.zeros(50, int)), Individual(np.ones(50, int))
    child = crossover(a, b, 0.0, 0.5, 0.8, 0.5, rng)
    assert np.array_equal(child.genes, a.genes)


def test_crossover_identical_parents():
    rng = np.random.default_rng(2)
    g = np.array([2, 0, 1, 1, 0])
    child = crossover(Individual(g), Individual(g.copy()), 0.1, 0.9, 0.8, 0.5, rng)
    assert np.array_equal(child.genes, g)


def test_crossover_donor_fraction_and_closure():
    rng = np.random.default_rng(4)
    n = 100_000
    a = Individual(rng.integers(0, 9, n))
    b = Individual(rng.integers(0, 9, n))
    child = crossover(a, b, 0.0, 0.0, 0.8, 0.5, rng)
    assert np.all((child.genes == a.genes) | (child.genes == b.genes))
    differ = a.genes != b.genes
    from_a = np.mean(child.genes[differ] == a.genes[differ])
    assert from_a == pytest.approx(0.8, abs=0.01)


def test_crossover_length_mismatch():
    with pytest.raises(ValueError):
        crossover(Individual(np.zeros(3, int)), Individual(np.zeros(4, int)), 0, 0, 0.8, 0.5,
                  np.random.default_rng(0))


def test_mutation_rate_schedule():
    assert mutation_rate(20, 20, 0.2) == 0.0
    assert mutation_rate(1, 20, 0.2) == pytest.approx(0.19)
    rates = [mutation_rate(g, 20, 0.2) for g in range(1, 21)]
    assert all(x > y for x, y in zip(rates, rates[1:]))
    with pytest.raises(ValueError):
        mutation_rate(0, 20, 0.2)


def test_mutation_final_generation_is_identity():
    rng = np.random.default_rng(0)
    ind = Individual(rng.integers(0, 3, 100))
    assert np.array_equal(mutate(ind, 20, 20, 0.2, 3, rng).genes, ind.genes)


def test_forced_mutation_is_uniform():
    rng = np.random.default_rng(9)
    ind = Individual(np.zeros(10_000, int))
    out = mutate(ind, 1, 20, 0.2, 5, rng, rate=1.0)
    freq = np.bincount(out.genes, minlength=5) / out.genes.size
    assert np.all(np.abs(freq - 0.2) < 0.02)
    assert np.all(ind.genes == 0)  # input untouched


def test_mutation_probability():
    rng = np.random.default_rng(10)
    ind = Individual(np.zeros(100_000, int))
    out = mutate(ind, 1, 20, 0.2, 3, rng)
    # resampling keeps the old level a third of the time
    assert np.mean(out.genes != 0) == pytest.approx(0.19 * 2 / 3, abs=0.005)


def test_single_generation_run():
    cfg = small_config(generations=1)
    res = run_ga(cfg)
    assert len(res.records) == 1
    rec = res.records[0]
    assert rec.final_xi.shape == (cfg.population_size,)
    assert rec.best_performance == pytest.approx(res.best.performance)


def test_elitism_monotone_and_record_shapes():
    cfg = small_config(generations=10)
    res = run_ga(cfg)
    best = [r.best_performance for r in res.records]
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))
    for r in res.records:
        assert len(r.final_xi) == len(r.performances) == cfg.population_size
        assert r.mean_performance <= r.best_performance
    assert np.array_equal(res.best.genes, res.records[-1].best_genes)


def test_elites_not_resimulated():
    cfg = small_config(generations=3, population_size=6, elite_count=2)
    calls = []
    sim = cfg.simulator()

    def counting(genes):
        calls.append(1)
        return sim(genes)

    run_ga(cfg, counting)
    assert len(calls) == 6 + 4 + 4


def test_run_deterministic_across_workers():
    cfg = small_config(generations=4)
    serial = run_ga(cfg, workers=1)
    again = run_ga(cfg, workers=1)
    pooled = run_ga(cfg, workers=2)
    for a, b, c in zip(serial.records, again.records, pooled.records):
        assert np.array_equal(a.performances, b.performances)
        assert np.array_equal(a.performances, c.performances)
        assert np.array_equal(a.best_genes, c.best_genes)


def test_evaluation_error_carries_generation():
    cfg = small_config(generations=3, population_size=4, elite_count=1)
    sim = cfg.simulator()
    seen = []

    def flaky(genes):
        seen.append(1)
        if len(seen) > 6:
            raise RuntimeError("boom")
        return sim(genes)

    with pytest.raises(EvaluationError) as info:
        run_ga(cfg, flaky)
    assert info.value.generation == 2


def test_ga_finds_exhaustive_optimum_small():
    cfg = small_config(m=3, population_size=10, generations=15, elite_count=2)
    sim = cfg.simulator()
    _, best_r = exhaustive_search(sim, cfg.m, len(cfg.levels), cfg.p_final, cfg.p_process)
    res = run_ga(cfg, sim)
    assert res.best.performance == pytest.approx(best_r, abs=1e-6)
