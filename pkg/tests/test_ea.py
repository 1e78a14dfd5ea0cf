from dataclasses import replace

import numpy as np
import pytest

from conftest import constant_instance, distinct_instance
from nklon.ea import (
    EaConfig,
    _tournament,
    default_budget,
    grid_tune,
    instance_seed,
    run_ea,
    run_seed,
    success_rate,
)
from nklon.errors import ParameterError
from nklon.landscape import ModelSpec, generate_instance, global_max


def test_default_budget():
    assert default_budget(18) == 26215
    assert default_budget(12) == 410
    assert EaConfig(0.1, 0.5).budget(10) == 103
    assert EaConfig(0.1, 0.5, eval_budget=500).budget(10) == 500


def test_constant_landscape_immediate_success():
    inst = constant_instance(6, 2)
    res = run_ea(inst, 0, EaConfig(0.1, 0.5, pop_size=10))
    assert res.success and res.generations == 0 and res.evaluations == 1


def test_no_variation_no_budget_fails():
    inst = distinct_instance(10, 3, 0)
    target = global_max(inst)
    for seed in range(20):
        cfg = EaConfig(0.0, 0.0, pop_size=10, eval_budget=10, seed=seed)
        res = run_ea(inst, target, cfg)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        initial = rng.integers(0, inst.size, size=10, dtype=np.int64)
        if target not in inst.fitness_table[initial]:
            assert not res.success
            assert res.evaluations == 10 and res.generations == 0
            return
    pytest.fail("no seed without the optimum in the initial population")


def test_no_variation_keeps_initial_genotypes():
    inst = distinct_instance(10, 3, 1)
    cfg = EaConfig(0.0, 0.0, pop_size=20, eval_budget=200, seed=4)
    res = run_ea(inst, -1, cfg)
    # without variation the best fitness can never exceed the initial best
    assert not res.success
    assert len(set(res.best_fitness_trace)) == 1


def test_deterministic_and_accounting():
    inst = generate_instance(ModelSpec("NK", 12, 6, None, "random", 3))
    target = global_max(inst)
    for seed in range(10):
        cfg = EaConfig.from_factor(12, 1.0, 0.6, seed=seed)
        a, b = run_ea(inst, target, cfg), run_ea(inst, target, cfg)
        assert a == b
        assert a.evaluations <= cfg.budget(12) + cfg.pop_size
        assert all(x <= y for x, y in zip(a.best_fitness_trace, a.best_fitness_trace[1:]))
        assert a.best_fitness_trace[-1] <= target
        if a.success:
            assert a.best_fitness_trace[-1] == target
        else:
            assert a.evaluations >= cfg.budget(12)


def test_tournament_prefers_fitter():
    rng = np.random.default_rng(0)
    fit = np.array([0, 1, 2, 3])
    wins = np.bincount(_tournament(fit, 40000, 2, rng), minlength=4) / 40000
    # P(win) for rank r of 4 with two draws: (2r + 1) / 16
    assert np.allclose(wins, [1 / 16, 3 / 16, 5 / 16, 7 / 16], atol=0.01)
    ties = np.bincount(_tournament(np.zeros(3), 30000, 2, rng), minlength=3) / 30000
    assert np.allclose(ties, 1 / 3, atol=0.01)


def test_invalid_configs():
    with pytest.raises(ParameterError):
        EaConfig(1.5, 0.0)
    with pytest.raises(ParameterError):
        EaConfig(0.1, -0.2)
    with pytest.raises(ParameterError):
        EaConfig(0.1, 0.2, pop_size=10, eval_budget=5)
    with pytest.raises(ParameterError):
        success_rate(constant_instance(), 0, EaConfig(0.1, 0.1), 0)


def test_seed_streams():
    assert run_seed(1, 0) == run_seed(1, 0)
    assert len({run_seed(1, r) for r in range(100)}) == 100
    assert instance_seed(0, 3) != instance_seed(1, 3)


def test_success_rate_bounds_and_repeatable():
    inst = generate_instance(ModelSpec("NKq", 10, 4, 2, "random", 0))
    cfg = EaConfig.from_factor(10, 1.0, 0.6, seed=7)
    rate = success_rate(inst, global_max(inst), cfg, 20)
    assert 0.0 <= rate <= 1.0
    assert rate == success_rate(inst, global_max(inst), cfg, 20)
    assert success_rate(inst, global_max(inst), replace(cfg, seed=8), 20) >= 0.0


def test_grid_tune_constant_tie_break():
    res = grid_tune("NKp", 1.0, 6, 2, runs=2, n_instances=2)
    assert (res.mutation_factor, res.crossover_rate, res.mean_success) == (0.01, 0.0, 1.0)
    assert len(res.table) == 36 and set(res.table.values()) == {1.0}


def test_grid_tune_reproducible():
    a = grid_tune("NK", None, 8, 4, runs=3, n_instances=2, seed=5)
    b = grid_tune("NK", None, 8, 4, runs=3, n_instances=2, seed=5)
    assert a == b


def test_easier_with_low_epistasis():
    def mean_rate(k):
        rates = []
        for i in range(10):
            inst = generate_instance(ModelSpec("NK", 12, k, None, "random", instance_seed(11, i)))
            rates.append(success_rate(inst, global_max(inst), EaConfig.from_factor(12, 1.0, 0.6, seed=i), 30))
        return np.mean(rates)

    assert mean_rate(2) > mean_rate(10)
