import numpy as np
import pytest

from conftest import constant_instance, distinct_instance, make_instance
from nklon.basins import (
    climb_moves,
    exact_basin_distributions,
    hill_climb,
    monte_carlo_basins,
    start_rng,
)
from nklon.errors import DivergenceError, ParameterError
from nklon.landscape import ModelSpec, generate_instance, neighbors
from nklon.neutrality import neutral_partition

# NKq(n=4, k=1, q=2): two LONNs, four genotypes split evenly between them
SMALL_TABLES = [[0, 1, 1, 1], [0, 1, 0, 1], [1, 0, 0, 1], [1, 1, 1, 0]]
SMALL_LINKS = [[1], [2], [3], [0]]
SMALL_P0 = [1, 1, 1, 1, 0.5, 1, 0.5, 1, 0.5, 1, 0.5, 1, 0, 0, 0, 0]


def small():
    inst = make_instance(SMALL_TABLES, SMALL_LINKS)
    return inst, neutral_partition(inst)


def absorbing_limit(inst, part):
    """Basin probabilities by squaring the climb's transition matrix."""
    f = inst.fitness_table
    lonn_of = part.lonn_of
    t = np.zeros((inst.size, inst.size))
    for s in range(inst.size):
        if lonn_of[s] >= 0:
            t[s, s] = 1.0
            continue
        nbrs = neighbors(s, inst.n)
        top = max(f[h] for h in nbrs)
        cands = [h for h in nbrs if f[h] == top]
        for h in cands:
            t[s, h] += 1.0 / len(cands)
    for _ in range(40):
        t = t @ t
    out = np.zeros((inst.size, part.n_lonn))
    for s in range(inst.size):
        if lonn_of[s] >= 0:
            out[:, lonn_of[s]] += t[:, s]
    return out


def test_small_instance_frozen():
    inst, part = small()
    dist = exact_basin_distributions(inst, part)
    assert part.n_lonn == 2
    assert np.allclose(dist.probs.toarray()[:, 0], SMALL_P0, atol=1e-15)
    assert dist.basin_size.tolist() == [10.0, 6.0]


def test_small_instance_against_scalar_climbs():
    inst, part = small()
    exact = exact_basin_distributions(inst, part).probs.toarray()
    rng = np.random.default_rng(2024)
    trials = 20000
    for s in (4, 6, 8, 10):
        hits = sum(hill_climb(inst, part, s, rng) == 0 for _ in range(trials))
        se = np.sqrt(exact[s, 0] * (1 - exact[s, 0]) / trials)
        assert abs(hits / trials - exact[s, 0]) < 3 * se


@pytest.mark.parametrize("model,param,k,seed", [
    ("NKq", 2, 2, 0), ("NKq", 2, 4, 3), ("NKp", 0.8, 3, 1), ("NKp", 0.9, 1, 6), ("NK", None, 4, 2),
])
def test_exact_matches_absorbing_limit(model, param, k, seed):
    inst = generate_instance(ModelSpec(model, 8, k, param, "random", seed))
    part = neutral_partition(inst)
    dist = exact_basin_distributions(inst, part)
    assert np.abs(dist.probs.toarray() - absorbing_limit(inst, part)).max() < 1e-9


def test_constant_landscape():
    inst = constant_instance(6, 2)
    dist = exact_basin_distributions(inst, neutral_partition(inst))
    assert dist.probs.shape == (64, 1)
    assert dist.basin_size.tolist() == [64.0]


def test_distinct_landscape_is_deterministic_partition():
    inst = distinct_instance(8, 4, 5)
    part = neutral_partition(inst)
    probs = exact_basin_distributions(inst, part).probs.toarray()
    assert set(np.unique(probs)) <= {0.0, 1.0}
    assert np.all(probs.sum(axis=1) == 1.0)
    # with distinct values, one climb per start is already exact
    mc = monte_carlo_basins(inst, part, 1, seed=9).probs.toarray()
    assert np.array_equal(mc, probs)


@pytest.mark.parametrize("seed", [0, 1])
def test_conservation(seed):
    inst = generate_instance(ModelSpec("NKq", 10, 3, 2, "random", seed))
    part = neutral_partition(inst)
    dist = exact_basin_distributions(inst, part)
    assert np.abs(dist.row_sums() - 1.0).max() < 1e-12
    assert abs(dist.basin_size.sum() - inst.size) < 1e-8
    assert dist.probs.min() >= -1e-12
    lonn_of = part.lonn_of
    for s in np.flatnonzero(lonn_of >= 0)[:50]:
        assert dist.row(int(s)) == {int(lonn_of[s]): 1.0}


def test_exact_on_large_plateau_uses_sparse_path():
    # p=0.95 gives plateaus well beyond the dense limit at n=12
    inst = generate_instance(ModelSpec("NKp", 12, 2, 0.95, "random", 0))
    part = neutral_partition(inst)
    assert part.nn_size.max() > 512
    dist = exact_basin_distributions(inst, part)
    assert np.abs(dist.row_sums() - 1.0).max() < 1e-12


def test_monte_carlo_agreement():
    inst = generate_instance(ModelSpec("NKq", 10, 4, 2, "random", 1))
    part = neutral_partition(inst)
    exact = exact_basin_distributions(inst, part).probs.toarray()
    mc = monte_carlo_basins(inst, part, 10000, seed=0).probs.toarray()
    assert np.abs(mc - exact).max() < 0.02


def test_monte_carlo_unbiased_over_seeds():
    inst = generate_instance(ModelSpec("NKq", 8, 2, 2, "random", 4))
    part = neutral_partition(inst)
    exact = exact_basin_distributions(inst, part).probs.toarray()
    mean = np.mean([monte_carlo_basins(inst, part, 200, seed=s).probs.toarray() for s in range(20)], axis=0)
    p = exact.clip(0.0, 1.0)
    se = np.sqrt(p * (1 - p) / 4000)
    assert np.all(np.abs(mean - exact) <= 5 * se + 1e-12)


def test_monte_carlo_reproducible():
    inst, part = small()
    a = monte_carlo_basins(inst, part, 50, seed=3).probs.toarray()
    b = monte_carlo_basins(inst, part, 50, seed=3).probs.toarray()
    assert np.array_equal(a, b)
    assert start_rng(3, 4).random() == start_rng(3, 4).random()
    assert start_rng(3, 4).random() != start_rng(3, 5).random()


def test_climb_moves_ascending_bits():
    inst = constant_instance(4, 1)
    moves, counts = climb_moves(inst)
    assert counts.tolist() == [4] * 16
    assert moves[0].tolist() == [1, 2, 4, 8]


def test_divergence_guard():
    inst, part = small()
    with pytest.raises(DivergenceError):
        for seed in range(200):
            monte_carlo_basins(inst, part, 100, seed=seed, max_steps=0)
    with pytest.raises(ParameterError):
        monte_carlo_basins(inst, part, 0, seed=0)
    with pytest.raises(ParameterError):
        hill_climb(inst, part, 99, np.random.default_rng())
