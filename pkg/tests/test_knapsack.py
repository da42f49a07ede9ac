"""Branch-and-bound knapsack: generator, bounds, and three-way solver
agreement (subset brute force vs dynamic program vs best-first search)."""

import pytest

from multiqueue.mq import Config
from multiqueue.workloads.knapsack import (
    KnapsackInstance,
    generate_knapsack,
    greedy_bounds,
    knapsack_dp,
    run_knapsack,
    sequential_knapsack,
)


def brute_force(inst: KnapsackInstance) -> int:
    best = 0
    n = inst.items
    for mask in range(1 << n):
        weight = value = 0
        for i in range(n):
            if mask >> i & 1:
                weight += inst.weights[i]
                value += inst.values[i]
        if weight <= inst.capacity and value > best:
            best = value
    return best


# --------------------------------------------------------------- generator

def test_generate_is_deterministic():
    a = generate_knapsack(50, 100, 1.2, 0.5, seed=4)
    b = generate_knapsack(50, 100, 1.2, 0.5, seed=4)
    assert a == b
    assert a != generate_knapsack(50, 100, 1.2, 0.5, seed=5)


def test_generate_shape_and_ordering():
    inst = generate_knapsack(200, 100, 1.3, 0.4, seed=1)
    assert inst.items == 200
    assert all(1 <= w <= 100 for w in inst.weights)
    # value = weight + surplus drawn from [W/10, 1.3 * W/10]
    assert all(10 <= v - w <= 13 for w, v in zip(inst.weights, inst.values))
    dens = [v / w for w, v in zip(inst.weights, inst.values)]
    assert all(dens[i] >= dens[i + 1] for i in range(len(dens) - 1))
    assert inst.capacity == int(0.4 * sum(inst.weights))


@pytest.mark.parametrize("kwargs,msg", [
    (dict(items=0, max_weight=100, surplus_factor=1.2, capacity_fraction=0.5),
     "at least one item"),
    (dict(items=5, max_weight=9, surplus_factor=1.2, capacity_fraction=0.5),
     "max weight"),
    (dict(items=5, max_weight=100, surplus_factor=0.9, capacity_fraction=0.5),
     "surplus factor"),
    (dict(items=5, max_weight=100, surplus_factor=1.2, capacity_fraction=0.0),
     "capacity fraction"),
    (dict(items=5, max_weight=100, surplus_factor=1.2, capacity_fraction=1.5),
     "capacity fraction"),
])
def test_generate_validation(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        generate_knapsack(**kwargs, seed=1)


# ------------------------------------------------------------------ bounds

DENSE = KnapsackInstance(weights=(2, 3, 5), values=(6, 6, 5), capacity=6)


def test_greedy_bounds_fractional_tail():
    # take items 0 and 1 whole (weight 5), 1 unit of item 2 fits fractionally
    assert greedy_bounds(DENSE, 0, 0, 0) == (12, 13)


def test_greedy_bounds_exact_fill():
    inst = KnapsackInstance(weights=(2, 3, 5), values=(6, 6, 5), capacity=5)
    assert greedy_bounds(inst, 0, 0, 0) == (12, 12)


def test_greedy_bounds_everything_fits():
    assert greedy_bounds(DENSE, 0, 0, 2) == (5, 5)  # item 2 fits whole
    inst = KnapsackInstance(weights=(1, 1), values=(4, 3), capacity=10)
    assert greedy_bounds(inst, 0, 0, 0) == (7, 7)


def test_greedy_bounds_respects_partial_state():
    # index 1, already carrying weight 4: remaining 2 fits item 1? no (w=3);
    # fractional share of item 1 = (2 * 6) // 3 = 4
    assert greedy_bounds(DENSE, 6, 4, 1) == (6, 10)


def test_greedy_bounds_nothing_left():
    assert greedy_bounds(DENSE, 9, 6, 3) == (9, 9)


# ----------------------------------------------------------------- solvers

@pytest.mark.parametrize("seed", range(8))
def test_small_instances_brute_force_agreement(seed):
    inst = generate_knapsack(13, 40, 1.5, 0.45, seed=seed)
    want = brute_force(inst)
    assert knapsack_dp(inst) == want
    best, processed = sequential_knapsack(inst)
    assert best == want and processed >= 0
    res = run_knapsack(inst, Config(threads=2, seed=seed))
    assert res.best_value == want


@pytest.mark.parametrize("seed", [1, 2, 3])
@pytest.mark.parametrize("threads", [1, 2, 4])
def test_medium_instances_match_dp(seed, threads):
    inst = generate_knapsack(60, 100, 1.2, 0.5, seed=seed)
    want = knapsack_dp(inst)
    best, nodes = sequential_knapsack(inst, node_limit=500_000)
    assert best == want
    cfg = Config(threads=threads, stickiness="simple", period=16, seed=seed)
    res = run_knapsack(inst, cfg)
    assert res.best_value == want
    assert res.processed >= 0 and isinstance(res.stats, dict)


def test_parallel_with_swap_stickiness():
    inst = generate_knapsack(80, 100, 1.15, 0.5, seed=9)
    cfg = Config(threads=4, stickiness="swap", period=64, seed=9)
    assert run_knapsack(inst, cfg).best_value == knapsack_dp(inst)


def test_root_solved_by_greedy_alone():
    # everything fits: the root's bounds close immediately, no node queued
    inst = KnapsackInstance(weights=(1, 2, 3), values=(9, 9, 9), capacity=99)
    best, nodes = sequential_knapsack(inst)
    assert (best, nodes) == (27, 0)
    res = run_knapsack(inst, Config(threads=2))
    assert res.best_value == 27 and res.processed == 0


def test_node_limit_enforced():
    inst = generate_knapsack(60, 100, 1.2, 0.5, seed=1)
    with pytest.raises(RuntimeError, match="node limit 1 exceeded"):
        sequential_knapsack(inst, node_limit=1)


def test_processed_node_accounting():
    inst = generate_knapsack(40, 60, 1.3, 0.5, seed=6)
    want = knapsack_dp(inst)
    _, seq_nodes = sequential_knapsack(inst)
    res = run_knapsack(inst, Config(threads=1, seed=6))
    assert res.best_value == want
    # single thread, but relaxed ordering may waste some expansions
    assert res.processed >= 1
