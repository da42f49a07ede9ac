"""Full-size acceptance gate.

Each test re-runs one headline experiment at full size and prints a single
``ACCEPTANCE <name>: PASS/FAIL (<detail>)`` line so the whole gate can be
audited from plain pytest output. Wall-clock targets are reported in the
detail text but not asserted; they depend on the host.

This module is deliberately slow (tens of minutes). The fast equivalents
with miniature sizes live in the per-module test files.
"""

from __future__ import annotations

import itertools
import os
import random
import threading
import time
from pathlib import Path

import numpy as np
import pytest

from multiqueue import (
    Config,
    EMPTY_KEY,
    MultiQueue,
    PRESETS,
    config_with,
    preset_config,
)
from multiqueue.analysis import RankErrorModel, ks_distance
from multiqueue.mq import PermutationArray
from multiqueue.replay import DELETE_FAILED, DELETE_SUCCESS, INSERT, replay, replay_naive
from multiqueue.rng import SplitMix64, stream_seed
from multiqueue.termination import (
    CountingState,
    TerminationState,
    process_until_empty,
    process_until_empty_counting,
)
from multiqueue.workloads.graphs import parse_dimacs_gr, random_graph
from multiqueue.workloads.knapsack import (
    generate_knapsack,
    knapsack_dp,
    run_knapsack,
    sequential_knapsack,
)
from multiqueue.workloads.runner import run_workers
from multiqueue.workloads.simulator import run_sequential_simulator
from multiqueue.workloads.sssp import UNREACHED, run_sssp, sequential_sssp
from multiqueue.workloads.stress import (
    drain_parallel,
    run_stress_insert_delete,
    run_stress_monotonic,
)

PRESET_NAMES = sorted(PRESETS)

# Long-horizon d=1 comparison; the prefill gap widens with the horizon, but
# slowly: measured at seed 21 the final-window ratio is ~1.4 at 6M, ~1.85 at
# 30M, and plateaus near 1.9 by 40M. 30M keeps the gate under half an hour
# while getting within wobble of the plateau.
D1_ITERATIONS = 30_000_000
D2_ITERATIONS = 3_000_000
WINDOW = 1_000_000

WARMUP = 100_000
MEASURE = 1_000_000


def _verdict(capsys, name: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})",
              flush=True)
    assert ok, f"ACCEPTANCE {name}: {detail}"


# ---------------------------------------------------------------- quality --

@pytest.fixture(scope="module")
def two_choice_run():
    """256 queues, d=2, prefill 2^20; 10^6 measured deletions after warmup."""
    t0 = time.monotonic()
    res = run_sequential_simulator(256, 2, 1 << 20, WARMUP + MEASURE, seed=42)
    elapsed = time.monotonic() - t0
    ranks = np.asarray(res.rank_errors[WARMUP:], dtype=np.int64)
    return ranks, elapsed


def test_two_choice_long_run_mean(two_choice_run, capsys):
    ranks, elapsed = two_choice_run
    model = RankErrorModel.from_queue_count(256, 2)
    predicted = model.long_run_mean_two_choice()
    mean = float(ranks.mean())
    off = abs(mean - predicted) / predicted
    _verdict(capsys, "two-choice-mean", off <= 0.10,
             f"measured {mean:.2f} vs predicted {predicted:.2f}, off {off:.2%} "
             f"(tolerance 10%), {elapsed:.0f}s vs 60s target")


def _tail_ratios(ranks: np.ndarray, s: float, upto: int) -> np.ndarray:
    """max(emp/model, model/emp) for P(R >= i) on i in [0, upto]."""
    grid = np.arange(upto + 1)
    surv = 1.0 - np.searchsorted(np.sort(ranks), grid, side="left") / ranks.size
    model = (1.0 - s) ** grid
    return np.maximum(surv / model, model / surv)


def test_geometric_tail_bound(two_choice_run, capsys):
    ranks, _ = two_choice_run
    model = RankErrorModel.from_queue_count(256, 2)
    q99 = int(np.quantile(ranks, 0.99, method="inverted_cdf"))
    ratios = _tail_ratios(ranks, model.hit_probability, q99)
    worst = float(ratios.max())
    at = int(ratios.argmax())
    _verdict(capsys, "geometric-tail", worst <= 2.0,
             f"max tail ratio {worst:.2f} at i={at}, empirical q99 {q99} "
             f"(bound 2.0 up to q99)")


def test_geometric_tail_shape(two_choice_run):
    """Companion shape check: the geometric model matches to a factor of two
    through the lower half of the distribution (measured max ratio ~1.79 at
    the median, crossing 2.0 near the 58th percentile), and the predicted
    q99 index is within a factor of two of the empirical one (~1.39x).
    Further out the empirical tail is heavier than (1-s)^i (ratio ~2.7 at
    q75, ~6 at q99) because the stationary process is not uniform-random
    assignment, so the literal factor-2 probability bound at q99 does not
    hold; this test pins the part that does.
    """
    ranks, _ = two_choice_run
    model = RankErrorModel.from_queue_count(256, 2)
    s = model.hit_probability
    q50 = int(np.quantile(ranks, 0.50, method="inverted_cdf"))
    ratios = _tail_ratios(ranks, s, q50)
    assert float(ratios.max()) <= 2.0
    q99 = int(np.quantile(ranks, 0.99, method="inverted_cdf"))
    model_q99 = np.log(0.01) / np.log(1.0 - s)
    assert 0.5 <= q99 / model_q99 <= 2.0


def _window_means(queues, candidates, prefill, iterations, seed):
    res = run_sequential_simulator(queues, candidates, prefill, iterations,
                                   seed=seed)
    r = res.rank_errors
    return [float(np.asarray(r[i:i + WINDOW], dtype=np.int64).mean())
            for i in range(0, iterations, WINDOW)]


@pytest.fixture(scope="module")
def prefill_runs():
    t0 = time.monotonic()
    runs = {
        (1, 16): _window_means(256, 1, 1 << 16, D1_ITERATIONS, 21),
        (1, 20): _window_means(256, 1, 1 << 20, D1_ITERATIONS, 21),
        (2, 16): _window_means(256, 2, 1 << 16, D2_ITERATIONS, 21),
        (2, 20): _window_means(256, 2, 1 << 20, D2_ITERATIONS, 21),
    }
    return runs, time.monotonic() - t0


def test_prefill_divergence(prefill_runs, capsys):
    runs, elapsed = prefill_runs
    d1_small, d1_big = runs[1, 16][-1], runs[1, 20][-1]
    d2_small, d2_big = runs[2, 16][-1], runs[2, 20][-1]
    ratio = d1_big / d1_small
    gap = abs(d2_big - d2_small) / d2_small
    _verdict(capsys, "prefill-divergence", ratio >= 2.0 and gap <= 0.15,
             f"d=1 final-window means {d1_small:.0f} (2^16) vs {d1_big:.0f} "
             f"(2^20), ratio {ratio:.2f} (need >= 2); d=2 gap {gap:.1%} "
             f"(need <= 15%); {elapsed:.0f}s vs 120s target")


def test_prefill_divergence_shape(prefill_runs):
    """Companion shape check: with d=1 the rank error depends on the prefill
    and keeps rising long after warm-up, while d=2 is stable and
    prefill-independent. The literal 2x final-window separation needs a far
    longer horizon than this interpreter can run (the ratio measured here
    plateaus near 1.9 at 30M iterations); this test pins the divergence
    itself rather than its asymptotic size.
    """
    runs, _ = prefill_runs
    d1_small, d1_big = runs[1, 16], runs[1, 20]
    # Prefill-dependence: clearly separated final windows, big prefill worse.
    assert d1_big[-1] / d1_small[-1] >= 1.5
    # Still drifting upward at both prefills: no early saturation to a
    # queue-count-sized error the way d=2 settles.
    assert d1_big[-1] > 3.0 * d1_big[0]
    assert d1_small[-1] > 2.0 * d1_small[0]
    # d=2 settles fast: every window past the first sits within 15% of the
    # final one, at both prefills.
    for series in (runs[2, 16], runs[2, 20]):
        final = series[-1]
        assert all(abs(w - final) / final <= 0.15 for w in series[1:])
    # And d=1 error dwarfs d=2 at the same prefill.
    assert d1_small[-1] > 20 * runs[2, 16][-1]


@pytest.fixture(scope="module")
def duality_report():
    """cp=64, 10^6 iterations, logged and fully drained, then replayed."""
    t0 = time.monotonic()
    res = run_sequential_simulator(64, 2, 1 << 17, 1_000_000, seed=31,
                                   log=True, drain=True)
    report = replay(res.records)
    return report, time.monotonic() - t0


def test_delay_rank_duality(duality_report, capsys):
    report, elapsed = duality_report
    total_r = int(report.rank_errors.sum())
    total_d = int(report.delays.sum())
    ks = ks_distance(report.rank_errors, report.delays)
    ok = report.final_alive == 0 and total_r == total_d and ks < 0.05
    _verdict(capsys, "delay-rank-duality", ok,
             f"drained: sum ranks {total_r} == sum delays {total_d} "
             f"({total_r == total_d}), KS {ks:.4f} (need < 0.05), "
             f"{elapsed:.0f}s")


def test_delay_rank_duality_shape(duality_report):
    """Companion shape check: the sums agree exactly (hence the means do),
    the mass at zero matches closely, and the two distributions track each
    other to KS < 0.12. They are not identical at finite size: a passed-over
    minimum keeps accumulating delay while it stays in the queue, so the
    delay distribution ends up slightly more dispersed than the rank errors,
    which keeps the KS distance above 0.05.
    """
    report, _ = duality_report
    ranks, delays = report.rank_errors, report.delays
    assert int(ranks.sum()) == int(delays.sum())
    assert ranks.size == delays.size
    p0_r = float((ranks == 0).mean())
    p0_d = float((delays == 0).mean())
    assert abs(p0_r - p0_d) <= 0.1 * p0_r
    assert ks_distance(ranks, delays) < 0.12
    assert float(delays.std()) > float(ranks.std())


# ----------------------------------------------------------------- replay --

def _random_history(rng, ops, key_range=1 << 20, fail_rate=0.04):
    records = []
    alive = []
    ts = 0
    serial = 0
    for _ in range(ops):
        ts += rng.randrange(3)
        roll = rng.random()
        if alive and roll < 0.42:
            key, value = alive.pop(rng.randrange(len(alive)))
            records.append((DELETE_SUCCESS, 0, key, value, ts))
        elif roll < 0.42 + fail_rate:
            records.append((DELETE_FAILED, 0, 0, 0, ts))
        else:
            serial += 1
            pair = (rng.randrange(key_range), serial)
            alive.append(pair)
            records.append((INSERT, 0, *pair, ts))
    return records


def _reports_differ(a, b):
    for f in ("indices", "timestamps", "keys", "rank_errors", "delays"):
        if not np.array_equal(getattr(a, f), getattr(b, f)):
            return f
    for f in ("inserts", "deletes", "failed", "final_alive"):
        if getattr(a, f) != getattr(b, f):
            return f
    return None


def test_replay_oracle_equivalence(capsys):
    t0 = time.monotonic()
    bad = None
    for seed in range(100):
        recs = _random_history(random.Random(9000 + seed), 10_000)
        field = _reports_differ(replay(recs), replay_naive(recs))
        if field is not None:
            bad = (seed, field)
            break
    elapsed = time.monotonic() - t0
    _verdict(capsys, "replay-oracle", bad is None,
             f"100 logs x 10^4 ops, tree vs naive "
             f"{'identical' if bad is None else 'differ at ' + repr(bad)}, "
             f"{elapsed:.0f}s vs 30s target")


# ------------------------------------------------------------ concurrency --

def test_lock_retry_bound(capsys):
    hw = os.cpu_count() or 1
    p = min(8, hw)
    cfg = Config(threads=p, seed=61)
    t0 = time.monotonic()
    out = run_stress_monotonic(cfg, prefill=1 << 14, iterations=500_000,
                               reps=1, timeout=1e9)
    elapsed = time.monotonic() - t0
    rep = out.reps[0]
    ratio = rep.stats["lock_attempts"] / rep.ops
    _verdict(capsys, "lock-retry-bound", ratio <= 2.1,
             f"p={p} (hardware threads {hw}), c=2, {rep.ops} ops, "
             f"{ratio:.3f} lock attempts per op (bound 2.1), {elapsed:.0f}s")


def _same_multiset(a: np.ndarray, b: np.ndarray) -> bool:
    if a.shape != b.shape:
        return False
    return np.array_equal(a[np.lexsort((a[:, 1], a[:, 0]))],
                          b[np.lexsort((b[:, 1], b[:, 0]))])


def test_conservation_matrix(capsys):
    t0 = time.monotonic()
    failures = []
    cells = 0
    total_ops = 0
    for workload, p, name in itertools.product(("monotonic", "insdel"),
                                               (2, 4, 8), PRESET_NAMES):
        cfg = config_with(preset_config(name), threads=p, seed=7000 + cells)
        if workload == "monotonic":
            out = run_stress_monotonic(cfg, prefill=4096, iterations=500_000,
                                       reps=1, timeout=1e9, collect=True)
            drained, dpairs = drain_parallel(out.queue, p, collect=True)
            consumed = np.concatenate([out.deleted_pairs, dpairs])
            ok = (drained == out.remaining
                  and _same_multiset(out.inserted_pairs, consumed))
            del dpairs, consumed
        else:
            out = run_stress_insert_delete(cfg, per_thread=500_000, reps=1,
                                           collect=True)
            ok = (out.remaining == 0
                  and _same_multiset(out.inserted_pairs, out.deleted_pairs))
        total_ops += out.reps[0].ops
        if not ok:
            failures.append((workload, p, name))
        cells += 1
        del out
    elapsed = time.monotonic() - t0
    _verdict(capsys, "conservation", not failures,
             f"{cells - len(failures)}/{cells} workload x threads x preset "
             f"cells conserved exactly ({total_ops} ops; failures: "
             f"{failures or 'none'}; sanitizers n/a under pure CPython), "
             f"{elapsed:.0f}s")


def test_drain_termination_exactly_once(capsys):
    t0 = time.monotonic()
    failures = []
    for seed in range(200):
        p = 2 + seed % 3
        items = 200 + (seed * 97) % 1800
        counting = seed % 2 == 1
        inject = 2 if seed % 8 == 1 else 0
        cfg = config_with(preset_config(PRESET_NAMES[seed % 4]),
                          threads=p + 1 if inject else p, seed=8000 + seed)
        mq = MultiQueue(cfg)
        rng = random.Random(seed)
        flags = bytearray(items + inject)
        h = mq.get_handle(0)
        for v in range(items):
            mq.insert(h, rng.randrange(1 << 40), v)
        mq.release_handle(h)

        if counting:
            pending = list(range(items, items + inject))
            injector = mq.get_handle(p) if inject else None

            def on_rendezvous():
                # Runs in the rendezvous leader while every worker is parked
                # in the barrier, so the spare handle cannot race the owners.
                if pending:
                    v = pending.pop()
                    mq.insert(injector, rng.randrange(1 << 40), v)
                    state.count_insert(0)

            state = CountingState(p, on_rendezvous=on_rendezvous)
            state.count_insert(0, items)
        else:
            state = TerminationState(p)

        def consume(element):
            flags[element[1]] += 1

        def worker(tid):
            hh = mq.get_handle(tid)
            delete = lambda: mq.delete_with_scan(hh)
            if counting:
                n = process_until_empty_counting(state, tid, delete, consume)
            else:
                n = process_until_empty(state, delete, consume)
            mq.release_handle(hh)
            return n

        box = {}

        def drive():
            try:
                box["counts"] = run_workers(p, worker)[0]
            except BaseException as exc:  # surfaced below as a failure
                box["error"] = exc

        t = threading.Thread(target=drive, daemon=True)
        t.start()
        t.join(10.0)
        if t.is_alive():
            failures.append((seed, "watchdog expired"))
            break
        if "error" in box:
            failures.append((seed, repr(box["error"])))
            continue
        total = sum(box["counts"])
        if total != items + inject or min(flags) != 1 or max(flags) != 1:
            failures.append((seed, f"processed {total} of {items + inject}"))
    elapsed = time.monotonic() - t0
    _verdict(capsys, "drain-termination", not failures,
             f"200 randomized drains (polling/counting alternating, every "
             f"4th counting run with injected late inserts) exactly-once "
             f"under 10s watchdog (failures: {failures or 'none'}), "
             f"{elapsed:.0f}s")


# -------------------------------------------------------------- workloads --

def test_sssp_exactness(capsys):
    combos = list(itertools.product((1, 4, 8), PRESET_NAMES))
    gr_files = sorted(
        (Path(__file__).resolve().parents[1] / "examples").rglob("*.gr"))
    t0 = time.monotonic()
    failures = []
    overheads = []
    for i in range(20 + len(gr_files)):
        if i < 20:
            n = int(round(10_000 * 10 ** (i / 19)))
            graph = random_graph(n, 4.0, 1000, seed=100 + i)
        else:
            graph = parse_dimacs_gr(gr_files[i - 20].read_text())
        p, name = combos[i % len(combos)]
        cfg = config_with(preset_config(name), threads=p, seed=900 + i)
        res = run_sssp(graph, 0, cfg)
        oracle = sequential_sssp(graph, 0)
        if res.distances != oracle:
            failures.append(i)
        reached = sum(1 for d in oracle if d != UNREACHED)
        overheads.append(res.processed / max(1, reached))
        del graph, res, oracle
    elapsed = time.monotonic() - t0
    _verdict(capsys, "sssp-exactness", not failures,
             f"20 random graphs (10^4..10^5 nodes) + {len(gr_files)} "
             f"DIMACS files across threads x presets match Dijkstra "
             f"(failures: {failures or 'none'}); processed/reached mean "
             f"{np.mean(overheads):.2f} max {np.max(overheads):.2f}; "
             f"{elapsed:.0f}s")


def test_knapsack_exactness(capsys):
    t0 = time.monotonic()
    instances = []
    seed = 0
    # Keep instances whose sequential tree is big enough that the processed
    # ratio measures relaxation overhead rather than parallel startup noise
    # (the first few scheduler quanta cost a few thousand extra nodes
    # regardless of tree size), yet small enough to stay DP-checkable.
    factors = (1.1, 1.15, 1.2)
    while len(instances) < 50 and seed < 400:
        items = 100 + (seed * 97) % 201
        inst = generate_knapsack(items, 1000, factors[seed % 3], 0.5,
                                 seed=2000 + seed)
        seed += 1
        try:
            best, processed = sequential_knapsack(inst, node_limit=60_000)
        except RuntimeError:
            continue
        if processed < 2000:
            continue
        instances.append((inst, best, processed))
    assert len(instances) == 50, f"only {len(instances)} usable instances"

    failures = []
    worst_ratio = 0.0
    for i, (inst, seq_best, seq_nodes) in enumerate(instances):
        optimum = knapsack_dp(inst)
        if seq_best != optimum:
            failures.append((i, "sequential"))
        for p in (1, 4, 8):
            cfg = config_with(preset_config("balanced"), threads=p,
                              seed=4000 + 3 * i + p)
            res = run_knapsack(inst, cfg)
            if res.best_value != optimum:
                failures.append((i, p))
            worst_ratio = max(worst_ratio, res.processed / seq_nodes)
    elapsed = time.monotonic() - t0
    _verdict(capsys, "knapsack-exactness",
             not failures and worst_ratio < 5.0,
             f"50 instances (100..300 items) x p in (1,4,8), balanced "
             f"preset, all optima match DP (failures: {failures or 'none'}); "
             f"max processed ratio {worst_ratio:.2f} (bound 5); {elapsed:.0f}s")


def test_swap_permutation_integrity(capsys):
    t0 = time.monotonic()
    expected = list(range(64))
    failures = []
    for seed in range(100):
        perm = PermutationArray(64)

        def worker(tid, _seed=seed, _perm=perm):
            rng = SplitMix64(stream_seed(_seed, tid))
            swap = _perm.atomic_swap
            base = tid * 8
            for k in range(100_000):
                swap(base + (k & 7), rng)

        run_workers(8, worker)
        if sorted(perm.snapshot()) != expected:
            failures.append(seed)
    elapsed = time.monotonic() - t0
    _verdict(capsys, "swap-permutation", not failures,
             f"100 seeds x 8 threads x 10^5 swaps on 64 entries all end as "
             f"permutations (failures: {failures or 'none'}), {elapsed:.0f}s")
