"""Concurrent stress workloads.

Two access patterns:

  - *monotonic*: the queue is prefilled with keys 1..n; each iteration
    deletes one element and then inserts one whose key is the last deleted
    key plus a uniform offset in [0, n], so the key space drifts upward the
    way event-driven simulations do.
  - *insert-delete*: every thread first inserts its share of elements with
    keys uniform in [1, n*p], all threads barrier, then the queue is drained
    cooperatively; conservation (drained count == inserted count) is
    asserted.

Each repetition runs on a fresh queue with a seed derived from (seed, rep).
When logging is on, the final repetition records per-thread operation logs
for quality replay: insert timestamps immediately before the call, delete
timestamps immediately after. When collection is on, inserted and deleted
(key, value) pairs are returned as arrays so tests can check conservation
exactly.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ..mq import Config, MultiQueue, config_with
from ..pq_core import EMPTY_KEY
from ..replay import DELETE_FAILED, DELETE_SUCCESS, INSERT
from ..rng import SplitMix64, stream_seed
from ..termination import TerminationState, process_until_empty
from .runner import run_workers


class WorkloadError(RuntimeError):
    pass


@dataclass
class RepMetrics:
    rep: int
    ops: int
    elapsed: float
    throughput: float            # queue operations per second
    inserted: int
    deleted: int
    stats: dict


@dataclass
class StressOutcome:
    workload: str
    config: Config
    reps: list[RepMetrics] = field(default_factory=list)
    logs: list[list[tuple]] | None = None      # per-thread logs, final rep
    inserted_pairs: np.ndarray | None = None   # (n, 2) uint64, final rep
    deleted_pairs: np.ndarray | None = None
    remaining: int = 0                          # elements left after final rep
    pinned: bool = False
    insert_elapsed: float = 0.0                 # insert-delete phase splits
    delete_elapsed: float = 0.0
    queue: MultiQueue | None = None             # final rep's queue

    def mean_throughput(self) -> float:
        return sum(r.throughput for r in self.reps) / len(self.reps)


class _PairSink:
    """Append-only store of (key, value) pairs backed by numpy chunks."""

    __slots__ = ("_chunks", "_keys", "_vals", "_n", "_cap")

    def __init__(self, capacity_hint: int = 1024):
        self._chunks: list[np.ndarray] = []
        self._cap = max(capacity_hint, 16)
        self._keys = np.empty(self._cap, dtype=np.uint64)
        self._vals = np.empty(self._cap, dtype=np.uint64)
        self._n = 0

    def add(self, key: int, value: int) -> None:
        n = self._n
        if n == self._cap:
            self._chunks.append(np.stack((self._keys, self._vals), axis=1))
            self._keys = np.empty(self._cap, dtype=np.uint64)
            self._vals = np.empty(self._cap, dtype=np.uint64)
            n = 0
        self._keys[n] = key
        self._vals[n] = value
        self._n = n + 1

    def array(self) -> np.ndarray:
        tail = np.stack((self._keys[:self._n], self._vals[:self._n]), axis=1)
        if self._chunks:
            return np.concatenate(self._chunks + [tail], axis=0)
        return tail


def _merge_pairs(sinks) -> np.ndarray:
    arrays = [s.array() for s in sinks]
    if not arrays:
        return np.empty((0, 2), dtype=np.uint64)
    return np.concatenate(arrays, axis=0)


def run_stress_monotonic(config: Config, prefill: int, iterations: int,
                         reps: int = 5, timeout: float = 5.0,
                         log: bool = False, collect: bool = False,
                         pin: bool = False) -> StressOutcome:
    """Alternating delete/insert over a drifting key space.

    ``iterations`` counts delete+insert rounds per thread; one round is two
    queue operations. The timeout cuts rounds short (checked every 1024).
    """
    if prefill < 1:
        raise WorkloadError(f"monotonic stress needs prefill >= 1, got {prefill}")
    outcome = StressOutcome("stress-monotonic", config)
    p = config.threads
    for rep in range(reps):
        final = rep == reps - 1
        rep_seed = stream_seed(config.seed, rep)
        mq = MultiQueue(config_with(config, seed=rep_seed))
        logging = log and final
        collecting = collect and final

        prefill_log: list[tuple] = []
        ins_sinks = [None] * p
        del_sinks = [None] * p
        prefill_pairs = _PairSink(prefill) if collecting else None

        handle = mq.get_handle(0)
        prefill_value = p << 48
        for key in range(1, prefill + 1):
            prefill_value += 1
            if logging:
                prefill_log.append((INSERT, p, key, prefill_value,
                                    time.monotonic_ns()))
            if collecting:
                prefill_pairs.add(key, prefill_value)
            mq.insert(handle, key, prefill_value)
        mq.release_handle(handle)

        logs: list[list[tuple]] = [[] for _ in range(p)]
        counts = [None] * p
        barrier = threading.Barrier(p)

        def worker(tid: int):
            h = mq.get_handle(tid)
            key_rng = SplitMix64(stream_seed(rep_seed, 4096 + tid))
            recs = logs[tid]
            if collecting:
                ins_sinks[tid] = _PairSink(iterations)
                del_sinks[tid] = _PairSink(iterations)
                ins_add = ins_sinks[tid].add
                del_add = del_sinks[tid].add
            span = prefill + 1
            last = 0
            value = tid << 48
            deleted = 0
            barrier.wait()
            start = time.monotonic()
            deadline = start + timeout
            it = 0
            while it < iterations:
                if not it & 1023 and time.monotonic() > deadline:
                    break
                element = mq.delete(h)
                if logging:
                    ts = time.monotonic_ns()
                if element is None:
                    if logging:
                        recs.append((DELETE_FAILED, tid, EMPTY_KEY, 0, ts))
                else:
                    last = element[0]
                    deleted += 1
                    if logging:
                        recs.append((DELETE_SUCCESS, tid, element[0], element[1], ts))
                    if collecting:
                        del_add(element[0], element[1])
                key = last + key_rng.randbelow(span)
                value += 1
                if logging:
                    recs.append((INSERT, tid, key, value, time.monotonic_ns()))
                if collecting:
                    ins_add(key, value)
                mq.insert(h, key, value)
                it += 1
            elapsed = time.monotonic() - start
            mq.release_handle(h)
            counts[tid] = (it, deleted, elapsed)
            return None

        _, pinned = run_workers(p, worker, pin=pin)
        rounds = sum(c[0] for c in counts)
        deleted = sum(c[1] for c in counts)
        elapsed = max(c[2] for c in counts)
        ops = 2 * rounds
        outcome.reps.append(RepMetrics(
            rep=rep, ops=ops, elapsed=elapsed,
            throughput=ops / elapsed if elapsed > 0 else 0.0,
            inserted=prefill + rounds, deleted=deleted, stats=mq.stats()))
        if final:
            outcome.pinned = pinned
            outcome.queue = mq
            outcome.remaining = mq.size()
            if logging:
                outcome.logs = [prefill_log] + logs
            if collecting:
                outcome.inserted_pairs = np.concatenate(
                    [prefill_pairs.array(), _merge_pairs(ins_sinks)], axis=0)
                outcome.deleted_pairs = _merge_pairs(del_sinks)
    return outcome


def run_stress_insert_delete(config: Config, per_thread: int, reps: int = 5,
                             log: bool = False, collect: bool = False,
                             pin: bool = False) -> StressOutcome:
    """Insert phase, barrier, cooperative drain phase; conservation asserted."""
    if per_thread < 1:
        raise WorkloadError(f"insert-delete needs per-thread count >= 1, got {per_thread}")
    outcome = StressOutcome("stress-insdel", config)
    p = config.threads
    total = per_thread * p
    for rep in range(reps):
        final = rep == reps - 1
        rep_seed = stream_seed(config.seed, rep)
        mq = MultiQueue(config_with(config, seed=rep_seed))
        logging = log and final
        collecting = collect and final

        logs: list[list[tuple]] = [[] for _ in range(p)]
        ins_sinks = [None] * p
        del_sinks = [None] * p
        drained = [0] * p
        state = TerminationState(p)
        stamps = {}

        def mark(name):
            stamps[name] = time.monotonic()

        start_barrier = threading.Barrier(p, action=lambda: mark("t0"))
        mid_barrier = threading.Barrier(p, action=lambda: mark("t1"))
        end_barrier = threading.Barrier(p, action=lambda: mark("t2"))

        def worker(tid: int):
            h = mq.get_handle(tid)
            key_rng = SplitMix64(stream_seed(rep_seed, 4096 + tid))
            recs = logs[tid]
            if collecting:
                ins_sinks[tid] = _PairSink(per_thread)
                del_sinks[tid] = _PairSink(per_thread)
                del_add = del_sinks[tid].add
            value = tid << 48
            start_barrier.wait()
            for _ in range(per_thread):
                key = key_rng.randbelow(total) + 1
                value += 1
                if logging:
                    recs.append((INSERT, tid, key, value, time.monotonic_ns()))
                if collecting:
                    ins_sinks[tid].add(key, value)
                mq.insert(h, key, value)
            mid_barrier.wait()

            def take():
                element = mq.delete_with_scan(h)
                if element is None:
                    return None
                if logging:
                    recs.append((DELETE_SUCCESS, tid, element[0], element[1],
                                 time.monotonic_ns()))
                if collecting:
                    del_add(element[0], element[1])
                return element

            drained[tid] = process_until_empty(state, take, lambda e: None)
            end_barrier.wait()
            mq.release_handle(h)
            return None

        _, pinned = run_workers(p, worker, pin=pin)
        insert_elapsed = stamps["t1"] - stamps["t0"]
        delete_elapsed = stamps["t2"] - stamps["t1"]
        total_drained = sum(drained)
        if total_drained != total or mq.size() != 0:
            raise WorkloadError(
                f"conservation violated: inserted {total}, drained {total_drained}, "
                f"left {mq.size()}")
        elapsed = insert_elapsed + delete_elapsed
        ops = 2 * total
        outcome.reps.append(RepMetrics(
            rep=rep, ops=ops, elapsed=elapsed,
            throughput=ops / elapsed if elapsed > 0 else 0.0,
            inserted=total, deleted=total_drained, stats=mq.stats()))
        if final:
            outcome.pinned = pinned
            outcome.queue = mq
            outcome.insert_elapsed = insert_elapsed
            outcome.delete_elapsed = delete_elapsed
            if logging:
                outcome.logs = logs
            if collecting:
                outcome.inserted_pairs = _merge_pairs(ins_sinks)
                outcome.deleted_pairs = _merge_pairs(del_sinks)
                outcome.remaining = 0
    return outcome


def drain_parallel(mq: MultiQueue, threads: int, collect: bool = False):
    """Drain a queue with the cooperative protocol; return (count, pairs).

    ``pairs`` is an (n, 2) uint64 array of drained elements when collecting,
    else None. Used by tests to finish conservation checks.
    """
    state = TerminationState(threads)
    sinks = [_PairSink() for _ in range(threads)] if collect else None

    def worker(tid: int) -> int:
        h = mq.get_handle(tid)
        if collect:
            add = sinks[tid].add

            def consume(element):
                add(element[0], element[1])
        else:
            def consume(element):
                pass
        count = process_until_empty(state, lambda: mq.delete_with_scan(h), consume)
        mq.release_handle(h)
        return count

    results, _ = run_workers(threads, worker)
    pairs = _merge_pairs(sinks) if collect else None
    return sum(results), pairs
