"""Sequential simulator of relaxed deletion over many queues.

Runs the monotonic access pattern single-threaded against a configurable
total number of queues, tracking every deletion's rank error online against
an exact shadow multiset. With no concurrency in play, each internal queue
always serves its exact minimum, so a bare binary heap per queue is
observationally equivalent to the full buffered queue and much faster to
simulate; deletion picks d distinct candidate queues, compares their top
keys, and pops from the best (ties to the earlier draw).

The simulator can also emit a synthetic operation log (timestamps are the
op sequence number) so the replay pipeline can be cross-validated against
the online rank errors, and optionally drain the queue at the end so delay
totals match rank-error totals exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np
from sortedcontainers import SortedList

from ..pq_core import EMPTY_KEY
from ..replay import DELETE_FAILED, DELETE_SUCCESS, INSERT
from ..rng import SplitMix64, stream_seed


@dataclass
class SimulationResult:
    queues: int
    candidates: int
    prefill: int
    iterations: int
    seed: int
    rank_errors: np.ndarray      # one entry per deletion, drain included
    main_deletions: int          # deletions during the iteration phase
    failed: int                  # iteration-phase deletions that found nothing
    elapsed: float
    records: list[tuple] | None  # synthetic op log when requested

    def phase_rank_errors(self) -> np.ndarray:
        """Rank errors of the iteration phase only (drain excluded)."""
        return self.rank_errors[:self.main_deletions]


def run_sequential_simulator(queues: int, candidates: int, prefill: int,
                             iterations: int, seed: int = 1,
                             log: bool = False, drain: bool = False) -> SimulationResult:
    if queues < 1:
        raise ValueError(f"need at least one queue, got {queues}")
    if not 1 <= candidates <= queues:
        raise ValueError(f"candidates must be in [1, {queues}], got {candidates}")
    if prefill < 1:
        raise ValueError(f"prefill must be >= 1, got {prefill}")

    pick_rng = SplitMix64(stream_seed(seed, 0))
    key_rng = SplitMix64(stream_seed(seed, 1))
    heaps: list[list[tuple[int, int]]] = [[] for _ in range(queues)]
    shadow = SortedList()
    records: list[tuple] | None = [] if log else None
    ranks: list[int] = []

    clock = 0
    value = 0
    for key in range(1, prefill + 1):
        value += 1
        clock += 1
        heappush(heaps[pick_rng.randbelow(queues)], (key, value))
        if log:
            records.append((INSERT, 0, key, value, clock))
    shadow.update(range(1, prefill + 1))

    pair = candidates == 2
    span = prefill + 1
    last = 0
    failed = 0
    start = time.monotonic()
    for _ in range(iterations):
        # delete from the best-looking of d distinct queues
        if pair:
            i = pick_rng.randbelow(queues)
            j = pick_rng.randbelow(queues - 1)
            if j >= i:
                j += 1
            hi = heaps[i]
            hj = heaps[j]
            best = hi
            if hj and (not hi or hj[0][0] < hi[0][0]):
                best = hj
        else:
            drawn: list[int] = []
            while len(drawn) < candidates:
                i = pick_rng.randbelow(queues)
                if i not in drawn:
                    drawn.append(i)
            best = None
            best_key = None
            for i in drawn:
                h = heaps[i]
                if h and (best is None or h[0][0] < best_key):
                    best = h
                    best_key = h[0][0]
        if not best:
            failed += 1
            ranks.append(len(shadow))
            # a failed deletion still stamps the log so replay sees it
            if log:
                clock += 1
                records.append((DELETE_FAILED, 0, EMPTY_KEY, 0, clock))
        else:
            key, val = heappop(best)
            ranks.append(shadow.bisect_left(key))
            shadow.remove(key)
            last = key
            if log:
                clock += 1
                records.append((DELETE_SUCCESS, 0, key, val, clock))
        # insert a key drifting up from the last deleted one
        key = last + key_rng.randbelow(span)
        value += 1
        if log:
            clock += 1
            records.append((INSERT, 0, key, value, clock))
        heappush(heaps[pick_rng.randbelow(queues)], (key, value))
        shadow.add(key)
    main_deletions = len(ranks)

    if drain:
        # empty the queue the way delete-with-scan would: d candidates,
        # then the first non-empty queue in index order
        while shadow:
            if pair:
                i = pick_rng.randbelow(queues)
                j = pick_rng.randbelow(queues - 1)
                if j >= i:
                    j += 1
                best = heaps[i]
                hj = heaps[j]
                if hj and (not best or hj[0][0] < best[0][0]):
                    best = hj
            else:
                drawn = []
                while len(drawn) < candidates:
                    i = pick_rng.randbelow(queues)
                    if i not in drawn:
                        drawn.append(i)
                best = None
                best_key = None
                for i in drawn:
                    h = heaps[i]
                    if h and (best is None or h[0][0] < best_key):
                        best = h
                        best_key = h[0][0]
            if not best:
                for h in heaps:
                    if h:
                        best = h
                        break
            key, val = heappop(best)
            ranks.append(shadow.bisect_left(key))
            shadow.remove(key)
            if log:
                clock += 1
                records.append((DELETE_SUCCESS, 0, key, val, clock))
    elapsed = time.monotonic() - start

    return SimulationResult(
        queues=queues, candidates=candidates, prefill=prefill,
        iterations=iterations, seed=seed,
        rank_errors=np.asarray(ranks, dtype=np.int64),
        main_deletions=main_deletions, failed=failed,
        elapsed=elapsed, records=records)
