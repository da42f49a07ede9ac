"""Best-first branch-and-bound 0/1 knapsack over the relaxed queue.

Partial solutions fix a take/skip decision for the first ``index`` items
(items are pre-sorted by value density, best first). The lower bound greedily
takes whole items from the frontier until one no longer fits; the upper bound
additionally fills the remaining capacity with that item's fractional value
(floored: values are integral, so the floor is still a bound). The queue is
a max-order frontier: elements carry key = KEY_ORDER_MAX - upper bound, so
relaxed delete-min pops a nearly-best node. Nodes whose upper bound cannot
beat the shared incumbent are pruned; children that cannot improve on their
own lower bound (bounds equal) are already solved by the greedy completion
and are not queued. The incumbent is a monotone shared maximum fed by every
computed lower bound, so the reported best value is exact even though node
order is relaxed.

Partial solutions live in per-thread arenas; a queue element's value packs
(thread id, arena index) so values stay globally unique.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np

from ..mq import Config, MultiQueue
from ..pq_core import EMPTY_KEY
from ..termination import TerminationState, process_until_empty
from .runner import run_workers

KEY_ORDER_MAX = EMPTY_KEY - 1     # key = KEY_ORDER_MAX - upper bound
_ARENA_BITS = 40
_ARENA_MASK = (1 << _ARENA_BITS) - 1


@dataclass(frozen=True)
class KnapsackInstance:
    """Items sorted by value density (descending, stable)."""

    weights: tuple
    values: tuple
    capacity: int

    @property
    def items(self) -> int:
        return len(self.weights)


def generate_knapsack(items: int, max_weight: int, surplus_factor: float,
                      capacity_fraction: float, seed: int = 1) -> KnapsackInstance:
    """Random instance: weights uniform in [1, W]; each value is its weight
    plus a surplus uniform in [W/10, surplus_factor * W/10]; capacity is the
    given fraction of the total weight, floored."""
    if items < 1:
        raise ValueError(f"need at least one item, got {items}")
    if max_weight < 10:
        raise ValueError(f"max weight must be >= 10, got {max_weight}")
    if surplus_factor < 1.0:
        raise ValueError(f"surplus factor must be >= 1, got {surplus_factor}")
    if not 0.0 < capacity_fraction <= 1.0:
        raise ValueError(f"capacity fraction must be in (0, 1], got {capacity_fraction}")
    rng = np.random.Generator(np.random.Philox(seed))
    base = max_weight // 10
    w = rng.integers(1, max_weight + 1, size=items)
    k = rng.integers(base, int(surplus_factor * base) + 1, size=items)
    v = w + k
    density = v / w
    order = np.argsort(-density, kind="stable")
    capacity = int(capacity_fraction * int(w.sum()))
    return KnapsackInstance(weights=tuple(int(x) for x in w[order]),
                            values=tuple(int(x) for x in v[order]),
                            capacity=capacity)


def greedy_bounds(inst: KnapsackInstance, value: int, weight: int,
                  index: int) -> tuple[int, int]:
    """Bounds for a partial solution decided up to ``index``.

    Lower: greedy whole-item completion from the frontier, stopping at the
    first item that no longer fits. Upper: lower plus the floored fractional
    share of that first non-fitting item.
    """
    weights = inst.weights
    values = inst.values
    n = len(weights)
    remaining = inst.capacity - weight
    lower = value
    i = index
    while i < n and weights[i] <= remaining:
        remaining -= weights[i]
        lower += values[i]
        i += 1
    if i < n and remaining > 0:
        return lower, lower + (remaining * values[i]) // weights[i]
    return lower, lower


class _AtomicMax:
    __slots__ = ("_lock", "value")

    def __init__(self, value: int):
        self._lock = threading.Lock()
        self.value = value

    def offer(self, candidate: int) -> None:
        if candidate > self.value:
            with self._lock:
                if candidate > self.value:
                    self.value = candidate


@dataclass
class KnapsackResult:
    best_value: int
    processed: int
    elapsed: float
    stats: dict
    pinned: bool


def _expand(inst: KnapsackInstance, node: tuple[int, int, int], incumbent_value: int,
            offer, emit) -> None:
    """Branch a node into take/skip children; emit (upper, child) survivors."""
    value, weight, index = node
    weights = inst.weights
    values = inst.values
    if index >= len(weights):
        return
    take_weight = weight + weights[index]
    if take_weight <= inst.capacity:
        take = (value + values[index], take_weight, index + 1)
        lower, upper = greedy_bounds(inst, *take)
        offer(lower)
        if upper > lower and upper > incumbent_value:
            emit(upper, take)
    skip = (value, weight, index + 1)
    lower, upper = greedy_bounds(inst, *skip)
    offer(lower)
    if upper > lower and upper > incumbent_value:
        emit(upper, skip)


def sequential_knapsack(inst: KnapsackInstance,
                        node_limit: int | None = None) -> tuple[int, int]:
    """Exact best-first solver mirroring the parallel branching rules.

    Returns (best value, processed node count). Raises if the node count
    exceeds ``node_limit`` (used to filter generated instances).
    """
    root = (0, 0, 0)
    lower, upper = greedy_bounds(inst, *root)
    best = lower
    processed = 0
    heap: list[tuple[int, int, tuple[int, int, int]]] = []
    seq = 0
    if upper > lower:
        heap.append((-upper, seq, root))
    while heap:
        neg_upper, _, node = heappop(heap)
        processed += 1
        if node_limit is not None and processed > node_limit:
            raise RuntimeError(f"node limit {node_limit} exceeded")
        if -neg_upper <= best:
            continue

        def offer(candidate: int) -> None:
            nonlocal best
            if candidate > best:
                best = candidate

        def emit(upper: int, child) -> None:
            nonlocal seq
            seq += 1
            heappush(heap, (-upper, seq, child))

        _expand(inst, node, best, offer, emit)
    return best, processed


def knapsack_dp(inst: KnapsackInstance) -> int:
    """Independent oracle: classic capacity-indexed dynamic program."""
    dp = np.zeros(inst.capacity + 1, dtype=np.int64)
    for w, v in zip(inst.weights, inst.values):
        if w <= inst.capacity:
            np.maximum(dp[w:], dp[:-w] + v, out=dp[w:])
    return int(dp[-1])


def run_knapsack(inst: KnapsackInstance, config: Config,
                 pin: bool = False) -> KnapsackResult:
    mq = MultiQueue(config)
    p = config.threads
    arenas: list[list[tuple[int, int, int]]] = [[] for _ in range(p + 1)]
    state = TerminationState(p)

    root = (0, 0, 0)
    lower, upper = greedy_bounds(inst, *root)
    incumbent = _AtomicMax(lower)

    seed_handle = mq.get_handle(0)
    if upper > lower:
        arenas[p].append(root)
        mq.insert(seed_handle, KEY_ORDER_MAX - upper, p << _ARENA_BITS)
    mq.release_handle(seed_handle)

    start = time.monotonic()

    def worker(tid: int) -> int:
        h = mq.get_handle(tid)
        arena = arenas[tid]
        base = tid << _ARENA_BITS

        def emit(upper: int, child) -> None:
            arena.append(child)
            mq.insert(h, KEY_ORDER_MAX - upper, base | (len(arena) - 1))

        def process(element) -> None:
            key, packed = element
            if KEY_ORDER_MAX - key <= incumbent.value:
                return  # pruned: cannot beat the incumbent any more
            node = arenas[packed >> _ARENA_BITS][packed & _ARENA_MASK]
            _expand(inst, node, incumbent.value, incumbent.offer, emit)

        processed = process_until_empty(state, lambda: mq.delete_with_scan(h), process)
        mq.release_handle(h)
        return processed

    results, pinned = run_workers(p, worker, pin=pin)
    elapsed = time.monotonic() - start
    return KnapsackResult(best_value=incumbent.value, processed=sum(results),
                          elapsed=elapsed, stats=mq.stats(), pinned=pinned)
