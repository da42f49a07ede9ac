"""Single-source shortest paths over the relaxed queue.

Label-correcting parallel search: the queue holds (tentative distance, node)
pairs, a shared array holds the current tentative distances. A deleted pair
whose key no longer matches the node's tentative distance is stale and
dropped; a matching one is scanned, relaxing out-edges with an atomic
min-update (striped mutexes stand in for a CAS loop) and (re)inserting
improved nodes. Relaxed deletion reorders work, so nodes can be scanned more
than once; termination detection ends the drain. Unreachable nodes keep the
max-key sentinel as their distance.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from heapq import heappop, heappush

from ..mq import Config, MultiQueue
from ..pq_core import EMPTY_KEY
from ..termination import TerminationState, process_until_empty
from .graphs import Graph
from .runner import run_workers

UNREACHED = EMPTY_KEY


def sequential_sssp(graph: Graph, source: int) -> list[int]:
    """Exact oracle: binary-heap Dijkstra with lazy deletion."""
    if not 0 <= source < graph.n:
        raise ValueError(f"source {source} outside [0, {graph.n})")
    dist = [UNREACHED] * graph.n
    dist[source] = 0
    heap = [(0, source)]
    offsets, targets, weights = graph.offsets, graph.targets, graph.weights
    while heap:
        du, u = heappop(heap)
        if du != dist[u]:
            continue
        for e in range(offsets[u], offsets[u + 1]):
            v = targets[e]
            nd = du + weights[e]
            if nd < dist[v]:
                dist[v] = nd
                heappush(heap, (nd, v))
    return dist


@dataclass
class SsspResult:
    distances: list[int]
    processed: int       # elements deleted from the queue
    scanned: int         # deletions that were still fresh and relaxed edges
    elapsed: float
    stats: dict
    pinned: bool


def run_sssp(graph: Graph, source: int, config: Config,
             pin: bool = False) -> SsspResult:
    if not 0 <= source < graph.n:
        raise ValueError(f"source {source} outside [0, {graph.n})")
    mq = MultiQueue(config)
    p = config.threads
    dist = [UNREACHED] * graph.n
    dist[source] = 0
    stripes = [threading.Lock() for _ in range(min(4096, graph.n))]
    n_stripes = len(stripes)
    offsets, targets, weights = graph.offsets, graph.targets, graph.weights
    scanned_counts = [0] * p
    state = TerminationState(p)

    seed_handle = mq.get_handle(0)
    mq.insert(seed_handle, 0, source)
    mq.release_handle(seed_handle)

    start = time.monotonic()

    def worker(tid: int) -> int:
        h = mq.get_handle(tid)
        scanned = 0

        def scan(element):
            nonlocal scanned
            key, u = element
            if key > dist[u]:
                return  # stale: the node improved after this pair was queued
            scanned += 1
            du = dist[u]
            for e in range(offsets[u], offsets[u + 1]):
                v = targets[e]
                nd = du + weights[e]
                if nd < dist[v]:
                    with stripes[v % n_stripes]:
                        improved = nd < dist[v]
                        if improved:
                            dist[v] = nd
                    if improved:
                        mq.insert(h, nd, v)

        processed = process_until_empty(state, lambda: mq.delete_with_scan(h), scan)
        scanned_counts[tid] = scanned
        mq.release_handle(h)
        return processed

    results, pinned = run_workers(p, worker, pin=pin)
    elapsed = time.monotonic() - start
    return SsspResult(distances=dist, processed=sum(results),
                      scanned=sum(scanned_counts), elapsed=elapsed,
                      stats=mq.stats(), pinned=pinned)
