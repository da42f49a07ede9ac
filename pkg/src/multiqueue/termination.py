"""Cooperative termination detection for draining a relaxed queue.

A relaxed delete can report "looks empty" while elements sit in queues the
candidates missed, so a naive drain loop would stop early. The protocol here
keeps two shared counters. A thread whose delete fails starts *polling*:
it keeps retrying the delete. Once every thread is polling it moves to
*idle*; when every thread is idle the drain is finished. A single successful
delete drops the thread back to working, which pulls idle threads back into
polling.

This is sound when a failed delete means "no element was present at some
instant during the call" for a quiescent queue (the scan fallback provides
that) and inserts only happen inside ``process``. When deletes may fail
spuriously, use the counting variant: each thread counts its inserts and
deletes, and instead of terminating on all-idle the threads rendezvous and
compare totals, terminating only when every inserted element has been
deleted and resetting to working otherwise.

The harness is queue-agnostic: it drives any ``try_delete`` callable with
delete-and-scan semantics.
"""

from __future__ import annotations

import threading
import time


class AtomicCounter:
    """Lock-backed integer with sequentially consistent add/load."""

    __slots__ = ("_lock", "_value")

    def __init__(self, value: int = 0):
        self._lock = threading.Lock()
        self._value = value

    def add(self, delta: int) -> int:
        with self._lock:
            self._value += delta
            return self._value

    def load(self) -> int:
        return self._value

    def store(self, value: int) -> None:
        with self._lock:
            self._value = value


class TerminationState:
    """Shared polling/idle counters for one drain; single-use."""

    def __init__(self, threads: int):
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        self.threads = threads
        self.polling = AtomicCounter()
        self.idle = AtomicCounter()


def process_until_empty(state: TerminationState, try_delete, process) -> int:
    """Repeatedly delete and process elements until the queue is drained.

    Call from each of ``state.threads`` threads with that thread's bound
    ``try_delete``. Returns the number of elements this thread processed.
    The idle wait yields the interpreter every 64 spins so peers can run.
    """
    p = state.threads
    polling = state.polling
    idle = state.idle
    processed = 0
    while True:
        element = try_delete()
        if element is None:
            polling.add(1)
            while True:
                element = try_delete()
                if element is not None:
                    break
                if polling.load() < p:
                    continue
                idle.add(1)
                spins = 0
                terminated = False
                while polling.load() == p:
                    if idle.load() == p:
                        terminated = True
                        break
                    spins += 1
                    if not spins & 63:
                        time.sleep(0)
                if terminated:
                    return processed
                idle.add(-1)
            polling.add(-1)
        process(element)
        processed += 1


class CountingState(TerminationState):
    """Termination state with per-thread insert/delete counters.

    ``on_rendezvous`` is invoked once per rendezvous (by the barrier leader,
    before the totals are compared); tests use it to inject late inserts.
    """

    def __init__(self, threads: int, on_rendezvous=None):
        super().__init__(threads)
        self.inserts = [0] * threads
        self.deletes = [0] * threads
        self._decision = False
        self._on_rendezvous = on_rendezvous
        self._barrier = threading.Barrier(threads, action=self._decide)

    def count_insert(self, thread_id: int, n: int = 1) -> None:
        self.inserts[thread_id] += n

    def count_delete(self, thread_id: int, n: int = 1) -> None:
        self.deletes[thread_id] += n

    def _decide(self) -> None:
        if self._on_rendezvous is not None:
            self._on_rendezvous()
        self._decision = sum(self.inserts) == sum(self.deletes)
        if not self._decision:
            # Everyone restarts from the working state.
            self.polling.store(0)
            self.idle.store(0)

    def rendezvous(self) -> bool:
        self._barrier.wait()
        return self._decision


def process_until_empty_counting(state: CountingState, thread_id: int,
                                 try_delete, process) -> int:
    """Counting drain tolerant of spuriously failing deletes.

    Successful deletes are counted here; the caller must count its inserts
    via ``state.count_insert`` (including any prefill) before the drain can
    terminate.
    """
    p = state.threads
    polling = state.polling
    idle = state.idle
    processed = 0
    while True:
        reset = False
        element = try_delete()
        if element is None:
            polling.add(1)
            while True:
                element = try_delete()
                if element is not None:
                    break
                if polling.load() < p:
                    continue
                idle.add(1)
                spins = 0
                outcome = 0
                while polling.load() == p:
                    if idle.load() == p:
                        outcome = 1 if state.rendezvous() else 2
                        break
                    spins += 1
                    if not spins & 63:
                        time.sleep(0)
                if outcome == 1:
                    return processed
                if outcome == 2:
                    reset = True
                    break
                idle.add(-1)
            if reset:
                continue
            polling.add(-1)
        state.count_delete(thread_id)
        process(element)
        processed += 1
