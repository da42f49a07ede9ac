"""Relaxed concurrent priority queue over many lock-protected internal queues.

The queue keeps c internal queues per thread (c*p total). Inserts go to a
random queue, retrying with fresh randomness while the try-lock fails.
Deletes pick d candidate queues, compare their published minima without
locking, and try-lock the best one; a lost lock race redraws all candidates.
A delete reports emptiness when every candidate it looked at published the
empty sentinel, without verifying the rest of the queues; callers that need
a real drain use :meth:`MultiQueue.delete_with_scan`.

Stickiness trades quality for locality: a thread keeps using the same d
queues for a configured number of operations before drawing new ones (and
abandons the period early when a try-lock fails). ``simple`` draws the new
set uniformly; ``swap`` maintains a global permutation of queue indices in
which each thread owns d fixed slots and swaps them with random partners, so
no two threads deliberately share a queue.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field, replace

from .pq_core import EMPTY_KEY, InternalQueue
from .rng import SplitMix64, stream_seed

STICKINESS_MODES = ("none", "simple", "swap")

_NONE, _SIMPLE, _SWAP = 0, 1, 2

DEFAULT_CACHE_LINE = 64


class ConfigError(ValueError):
    pass


def _env_cache_line() -> int:
    raw = os.environ.get("MQ_CACHE_LINE")
    if raw is None:
        return DEFAULT_CACHE_LINE
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"MQ_CACHE_LINE must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"MQ_CACHE_LINE must be >= 1, got {value}")
    return value


@dataclass(frozen=True)
class Config:
    """MultiQueue parameters.

    ``cache_line`` is accepted for interface parity with the native layout
    (record padding); the Python object model gives no layout control, so it
    is validated and echoed in reports but has no runtime effect.
    """

    threads: int = 1
    queue_factor: int = 2
    candidates: int = 2
    stickiness: str = "none"
    period: int = 1
    insertion_buffer: int = 16
    deletion_buffer: int = 16
    arity: int = 8
    seed: int = 1
    scan_retries: int = 2
    cache_line: int = field(default_factory=_env_cache_line)

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.queue_factor < 1:
            raise ConfigError(f"queue factor must be >= 1, got {self.queue_factor}")
        if self.stickiness not in STICKINESS_MODES:
            raise ConfigError(f"unknown stickiness mode {self.stickiness!r}")
        queues = self.threads * self.queue_factor
        if not 1 <= self.candidates <= queues:
            raise ConfigError(
                f"candidates must be in [1, {queues}], got {self.candidates}")
        if self.stickiness != "none" and self.candidates > self.queue_factor:
            raise ConfigError(
                "sticky modes need candidates <= queue factor "
                f"(got d={self.candidates}, c={self.queue_factor})")
        if self.period < 1:
            raise ConfigError(f"period must be >= 1, got {self.period}")
        if self.insertion_buffer < 1 or self.deletion_buffer < 1:
            raise ConfigError("buffer capacities must be >= 1")
        if self.arity < 2:
            raise ConfigError(f"arity must be >= 2, got {self.arity}")
        if self.scan_retries < 0:
            raise ConfigError(f"scan retries must be >= 0, got {self.scan_retries}")
        if self.cache_line < 1:
            raise ConfigError(f"cache line must be >= 1, got {self.cache_line}")

    @property
    def num_queues(self) -> int:
        return self.threads * self.queue_factor


# Named parameter sets: (stickiness, queue factor, period). Two-candidate
# deletion and the tuned buffer/arity defaults apply to all of them.
PRESETS = {
    "strict": ("none", 2, 1),
    "quality": ("simple", 2, 4),
    "balanced": ("swap", 2, 256),
    "fast": ("simple", 2, 4096),
}


def preset_config(name: str, **overrides) -> Config:
    try:
        stickiness, queue_factor, period = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}") from None
    base = dict(stickiness=stickiness, queue_factor=queue_factor, period=period,
                candidates=2)
    base.update(overrides)
    return Config(**base)


class PermutationArray:
    """Fixed array of distinct queue indices with atomic exchange and CAS.

    -1 marks a slot whose owner is mid-swap; every other slot holds a valid
    index and the non-sentinel entries always form a partial permutation.
    CPython has no user-level CAS, so one mutex serializes the mutators;
    plain loads are GIL-atomic.
    """

    __slots__ = ("_cells", "_lock")

    def __init__(self, size: int):
        self._cells = list(range(size))
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._cells)

    def load(self, i: int) -> int:
        return self._cells[i]

    def snapshot(self) -> list[int]:
        with self._lock:
            return list(self._cells)

    def exchange(self, i: int, value: int) -> int:
        with self._lock:
            old = self._cells[i]
            self._cells[i] = value
            return old

    def compare_and_swap(self, i: int, expected: int, value: int) -> bool:
        with self._lock:
            if self._cells[i] != expected:
                return False
            self._cells[i] = value
            return True

    def store(self, i: int, value: int) -> None:
        with self._lock:
            self._cells[i] = value

    def atomic_swap(self, i: int, rng: SplitMix64) -> None:
        """Swap slot i's value with a uniformly random victim slot's value.

        Slot i must be owned by the caller and hold a valid index. The slot
        is parked at -1 while the swap is in flight, so a victim draw that
        lands on i (or on another in-flight slot) fails the guard and is
        redrawn; expected O(1) attempts since at most one slot per thread is
        parked.
        """
        held = self.exchange(i, -1)
        cells = self._cells
        n = len(cells)
        while True:
            j = rng.randbelow(n)
            victim = cells[j]
            if victim != -1 and self.compare_and_swap(j, victim, held):
                break
        self.store(i, victim)


class Handle:
    """Per-thread access token: RNG stream, stick state, and op counters."""

    __slots__ = ("thread_id", "rng", "stick", "stick_left", "perm_slots",
                 "lock_attempts", "failed_deletes", "epoch_aborts", "scans",
                 "stale_wins", "stick_refreshes")

    def __init__(self, thread_id: int, seed: int, perm_slots):
        self.thread_id = thread_id
        self.rng = SplitMix64(stream_seed(seed, thread_id))
        self.stick: list[int] = []
        self.stick_left = 0
        self.perm_slots = perm_slots
        self.lock_attempts = 0
        self.failed_deletes = 0
        self.epoch_aborts = 0
        self.scans = 0
        self.stale_wins = 0
        self.stick_refreshes = 0

    def counters(self) -> dict:
        return {
            "lock_attempts": self.lock_attempts,
            "failed_deletes": self.failed_deletes,
            "epoch_aborts": self.epoch_aborts,
            "scans": self.scans,
            "stale_wins": self.stale_wins,
            "stick_refreshes": self.stick_refreshes,
        }


class MultiQueue:
    def __init__(self, config: Config):
        self.config = config
        n = config.num_queues
        self._queues = [
            InternalQueue(config.insertion_buffer, config.deletion_buffer,
                          config.arity)
            for _ in range(n)
        ]
        self._nq = n
        self._d = config.candidates
        self._mode = STICKINESS_MODES.index(config.stickiness)
        self._period = config.period
        self._scan_retries = config.scan_retries
        self.permutation = (PermutationArray(n) if self._mode == _SWAP else None)
        self._handles: dict[int, Handle] = {}
        self._handle_lock = threading.Lock()
        self._retired: dict = {}

    @property
    def num_queues(self) -> int:
        return self._nq

    def size(self) -> int:
        """Total element count; meaningful only while no thread is active."""
        return sum(len(q) for q in self._queues)

    # -- handles ---------------------------------------------------------

    def get_handle(self, thread_id: int) -> Handle:
        if not 0 <= thread_id < self.config.threads:
            raise ConfigError(
                f"thread id {thread_id} outside [0, {self.config.threads})")
        with self._handle_lock:
            if thread_id in self._handles:
                raise ConfigError(f"thread id {thread_id} already claimed")
            if self._mode == _SWAP:
                d = self._d
                slots = range(thread_id * d, thread_id * d + d)
            else:
                slots = None
            handle = Handle(thread_id, self.config.seed, slots)
            self._handles[thread_id] = handle
            return handle

    def release_handle(self, handle: Handle) -> None:
        with self._handle_lock:
            owned = self._handles.get(handle.thread_id)
            if owned is not handle:
                raise ConfigError(f"thread id {handle.thread_id} is not claimed")
            del self._handles[handle.thread_id]
            for name, count in handle.counters().items():
                self._retired[name] = self._retired.get(name, 0) + count

    def stats(self) -> dict:
        with self._handle_lock:
            total = dict(self._retired)
            for handle in self._handles.values():
                for name, count in handle.counters().items():
                    total[name] = total.get(name, 0) + count
        return total

    # -- stickiness ------------------------------------------------------

    def _refresh_stick(self, handle: Handle) -> None:
        d = self._d
        rng = handle.rng
        stick = handle.stick
        if self._mode == _SIMPLE:
            stick.clear()
            n = self._nq
            while len(stick) < d:
                i = rng.randbelow(n)
                if i not in stick:
                    stick.append(i)
        else:
            perm = self.permutation
            for slot in handle.perm_slots:
                perm.atomic_swap(slot, rng)
            stick[:] = [perm.load(slot) for slot in handle.perm_slots]
        handle.stick_left = self._period
        handle.stick_refreshes += 1

    # -- operations ------------------------------------------------------

    def insert(self, handle: Handle, key: int, value: int) -> None:
        if not 0 <= key < EMPTY_KEY:
            raise ValueError(f"key must be in [0, {EMPTY_KEY}), got {key}")
        element = (key, value)
        queues = self._queues
        rng = handle.rng
        if self._mode == _NONE:
            n = self._nq
            while True:
                handle.lock_attempts += 1
                q = queues[rng.randbelow(n)]
                if q.lock.acquire(False):
                    q.insert_with_buffers(element)
                    q.lock.release()
                    return
        d = self._d
        while True:
            if handle.stick_left <= 0:
                self._refresh_stick(handle)
            stick = handle.stick
            q = queues[stick[rng.randbelow(d)] if d > 1 else stick[0]]
            handle.lock_attempts += 1
            if q.lock.acquire(False):
                q.insert_with_buffers(element)
                q.lock.release()
                handle.stick_left -= 1
                return
            handle.epoch_aborts += 1
            handle.stick_left = 0

    def delete(self, handle: Handle) -> tuple[int, int] | None:
        queues = self._queues
        rng = handle.rng
        if self._mode == _NONE:
            n = self._nq
            d = self._d
            if d == 2:
                while True:
                    i = rng.randbelow(n)
                    j = rng.randbelow(n - 1)
                    if j >= i:
                        j += 1
                    q = queues[i]
                    seen = q.top_key
                    other = queues[j]
                    seen_j = other.top_key
                    if seen_j < seen:
                        q = other
                        seen = seen_j
                    if seen == EMPTY_KEY:
                        handle.failed_deletes += 1
                        return None
                    handle.lock_attempts += 1
                    if q.lock.acquire(False):
                        if q.top_key != seen:
                            handle.stale_wins += 1
                        element = q.delete_with_buffers()
                        q.lock.release()
                        if element is None:
                            handle.failed_deletes += 1
                        return element
            else:
                while True:
                    drawn: list[int] = []
                    while len(drawn) < d:
                        i = rng.randbelow(n)
                        if i not in drawn:
                            drawn.append(i)
                    q = None
                    seen = EMPTY_KEY
                    for i in drawn:
                        k = queues[i].top_key
                        if k < seen:
                            seen = k
                            q = queues[i]
                    if q is None:
                        handle.failed_deletes += 1
                        return None
                    handle.lock_attempts += 1
                    if q.lock.acquire(False):
                        if q.top_key != seen:
                            handle.stale_wins += 1
                        element = q.delete_with_buffers()
                        q.lock.release()
                        if element is None:
                            handle.failed_deletes += 1
                        return element
        while True:
            if handle.stick_left <= 0:
                self._refresh_stick(handle)
            q = None
            seen = EMPTY_KEY
            for i in handle.stick:
                k = queues[i].top_key
                if k < seen:
                    seen = k
                    q = queues[i]
            if q is None:
                handle.failed_deletes += 1
                handle.stick_left -= 1
                return None
            handle.lock_attempts += 1
            if q.lock.acquire(False):
                if q.top_key != seen:
                    handle.stale_wins += 1
                element = q.delete_with_buffers()
                q.lock.release()
                if element is None:
                    handle.failed_deletes += 1
                handle.stick_left -= 1
                return element
            handle.epoch_aborts += 1
            handle.stick_left = 0

    def delete_with_scan(self, handle: Handle) -> tuple[int, int] | None:
        """Delete with a linear fallback pass over all queues.

        Retries the randomized delete a configured number of times, then
        walks every queue once, try-locking the non-empty-looking ones and
        returning the first element found. Queues whose lock is held by a
        peer are skipped, so a concurrent mutator can hide an element from
        one scan; at quiescence a scan is exhaustive.
        """
        element = self.delete(handle)
        if element is not None:
            return element
        for _ in range(self._scan_retries):
            element = self.delete(handle)
            if element is not None:
                return element
        handle.scans += 1
        for q in self._queues:
            if q.top_key == EMPTY_KEY:
                continue
            if not q.lock.acquire(False):
                continue
            element = q.delete_with_buffers()
            q.lock.release()
            if element is not None:
                return element
        return None


def config_with(config: Config, **overrides) -> Config:
    return replace(config, **overrides)
