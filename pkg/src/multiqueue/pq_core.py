"""Sequential building blocks: k-ary heap and the buffered internal queue.

Elements are (key, value) pairs of unsigned 64-bit ints. The maximum
representable key is reserved as the published "queue looks empty" sentinel
and is rejected on insert. Values are opaque payload ids; drivers that need
to track individual elements keep them globally unique.

Each internal queue couples three stores behind one lock:

  - an unordered insertion buffer (plain list, capacity bounded),
  - a deletion buffer holding the queue's smallest elements in ascending
    order (the next deletions come from its front),
  - a k-ary heap backing store for everything else.

The smallest key is mirrored into the lock-free-readable ``top_key``
attribute so peers can compare queue minima without taking the lock. The
mirror is updated before the lock is released, so any reader that observes
a released lock sees the matching top.
"""

from __future__ import annotations

import threading
from bisect import insort

EMPTY_KEY = (1 << 64) - 1
MAX_VALUE = (1 << 64) - 1


class KaryHeap:
    """Implicit k-ary min-heap over (key, value) pairs, arity >= 2."""

    __slots__ = ("_k", "_data")

    def __init__(self, arity: int = 8):
        if arity < 2:
            raise ValueError(f"heap arity must be >= 2, got {arity}")
        self._k = arity
        self._data: list[tuple[int, int]] = []

    def __len__(self) -> int:
        return len(self._data)

    def min(self) -> tuple[int, int]:
        return self._data[0]

    def push(self, item: tuple[int, int]) -> None:
        data = self._data
        k = self._k
        data.append(item)
        i = len(data) - 1
        while i > 0:
            parent = (i - 1) // k
            moved = data[parent]
            if moved <= item:
                break
            data[i] = moved
            i = parent
        data[i] = item

    def pop_min(self) -> tuple[int, int]:
        data = self._data
        if not data:
            raise IndexError("pop from empty heap")
        k = self._k
        top = data[0]
        last = data.pop()
        n = len(data)
        if n:
            i = 0
            while True:
                first = i * k + 1
                if first >= n:
                    break
                end = first + k
                if end > n:
                    end = n
                c = first
                small = data[first]
                for j in range(first + 1, end):
                    cand = data[j]
                    if cand < small:
                        small = cand
                        c = j
                if small >= last:
                    break
                data[i] = small
                i = c
            data[i] = last
        return top


class InternalQueue:
    """One lock-protected buffered queue; see the module docstring.

    Invariants (hold whenever the lock is free):
      - the deletion buffer is sorted ascending and holds the queue's
        smallest elements; every buffered-in or heaped key is >= its max,
      - an empty deletion buffer implies the whole queue is empty,
      - ``top_key`` equals the deletion buffer's head key, or EMPTY_KEY.
    """

    __slots__ = ("lock", "top_key", "ibuf", "dbuf", "heap", "_icap", "_dcap")

    def __init__(self, insertion_capacity: int = 16, deletion_capacity: int = 16,
                 arity: int = 8):
        if insertion_capacity < 1 or deletion_capacity < 1:
            raise ValueError("buffer capacities must be >= 1")
        self.lock = threading.Lock()
        self.top_key = EMPTY_KEY
        self.ibuf: list[tuple[int, int]] = []
        self.dbuf: list[tuple[int, int]] = []
        self.heap = KaryHeap(arity)
        self._icap = insertion_capacity
        self._dcap = deletion_capacity

    def __len__(self) -> int:
        return len(self.ibuf) + len(self.dbuf) + len(self.heap)

    def insert_with_buffers(self, element: tuple[int, int]) -> None:
        dbuf = self.dbuf
        if len(dbuf) < self._dcap and not self.ibuf and not len(self.heap):
            insort(dbuf, element)
            self.top_key = dbuf[0][0]
            return
        if element[0] < dbuf[-1][0]:
            if len(dbuf) < self._dcap:
                insort(dbuf, element)
                self.top_key = dbuf[0][0]
                return
            evicted = dbuf.pop()
            insort(dbuf, element)
            self.top_key = dbuf[0][0]
            element = evicted
        if len(self.ibuf) == self._icap:
            self.flush_insertion_buffer()
        self.ibuf.append(element)

    def delete_with_buffers(self) -> tuple[int, int] | None:
        dbuf = self.dbuf
        if not dbuf:
            return None
        element = dbuf.pop(0)
        if not dbuf:
            self.flush_insertion_buffer()
            heap = self.heap
            refill = len(heap)
            if refill > self._dcap:
                refill = self._dcap
            for _ in range(refill):
                dbuf.append(heap.pop_min())
        self.top_key = dbuf[0][0] if dbuf else EMPTY_KEY
        return element

    def flush_insertion_buffer(self) -> None:
        push = self.heap.push
        for element in self.ibuf:
            push(element)
        self.ibuf.clear()
