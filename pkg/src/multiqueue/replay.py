"""Quality measurement by sequential replay of concurrent operation logs.

Benchmark drivers record one log per thread: inserts are stamped with a
monotonic timestamp immediately before the queue call, deletions immediately
after. Merging the per-thread logs by timestamp yields a linearization in
which an element's recorded insert always precedes its recorded deletion.
Replaying that merged log against an exact priority queue gives, for every
deletion, its *rank error* (how many smaller elements were alive when it ran)
and, for every element, its *delay* (how many deletions of larger elements it
outlived). A deletion that found nothing counts rank error equal to the
current queue size and delay zero, and ages every alive element by one.

The replay structure is a B+ tree ordered by (key, value) whose inner nodes
carry subtree sizes (for rank queries) and whose nodes carry delay counters:
an element's delay is the sum of the counters on its root-to-leaf path plus
its own per-entry offset. A deletion then ages all smaller elements by
touching the O(fanout * height) nodes covering them, as close to the root as
possible, instead of every element. New elements negate their path sum so
they start at delay zero, and rebalancing pushes counters downward before
moving entries, preserving every path sum.

``replay_naive`` computes the same report from the definition with flat
arrays and no shared code; the tests hold the two byte-identical.
"""

from __future__ import annotations

import struct
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from itertools import chain

import numpy as np

from .pq_core import EMPTY_KEY

INSERT, DELETE_SUCCESS, DELETE_FAILED = 0, 1, 2

_KIND_LETTERS = {"i": INSERT, "d": DELETE_SUCCESS, "f": DELETE_FAILED}
_LETTER_KINDS = {v: k for k, v in _KIND_LETTERS.items()}

LOG_MAGIC = b"MQLOG1"
_HEADER = struct.Struct("<6s2sQ")
_RECORD = struct.Struct("<BHQQQ")


class LogFormatError(ValueError):
    pass


class ReplayError(ValueError):
    pass


# -- operation logs -------------------------------------------------------

def write_log(path, records) -> None:
    """Write records (kind, thread_id, key, value, timestamp) in binary form."""
    records = list(records)
    pack = _RECORD.pack
    with open(path, "wb") as f:
        f.write(_HEADER.pack(LOG_MAGIC, b"\x00\x00", len(records)))
        for start in range(0, len(records), 65536):
            f.write(b"".join(pack(*r) for r in records[start:start + 65536]))


def write_log_text(path, records) -> None:
    """Line-oriented form of the same records, for small fixtures."""
    with open(path, "w") as f:
        for kind, thread_id, key, value, ts in records:
            f.write(f"{_LETTER_KINDS[kind]} {thread_id} {key} {value} {ts}\n")


def parse_log_text(text: str) -> list[tuple[int, int, int, int, int]]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5 or parts[0] not in _KIND_LETTERS:
            raise LogFormatError(f"line {lineno}: expected '<i|d|f> thread key value timestamp'")
        try:
            fields = [int(p) for p in parts[1:]]
        except ValueError:
            raise LogFormatError(f"line {lineno}: non-integer field") from None
        records.append((_KIND_LETTERS[parts[0]], *fields))
    return records


def read_log(path) -> list[tuple[int, int, int, int, int]]:
    """Read a binary or text operation log, sniffing by magic bytes."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:6] == LOG_MAGIC:
        if len(blob) < _HEADER.size:
            raise LogFormatError("truncated header")
        magic, _pad, count = _HEADER.unpack_from(blob, 0)
        payload = len(blob) - _HEADER.size
        if payload != count * _RECORD.size:
            raise LogFormatError(
                f"header claims {count} records, payload holds {payload // _RECORD.size}")
        return list(_RECORD.iter_unpack(blob[_HEADER.size:]))
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError:
        raise LogFormatError("neither a binary log (bad magic) nor utf-8 text") from None
    return parse_log_text(text)


def merge_logs(logs) -> list[tuple[int, int, int, int, int]]:
    """Merge per-thread logs into one timestamp-ordered history.

    Each per-thread log must be timestamp-monotone; ties are broken by
    thread id, then by per-thread order (the sort is stable).
    """
    for tid, log in enumerate(logs):
        prev = -1
        for i, rec in enumerate(log):
            ts = rec[4]
            if ts < prev:
                raise LogFormatError(
                    f"thread log {tid} record {i}: timestamps not monotone")
            prev = ts
    return sorted(chain.from_iterable(logs), key=lambda r: (r[4], r[1]))


# -- delay-augmented order-statistics tree --------------------------------

class _Leaf:
    __slots__ = ("entries", "offsets", "delay")

    def __init__(self, entries, offsets, delay):
        self.entries = entries
        self.offsets = offsets
        self.delay = delay


class _Inner:
    __slots__ = ("children", "seps", "size", "delay")

    def __init__(self, children, seps, size, delay):
        self.children = children
        self.seps = seps
        self.size = size
        self.delay = delay


def _size_of(node) -> int:
    return node.size if isinstance(node, _Inner) else len(node.entries)


class ReplayTree:
    """B+ tree over (key, value) with subtree sizes and delay counters."""

    __slots__ = ("_root", "_fanout", "_min")

    def __init__(self, fanout: int = 16):
        if fanout < 4:
            raise ValueError(f"fanout must be >= 4, got {fanout}")
        self._fanout = fanout
        self._min = fanout // 2
        self._root = _Leaf([], [], 0)

    def __len__(self) -> int:
        return _size_of(self._root)

    def insert(self, key: int, value: int) -> None:
        entry = (key, value)
        node = self._root
        path = []
        path_delay = 0
        while isinstance(node, _Inner):
            path_delay += node.delay
            node.size += 1
            i = bisect_right(node.seps, entry)
            path.append((node, i))
            node = node.children[i]
        path_delay += node.delay
        pos = bisect_left(node.entries, entry)
        node.entries.insert(pos, entry)
        node.offsets.insert(pos, -path_delay)
        if len(node.entries) <= self._fanout:
            return
        sep, right = self._split_leaf(node)
        while path:
            parent, i = path.pop()
            parent.children.insert(i + 1, right)
            parent.seps.insert(i, sep)
            if len(parent.children) <= self._fanout:
                return
            sep, right = self._split_inner(parent)
        left = self._root
        self._root = _Inner([left, right], [sep],
                            _size_of(left) + _size_of(right), 0)

    def add_delay_below(self, key: int) -> int:
        """Age every element with a strictly smaller key by one delay unit.

        Returns their count, which is the acting deletion's rank error.
        """
        token = (key,)
        node = self._root
        rank = 0
        while isinstance(node, _Inner):
            i = bisect_left(node.seps, token)
            children = node.children
            for j in range(i):
                child = children[j]
                rank += _size_of(child)
                child.delay += 1
            node = children[i]
        pos = bisect_left(node.entries, token)
        rank += pos
        offsets = node.offsets
        for j in range(pos):
            offsets[j] += 1
        return rank

    def add_delay_all(self) -> None:
        self._root.delay += 1

    def remove(self, key: int, value: int) -> int:
        """Remove an element and return its accumulated delay."""
        entry = (key, value)
        node = self._root
        path = []
        path_delay = 0
        while isinstance(node, _Inner):
            path_delay += node.delay
            node.size -= 1
            i = bisect_right(node.seps, entry)
            path.append((node, i))
            node = node.children[i]
        pos = bisect_left(node.entries, entry)
        if pos >= len(node.entries) or node.entries[pos] != entry:
            raise KeyError(entry)
        delay = path_delay + node.delay + node.offsets[pos]
        del node.entries[pos]
        del node.offsets[pos]
        minc = self._min
        while path:
            parent, i = path.pop()
            if _count_of(node) >= minc:
                return delay
            self._fix_underflow(parent, i)
            node = parent
        root = self._root
        if isinstance(root, _Inner) and len(root.children) == 1:
            child = root.children[0]
            child.delay += root.delay
            self._root = child
        return delay

    # -- structural helpers ------------------------------------------------

    def _split_leaf(self, leaf: _Leaf):
        mid = len(leaf.entries) // 2
        right = _Leaf(leaf.entries[mid:], leaf.offsets[mid:], leaf.delay)
        del leaf.entries[mid:]
        del leaf.offsets[mid:]
        return right.entries[0], right

    def _split_inner(self, node: _Inner):
        mid = len(node.children) // 2
        sep = node.seps[mid - 1]
        right = _Inner(node.children[mid:], node.seps[mid:], 0, node.delay)
        del node.children[mid:]
        del node.seps[mid - 1:]
        rsize = 0
        for child in right.children:
            rsize += _size_of(child)
        right.size = rsize
        node.size -= rsize
        return sep, right

    def _fix_underflow(self, parent: _Inner, i: int) -> None:
        # Repair the underfull child at index i with its adjacent sibling,
        # pushing both nodes' delay counters down first so entries can move
        # without disturbing any path sum.
        j = i - 1 if i > 0 else i
        a = parent.children[j]
        b = parent.children[j + 1]
        if isinstance(a, _Inner):
            for child in a.children:
                child.delay += a.delay
            a.delay = 0
            for child in b.children:
                child.delay += b.delay
            b.delay = 0
            if len(a.children) + len(b.children) <= self._fanout:
                a.seps.append(parent.seps[j])
                a.seps.extend(b.seps)
                a.children.extend(b.children)
                a.size += b.size
                del parent.children[j + 1]
                del parent.seps[j]
            elif len(a.children) < len(b.children):
                moved = b.children.pop(0)
                a.seps.append(parent.seps[j])
                parent.seps[j] = b.seps.pop(0)
                a.children.append(moved)
                ms = _size_of(moved)
                a.size += ms
                b.size -= ms
            else:
                moved = a.children.pop()
                b.seps.insert(0, parent.seps[j])
                parent.seps[j] = a.seps.pop()
                b.children.insert(0, moved)
                ms = _size_of(moved)
                b.size += ms
                a.size -= ms
        else:
            for k in range(len(a.offsets)):
                a.offsets[k] += a.delay
            a.delay = 0
            for k in range(len(b.offsets)):
                b.offsets[k] += b.delay
            b.delay = 0
            if len(a.entries) + len(b.entries) <= self._fanout:
                a.entries.extend(b.entries)
                a.offsets.extend(b.offsets)
                del parent.children[j + 1]
                del parent.seps[j]
            else:
                if len(a.entries) < len(b.entries):
                    a.entries.append(b.entries.pop(0))
                    a.offsets.append(b.offsets.pop(0))
                else:
                    b.entries.insert(0, a.entries.pop())
                    b.offsets.insert(0, a.offsets.pop())
                parent.seps[j] = b.entries[0]


def _count_of(node) -> int:
    return len(node.children) if isinstance(node, _Inner) else len(node.entries)


# -- replay ----------------------------------------------------------------

@dataclass
class QualityReport:
    """Per-deletion quality metrics from one replayed history."""

    indices: np.ndarray      # position of the deletion in the merged log
    timestamps: np.ndarray
    keys: np.ndarray         # EMPTY_KEY marks a failed deletion
    rank_errors: np.ndarray
    delays: np.ndarray
    inserts: int
    deletes: int
    failed: int
    final_alive: int

    def summary(self) -> dict:
        ranks = self.rank_errors
        delays = self.delays
        n = int(ranks.size)
        return {
            "inserts": self.inserts,
            "deletes": self.deletes,
            "failed_deletes": self.failed,
            "final_alive": self.final_alive,
            "total_rank_error": int(ranks.sum()) if n else 0,
            "total_delay": int(delays.sum()) if n else 0,
            "mean_rank_error": float(ranks.mean()) if n else 0.0,
            "max_rank_error": int(ranks.max()) if n else 0,
            "mean_delay": float(delays.mean()) if n else 0.0,
            "max_delay": int(delays.max()) if n else 0,
        }


def replay(records, fanout: int = 16) -> QualityReport:
    """Replay a merged, timestamp-ordered history; see the module docstring."""
    tree = ReplayTree(fanout)
    alive: set[tuple[int, int]] = set()
    indices: list[int] = []
    stamps: list[int] = []
    keys: list[int] = []
    ranks: list[int] = []
    delays: list[int] = []
    inserts = deletes = failed = 0
    prev_ts = None
    for index, record in enumerate(records):
        kind, _tid, key, value, ts = record
        if prev_ts is not None and ts < prev_ts:
            raise ReplayError(f"record {index}: history not timestamp-ordered "
                              "(merge per-thread logs first)")
        prev_ts = ts
        if kind == INSERT:
            if not 0 <= key < EMPTY_KEY:
                raise ReplayError(f"record {index}: key {key} out of range")
            pair = (key, value)
            if pair in alive:
                raise ReplayError(f"record {index}: duplicate alive element {pair}")
            alive.add(pair)
            tree.insert(key, value)
            inserts += 1
        elif kind == DELETE_SUCCESS:
            pair = (key, value)
            if pair not in alive:
                raise ReplayError(
                    f"record {index}: deletion of element {pair} that is not alive "
                    "(missing insert, double delete, or timestamp skew)")
            rank = tree.add_delay_below(key)
            delay = tree.remove(key, value)
            alive.remove(pair)
            indices.append(index)
            stamps.append(ts)
            keys.append(key)
            ranks.append(rank)
            delays.append(delay)
            deletes += 1
        elif kind == DELETE_FAILED:
            rank = len(tree)
            tree.add_delay_all()
            indices.append(index)
            stamps.append(ts)
            keys.append(EMPTY_KEY)
            ranks.append(rank)
            delays.append(0)
            failed += 1
        else:
            raise ReplayError(f"record {index}: unknown kind {kind}")
    return QualityReport(
        indices=np.asarray(indices, dtype=np.int64),
        timestamps=np.asarray(stamps, dtype=np.uint64),
        keys=np.asarray(keys, dtype=np.uint64),
        rank_errors=np.asarray(ranks, dtype=np.int64),
        delays=np.asarray(delays, dtype=np.int64),
        inserts=inserts,
        deletes=deletes,
        failed=failed,
        final_alive=len(alive),
    )


def replay_naive(records) -> QualityReport:
    """Replay straight from the definition: flat arrays, O(n) per deletion.

    Independent of ReplayTree; exists as the differential-testing oracle.
    """
    n_inserts = sum(1 for r in records if r[0] == INSERT)
    keys_arena = np.zeros(n_inserts, dtype=np.uint64)
    delay_arena = np.zeros(n_inserts, dtype=np.int64)
    alive_mask = np.zeros(n_inserts, dtype=bool)
    slot_of: dict[tuple[int, int], int] = {}
    next_slot = 0
    indices, stamps, keys, ranks, delays = [], [], [], [], []
    inserts = deletes = failed = 0
    for index, (kind, _tid, key, value, ts) in enumerate(records):
        if kind == INSERT:
            pair = (key, value)
            if pair in slot_of:
                raise ReplayError(f"record {index}: duplicate alive element {pair}")
            keys_arena[next_slot] = key
            delay_arena[next_slot] = 0
            alive_mask[next_slot] = True
            slot_of[pair] = next_slot
            next_slot += 1
            inserts += 1
        elif kind == DELETE_SUCCESS:
            slot = slot_of.pop((key, value), None)
            if slot is None:
                raise ReplayError(f"record {index}: deletion of element "
                                  f"{(key, value)} that is not alive")
            smaller = alive_mask & (keys_arena < key)
            rank = int(smaller.sum())
            alive_mask[slot] = False
            own_delay = int(delay_arena[slot])
            delay_arena[smaller] += 1
            indices.append(index)
            stamps.append(ts)
            keys.append(key)
            ranks.append(rank)
            delays.append(own_delay)
            deletes += 1
        elif kind == DELETE_FAILED:
            rank = int(alive_mask.sum())
            delay_arena[alive_mask] += 1
            indices.append(index)
            stamps.append(ts)
            keys.append(EMPTY_KEY)
            ranks.append(rank)
            delays.append(0)
            failed += 1
        else:
            raise ReplayError(f"record {index}: unknown kind {kind}")
    return QualityReport(
        indices=np.asarray(indices, dtype=np.int64),
        timestamps=np.asarray(stamps, dtype=np.uint64),
        keys=np.asarray(keys, dtype=np.uint64),
        rank_errors=np.asarray(ranks, dtype=np.int64),
        delays=np.asarray(delays, dtype=np.int64),
        inserts=inserts,
        deletes=deletes,
        failed=failed,
        final_alive=len(slot_of),
    )


def bin_timeseries(values, bin_size: int = 1 << 18):
    """Split a metric series into consecutive bins and summarize each.

    Returns rows (bin, count, mean, q25, q50, q75, q100) using nearest-rank
    quantiles; q100 is the bin maximum.
    """
    if bin_size < 1:
        raise ValueError(f"bin size must be >= 1, got {bin_size}")
    values = np.asarray(values, dtype=np.int64)
    rows = []
    for b, start in enumerate(range(0, len(values), bin_size)):
        chunk = values[start:start + bin_size]
        q25, q50, q75 = np.quantile(chunk, (0.25, 0.5, 0.75), method="inverted_cdf")
        rows.append((b, int(chunk.size), float(chunk.mean()),
                     int(q25), int(q50), int(q75), int(chunk.max())))
    return rows
