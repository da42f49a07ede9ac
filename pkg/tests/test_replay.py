"""Replay correctness: log formats, frozen histories, tree-vs-flat oracle,
and structural audits of the delay-augmented order-statistics tree."""

import random

import numpy as np
import pytest

from multiqueue.pq_core import EMPTY_KEY
from multiqueue.replay import (
    DELETE_FAILED,
    DELETE_SUCCESS,
    INSERT,
    LogFormatError,
    ReplayError,
    ReplayTree,
    _Inner,
    _Leaf,
    bin_timeseries,
    merge_logs,
    parse_log_text,
    read_log,
    replay,
    replay_naive,
    write_log,
    write_log_text,
)

I, D, F = INSERT, DELETE_SUCCESS, DELETE_FAILED


# ------------------------------------------------------------- log formats

SAMPLE = [
    (I, 0, 10, 100, 1),
    (I, 1, 20, 200, 2),
    (D, 0, 20, 200, 3),
    (F, 1, 0, 0, 4),
    (D, 1, 10, 100, 5),
]


def test_binary_log_round_trip(tmp_path):
    path = tmp_path / "ops.log"
    write_log(path, SAMPLE)
    assert read_log(path) == SAMPLE


def test_text_log_round_trip(tmp_path):
    path = tmp_path / "ops.txt"
    write_log_text(path, SAMPLE)
    assert read_log(path) == SAMPLE


def test_text_parser_skips_comments_and_blanks():
    text = "# a comment\n\ni 0 5 6 7\n   \nd 0 5 6 9\n"
    assert parse_log_text(text) == [(I, 0, 5, 6, 7), (D, 0, 5, 6, 9)]


@pytest.mark.parametrize("line,lineno", [
    ("x 0 1 2 3", 1),
    ("i 0 1 2", 1),
    ("i 0 one 2 3", 1),
    ("i 0 1 2 3 4", 1),
])
def test_text_parser_errors_carry_line_numbers(line, lineno):
    with pytest.raises(LogFormatError, match=f"line {lineno}"):
        parse_log_text(line)


def test_text_parser_error_on_later_line():
    with pytest.raises(LogFormatError, match="line 3"):
        parse_log_text("i 0 1 2 3\ni 0 1 3 4\nbogus\n")


def test_read_log_rejects_corrupt_binary(tmp_path):
    path = tmp_path / "bad.log"
    write_log(path, SAMPLE)
    blob = path.read_bytes()
    path.write_bytes(blob[:-8])   # drop part of the last record
    with pytest.raises(LogFormatError, match="header claims"):
        read_log(path)


def test_read_log_rejects_garbage(tmp_path):
    path = tmp_path / "noise.bin"
    path.write_bytes(bytes([0xFF, 0xFE, 0x01]) * 7)
    with pytest.raises(LogFormatError, match="neither"):
        read_log(path)


def test_merge_logs_orders_and_breaks_ties_by_thread():
    log0 = [(I, 0, 1, 1, 5), (I, 0, 2, 2, 7)]
    log1 = [(I, 1, 3, 3, 5), (I, 1, 4, 4, 6)]
    merged = merge_logs([log0, log1])
    assert [r[4] for r in merged] == [5, 5, 6, 7]
    assert merged[0][1] == 0 and merged[1][1] == 1   # tie -> thread order


def test_merge_logs_rejects_non_monotone_thread_log():
    with pytest.raises(LogFormatError, match="thread log 1 record 1"):
        merge_logs([[], [(I, 1, 1, 1, 9), (I, 1, 2, 2, 3)]])


# --------------------------------------------------------- frozen histories

def test_two_element_history():
    # insert a < b, delete b first: b passes over a (rank 1) and ages it,
    # so a reports the accumulated delay when its own deletion comes
    records = [(I, 0, 10, 1, 1), (I, 0, 20, 2, 2),
               (D, 0, 20, 2, 3), (D, 0, 10, 1, 4)]
    for engine in (replay, replay_naive):
        report = engine(records)
        assert report.rank_errors.tolist() == [1, 0]
        assert report.delays.tolist() == [0, 1]
        assert report.keys.tolist() == [20, 10]
        assert report.inserts == 2 and report.deletes == 2
        assert report.final_alive == 0


def test_failed_deletion_ages_everyone():
    records = [(I, 0, 10, 1, 1), (I, 0, 20, 2, 2), (I, 0, 30, 3, 3),
               (F, 0, 0, 0, 4),
               (D, 0, 10, 1, 5), (D, 0, 20, 2, 6), (D, 0, 30, 3, 7)]
    for engine in (replay, replay_naive):
        report = engine(records)
        assert report.rank_errors.tolist() == [3, 0, 0, 0]
        assert report.delays.tolist() == [0, 1, 1, 1]
        assert report.keys[0] == EMPTY_KEY
        assert report.failed == 1
        # conservation: every unit of rank error lands on some element
        assert report.rank_errors.sum() == report.delays.sum()


def test_duplicate_keys_are_not_smaller_than_each_other():
    records = [(I, 0, 5, 1, 1), (I, 0, 5, 2, 2), (I, 0, 3, 9, 3),
               (D, 0, 5, 2, 4),    # rank 1: only key 3 is smaller
               (D, 0, 5, 1, 5),    # rank 1 again, never delayed by its twin
               (D, 0, 3, 9, 6)]
    for engine in (replay, replay_naive):
        report = engine(records)
        assert report.rank_errors.tolist() == [1, 1, 0]
        assert report.delays.tolist() == [0, 0, 2]


def test_summary_values():
    records = [(I, 0, 10, 1, 1), (I, 0, 20, 2, 2), (D, 0, 20, 2, 3)]
    s = replay(records).summary()
    assert s["inserts"] == 2 and s["deletes"] == 1 and s["final_alive"] == 1
    assert s["total_rank_error"] == 1 and s["mean_rank_error"] == 1.0
    assert s["max_delay"] == 0


# ----------------------------------------------------------- replay errors

@pytest.mark.parametrize("engine", [replay, replay_naive])
def test_replay_rejects_double_delete(engine):
    records = [(I, 0, 1, 1, 1), (D, 0, 1, 1, 2), (D, 0, 1, 1, 3)]
    with pytest.raises(ReplayError, match="not alive"):
        engine(records)


@pytest.mark.parametrize("engine", [replay, replay_naive])
def test_replay_rejects_unknown_element(engine):
    with pytest.raises(ReplayError, match="not alive"):
        engine([(D, 0, 7, 7, 1)])


@pytest.mark.parametrize("engine", [replay, replay_naive])
def test_replay_rejects_duplicate_alive_pair(engine):
    records = [(I, 0, 1, 1, 1), (I, 0, 1, 1, 2)]
    with pytest.raises(ReplayError, match="duplicate"):
        engine(records)


def test_replay_rejects_unmerged_history():
    records = [(I, 0, 1, 1, 5), (I, 0, 2, 2, 4)]
    with pytest.raises(ReplayError, match="timestamp-ordered"):
        replay(records)


def test_replay_allows_reinsert_after_delete():
    records = [(I, 0, 1, 1, 1), (D, 0, 1, 1, 2), (I, 0, 1, 1, 3), (D, 0, 1, 1, 4)]
    report = replay(records)
    assert report.deletes == 2


# ------------------------------------------------- differential vs oracle

def random_history(rng, ops, key_range, fail_rate=0.04):
    """Valid random history: unique (key, value) pairs, rising timestamps."""
    records = []
    alive = []
    ts = 0
    serial = 0
    for _ in range(ops):
        ts += rng.randrange(3)   # ties allowed
        roll = rng.random()
        if alive and roll < 0.42:
            key, value = alive.pop(rng.randrange(len(alive)))
            records.append((D, 0, key, value, ts))
        elif roll < 0.42 + fail_rate:
            records.append((F, 0, 0, 0, ts))
        else:
            serial += 1
            pair = (rng.randrange(key_range), serial)
            alive.append(pair)
            records.append((I, 0, *pair, ts))
    return records, alive


def assert_reports_equal(a, b):
    assert np.array_equal(a.indices, b.indices)
    assert np.array_equal(a.timestamps, b.timestamps)
    assert np.array_equal(a.keys, b.keys)
    assert np.array_equal(a.rank_errors, b.rank_errors)
    assert np.array_equal(a.delays, b.delays)
    assert (a.inserts, a.deletes, a.failed, a.final_alive) == \
           (b.inserts, b.deletes, b.failed, b.final_alive)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("fanout", [4, 16])
def test_tree_matches_flat_oracle(seed, fanout):
    rng = random.Random(seed)
    records, alive = random_history(rng, 4000, key_range=120)
    # drain the leftovers so the conservation identity is exact
    ts = records[-1][4] + 1
    for key, value in sorted(alive):
        records.append((D, 0, key, value, ts))
        ts += 1
    got = replay(records, fanout=fanout)
    want = replay_naive(records)
    assert_reports_equal(got, want)
    assert got.rank_errors.sum() == got.delays.sum()
    assert got.final_alive == 0


@pytest.mark.parametrize("pattern", ["ascending", "descending", "interleaved"])
def test_tree_matches_oracle_on_skewed_deletions(pattern):
    # deletion order slams one edge of the tree, exercising underflow fixes
    records = []
    pairs = [(k, k) for k in range(1500)]
    for ts, (k, v) in enumerate(pairs):
        records.append((I, 0, k, v, ts))
    order = {"ascending": pairs,
             "descending": pairs[::-1],
             "interleaved": [p for duo in zip(pairs, pairs[::-1]) for p in duo][:1500]}[pattern]
    seen = set()
    ts = len(pairs)
    for k, v in order:
        if (k, v) in seen:
            continue
        seen.add((k, v))
        records.append((D, 0, k, v, ts))
        ts += 1
    got = replay(records, fanout=4)
    want = replay_naive(records)
    assert_reports_equal(got, want)


# -------------------------------------------------------- structural audit

def walk_tree(tree):
    """Collect (entry -> total delay) plus structural facts for audits."""
    delays = {}
    facts = {"max_depth": 0, "bad": []}
    fanout = tree._fanout
    floor = fanout // 2

    def rec(node, acc, depth, is_root, lo, hi):
        facts["max_depth"] = max(facts["max_depth"], depth)
        if isinstance(node, _Leaf):
            if not is_root and not floor <= len(node.entries) <= fanout:
                facts["bad"].append(f"leaf occupancy {len(node.entries)}")
            if len(node.entries) > fanout:
                facts["bad"].append("overfull leaf")
            prev = None
            for entry, offset in zip(node.entries, node.offsets):
                if prev is not None and entry <= prev:
                    facts["bad"].append("unsorted leaf")
                prev = entry
                if lo is not None and entry < lo:
                    facts["bad"].append(f"entry {entry} below separator {lo}")
                if hi is not None and entry >= hi:
                    facts["bad"].append(f"entry {entry} not below separator {hi}")
                delays[entry] = acc + node.delay + offset
            return len(node.entries)
        if not isinstance(node, _Inner):
            facts["bad"].append(f"unknown node {type(node)}")
            return 0
        if len(node.seps) != len(node.children) - 1:
            facts["bad"].append("separator count mismatch")
        if not is_root and not floor <= len(node.children) <= fanout:
            facts["bad"].append(f"inner occupancy {len(node.children)}")
        if is_root and len(node.children) < 2:
            facts["bad"].append("inner root with a single child")
        total = 0
        bounds = [lo] + list(node.seps) + [hi]
        for i, child in enumerate(node.children):
            total += rec(child, acc + node.delay, depth + 1, False,
                         bounds[i], bounds[i + 1])
        if total != node.size:
            facts["bad"].append(f"size {node.size} != subtree total {total}")
        return total

    total = rec(tree._root, 0, 1, True, None, None)
    assert total == len(tree)
    return delays, facts


class DictDelayOracle:
    """Delay bookkeeping straight from the glossary definition."""

    def __init__(self):
        self.delays = {}

    def insert(self, key, value):
        self.delays[(key, value)] = 0

    def delete(self, key, value):
        rank = sum(1 for (k, _v) in self.delays if k < key)
        own = self.delays.pop((key, value))
        for pair in self.delays:
            if pair[0] < key:
                self.delays[pair] += 1
        return rank, own

    def fail(self):
        for pair in self.delays:
            self.delays[pair] += 1


@pytest.mark.parametrize("fanout", [4, 8, 16])
def test_tree_invariants_and_alive_delays(fanout):
    rng = random.Random(fanout * 31)
    tree = ReplayTree(fanout)
    oracle = DictDelayOracle()
    serial = 0
    alive = []
    for step in range(5000):
        roll = rng.random()
        if alive and roll < 0.45:
            key, value = alive.pop(rng.randrange(len(alive)))
            got_rank = tree.add_delay_below(key)
            got_delay = tree.remove(key, value)
            want_rank, want_delay = oracle.delete(key, value)
            assert (got_rank, got_delay) == (want_rank, want_delay)
        elif alive and roll < 0.48:
            tree.add_delay_all()
            oracle.fail()
        else:
            serial += 1
            pair = (rng.randrange(200), serial)
            alive.append(pair)
            tree.insert(*pair)
            oracle.insert(*pair)
        if step % 500 == 499:
            delays, facts = walk_tree(tree)
            assert facts["bad"] == []
            assert delays == oracle.delays
    delays, facts = walk_tree(tree)
    assert facts["bad"] == []
    assert delays == oracle.delays


def test_tree_height_stays_logarithmic():
    tree = ReplayTree(16)
    for i in range(10_000):
        tree.insert(i, i)
    _, facts = walk_tree(tree)
    # 10^4 entries, floor 8 per node: height is at most ceil(log_8) + root
    assert facts["max_depth"] <= 6
    assert facts["bad"] == []


def test_remove_missing_raises():
    tree = ReplayTree(4)
    tree.insert(5, 5)
    with pytest.raises(KeyError):
        tree.remove(6, 6)
    with pytest.raises(KeyError):
        tree.remove(5, 4)


# ------------------------------------------------------------- time series

def test_bin_timeseries_frozen():
    rows = bin_timeseries(np.arange(10), bin_size=4)
    assert rows == [
        (0, 4, 1.5, 0, 1, 2, 3),
        (1, 4, 5.5, 4, 5, 6, 7),
        (2, 2, 8.5, 8, 8, 9, 9),
    ]


def test_bin_timeseries_empty():
    assert bin_timeseries(np.array([], dtype=np.int64)) == []
