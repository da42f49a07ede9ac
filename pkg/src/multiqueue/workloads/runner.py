"""Worker-thread harness shared by the concurrent workloads."""

from __future__ import annotations

import os
import threading


def pin_to_cpu(index: int) -> bool:
    """Best-effort: pin the calling thread to one CPU; report success."""
    try:
        cpus = os.sched_getaffinity(0)
    except (AttributeError, OSError):
        return False
    if not cpus:
        return False
    target = sorted(cpus)[index % len(cpus)]
    try:
        os.sched_setaffinity(0, {target})
        return True
    except OSError:
        return False


def run_workers(count: int, target, pin: bool = False):
    """Run target(thread_index) on ``count`` threads; re-raise the first
    worker exception; return (per-thread results, all_pinned)."""
    results = [None] * count
    pinned = [False] * count
    errors: list[BaseException] = []

    def wrap(i: int) -> None:
        if pin:
            pinned[i] = pin_to_cpu(i)
        try:
            results[i] = target(i)
        except BaseException as exc:  # propagate to the spawning thread
            errors.append(exc)

    threads = [threading.Thread(target=wrap, args=(i,), name=f"worker-{i}")
               for i in range(count)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return results, (pin and all(pinned))
