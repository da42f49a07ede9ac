"""Result artifacts: CSV files with a config echo block, JSON summaries.

Every CSV starts with comment lines ``# key=value`` echoing the run
configuration (fixed key order, so downstream tooling can parse it without
guessing), then a header row, then data rows. Plot tooling reads the model
parameters (threads, queue factor, candidates) straight from this block.
"""

from __future__ import annotations

import json

CONFIG_FIELD_ORDER = [
    "workload", "preset", "threads", "queue_factor", "candidates",
    "stickiness", "period", "queues", "insertion_buffer", "deletion_buffer",
    "arity", "seed", "prefill", "iterations", "per_thread", "reps",
    "timeout", "bin_size", "cache_line", "graph", "source", "items",
    "max_weight", "surplus_factor", "capacity_fraction", "version",
]

# One shared summary schema across workloads; cells empty when not measured.
SUMMARY_HEADER = [
    "workload", "rep", "threads", "queue_factor", "candidates", "stickiness",
    "period", "queues", "ops", "throughput", "mean_rank_error",
    "max_rank_error", "mean_delay", "max_delay", "processed", "scanned",
    "elapsed_s",
]

REPORT_HEADER = ["index", "timestamp", "key", "rank_error", "delay"]
HISTOGRAM_HEADER = ["metric", "value", "count"]
BINS_HEADER = ["metric", "bin", "count", "mean", "q25", "q50", "q75", "q100"]


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows, config: dict) -> None:
    with open(path, "w") as f:
        for key in CONFIG_FIELD_ORDER:
            if key in config:
                f.write(f"# {key}={format_cell(config[key])}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(format_cell(cell) for cell in row) + "\n")


def read_csv(path):
    """Read back (config dict, header, rows-of-strings)."""
    config: dict[str, str] = {}
    header: list[str] = []
    rows: list[list[str]] = []
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, value = body.partition("=")
                config[key.strip()] = value
            elif not header:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    return config, header, rows


def write_json(path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2)
