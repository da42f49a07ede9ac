"""mq-bench: benchmark and analysis driver for the multiqueue package.

Subcommands cover the two stress benchmarks, the sequential rank-error
simulator, the SSSP and knapsack workloads, and offline replay of operation
logs. Every run can write a CSV artifact (``--out``) whose leading ``#``
comment lines echo the configuration; see results.py for the format.

Exit codes: 0 success, 1 verification failure, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .mq import Config, ConfigError, PRESETS, STICKINESS_MODES, preset_config
from . import results

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2

_CONFIG_FLAGS = (
    ("threads", "threads"),
    ("queue_factor", "queue_factor"),
    ("candidates", "candidates"),
    ("stickiness", "stickiness"),
    ("period", "period"),
    ("ibuf", "insertion_buffer"),
    ("dbuf", "deletion_buffer"),
    ("arity", "arity"),
    ("seed", "seed"),
)


def _queue_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("queue configuration")
    g.add_argument("-p", "--threads", type=int, metavar="N",
                   help="worker threads (default 1)")
    g.add_argument("-c", "--queue-factor", type=int, metavar="C",
                   help="internal queues per thread (default 2)")
    g.add_argument("-d", "--candidates", type=int, metavar="D",
                   help="queues sampled per deletion (default 2)")
    g.add_argument("--stickiness", choices=STICKINESS_MODES,
                   help="queue reuse mode (default none)")
    g.add_argument("-s", "--period", type=int, metavar="OPS",
                   help="operations per stickiness epoch (default 1)")
    g.add_argument("--ibuf", type=int, metavar="CAP",
                   help="insertion buffer capacity (default 16)")
    g.add_argument("--dbuf", type=int, metavar="CAP",
                   help="deletion buffer capacity (default 16)")
    g.add_argument("-k", "--arity", type=int, metavar="K",
                   help="heap arity (default 8)")
    g.add_argument("--seed", type=int, help="root seed (default 1)")
    g.add_argument("--preset", choices=sorted(PRESETS),
                   help="named configuration; explicit flags override it")


def _output_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("output")
    g.add_argument("--out", metavar="PATH", help="write a CSV artifact here")
    g.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="stdout summary style (default csv-ish text)")


def build_config(args) -> Config:
    overrides = {}
    for flag, field in _CONFIG_FLAGS:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    if getattr(args, "preset", None):
        return preset_config(args.preset, **overrides)
    return Config(**overrides)


def _echo(workload: str, config: Config, args, **extra) -> dict:
    echo = {
        "workload": workload,
        "preset": getattr(args, "preset", None) or "",
        "threads": config.threads,
        "queue_factor": config.queue_factor,
        "candidates": config.candidates,
        "stickiness": config.stickiness,
        "period": config.period,
        "queues": config.num_queues,
        "insertion_buffer": config.insertion_buffer,
        "deletion_buffer": config.deletion_buffer,
        "arity": config.arity,
        "seed": config.seed,
        "cache_line": config.cache_line,
        "version": __version__,
    }
    echo.update(extra)
    return echo


def _emit(args, lines: list[str], payload: dict) -> None:
    if args.format == "json":
        print(results.json_text(payload))
    else:
        for line in lines:
            print(line)


def _stress_rows(outcome) -> list[list]:
    cfg = outcome.config
    rows = []
    for rep in outcome.reps:
        rows.append([
            outcome.workload, rep.rep, cfg.threads, cfg.queue_factor,
            cfg.candidates, cfg.stickiness, cfg.period, cfg.num_queues,
            rep.ops, round(rep.throughput, 3), None, None, None, None,
            None, None, round(rep.elapsed, 6),
        ])
    return rows


def _run_stress(args, workload: str) -> int:
    from .workloads import run_stress_monotonic, run_stress_insert_delete
    from .replay import merge_logs, replay, write_log

    config = build_config(args)
    log = args.log_quality is not None
    if workload == "stress-monotonic":
        outcome = run_stress_monotonic(
            config, prefill=args.prefill, iterations=args.iterations,
            reps=args.reps, timeout=args.timeout, log=log, pin=args.pin)
        extra = {"prefill": args.prefill, "iterations": args.iterations,
                 "reps": args.reps, "timeout": args.timeout}
    else:
        outcome = run_stress_insert_delete(
            config, per_thread=args.iterations, reps=args.reps, log=log,
            pin=args.pin)
        extra = {"per_thread": args.iterations, "reps": args.reps}

    rows = _stress_rows(outcome)
    payload = {
        "workload": workload,
        "mean_throughput": outcome.mean_throughput(),
        "reps": [{"rep": r.rep, "ops": r.ops, "elapsed": r.elapsed,
                  "throughput": r.throughput} for r in outcome.reps],
        "stats": outcome.reps[-1].stats,
    }
    lines = [f"{workload}: p={config.threads} c={config.queue_factor} "
             f"d={config.candidates} stickiness={config.stickiness} "
             f"period={config.period} queues={config.num_queues}"]
    for rep in outcome.reps:
        lines.append(f"  rep {rep.rep}: ops={rep.ops} "
                     f"elapsed={rep.elapsed:.3f}s "
                     f"throughput={rep.throughput:,.0f} ops/s")
    lines.append(f"  mean throughput: {outcome.mean_throughput():,.0f} ops/s")

    if log:
        merged = merge_logs(outcome.logs)
        write_log(args.log_quality, merged)
        report = replay(merged)
        summary = report.summary()
        rows[-1][10] = round(summary["mean_rank_error"], 4)
        rows[-1][11] = summary["max_rank_error"]
        rows[-1][12] = round(summary["mean_delay"], 4)
        rows[-1][13] = summary["max_delay"]
        payload["quality"] = summary
        lines.append(f"  quality (final rep): mean rank error "
                     f"{summary['mean_rank_error']:.3f}, mean delay "
                     f"{summary['mean_delay']:.3f}, "
                     f"failed deletes {summary['failed_deletes']}")
        lines.append(f"  wrote operation log to {args.log_quality}")

    if args.out:
        results.write_csv(args.out, results.SUMMARY_HEADER, rows,
                          _echo(workload, config, args, **extra))
        lines.append(f"  wrote summary to {args.out}")
    _emit(args, lines, payload)
    return EXIT_OK


def cmd_stress_monotonic(args) -> int:
    return _run_stress(args, "stress-monotonic")


def cmd_stress_insdel(args) -> int:
    return _run_stress(args, "stress-insdel")


def cmd_simulate(args) -> int:
    import numpy as np
    from .analysis import RankErrorModel
    from .workloads import run_sequential_simulator
    from .replay import write_log

    config = build_config(args)
    queues = config.num_queues
    res = run_sequential_simulator(
        queues=queues, candidates=config.candidates, prefill=args.prefill,
        iterations=args.iterations, seed=config.seed,
        log=args.log_quality is not None, drain=args.drain)

    phase = res.phase_rank_errors()
    counts = np.bincount(phase) if phase.size else np.zeros(1, dtype=np.int64)
    rows = [["rank_error", value, int(count)]
            for value, count in enumerate(counts) if count]

    model = RankErrorModel.from_queue_count(queues, config.candidates)
    mean = float(phase.mean()) if phase.size else 0.0
    payload = {
        "workload": "simulate", "queues": queues,
        "candidates": config.candidates, "prefill": args.prefill,
        "iterations": args.iterations, "deletions": res.main_deletions,
        "failed": res.failed, "mean_rank_error": mean,
        "expected_rank_error": model.expected_rank_error(),
        "elapsed": res.elapsed,
    }
    lines = [f"simulate: queues={queues} d={config.candidates} "
             f"prefill={args.prefill} iterations={args.iterations}",
             f"  deletions={res.main_deletions} failed={res.failed} "
             f"elapsed={res.elapsed:.3f}s",
             f"  mean rank error {mean:.3f} "
             f"(geometric model {model.expected_rank_error():.3f})"]
    if config.candidates == 2:
        payload["long_run_mean_two_choice"] = model.long_run_mean_two_choice()
        lines.append(f"  two-choice long-run mean "
                     f"{model.long_run_mean_two_choice():.3f}")

    if args.log_quality:
        write_log(args.log_quality, res.records)
        lines.append(f"  wrote operation log to {args.log_quality}")
    if args.out:
        results.write_csv(
            args.out, results.HISTOGRAM_HEADER, rows,
            _echo("simulate", config, args, prefill=args.prefill,
                  iterations=args.iterations))
        lines.append(f"  wrote rank-error histogram to {args.out}")
    _emit(args, lines, payload)
    return EXIT_OK


def cmd_replay(args) -> int:
    from .replay import bin_timeseries, read_log, replay

    records = read_log(args.log)
    report = replay(records, fanout=args.fanout)
    summary = report.summary()
    payload = {"workload": "replay", "log": args.log, **summary}
    lines = [f"replay: {args.log} ({len(records)} records)"]
    for key, value in summary.items():
        lines.append(f"  {key}: {value}")

    if args.out:
        rows = [
            [int(i), int(ts), int(key) if key != (1 << 64) - 1 else None,
             int(rank), int(delay)]
            for i, ts, key, rank, delay in zip(
                report.indices, report.timestamps, report.keys,
                report.rank_errors, report.delays)
        ]
        echo = {"workload": "replay", "bin_size": args.bin_size,
                "version": __version__}
        results.write_csv(args.out, results.REPORT_HEADER, rows, echo)
        stem = args.out[:-4] if args.out.endswith(".csv") else args.out
        results.write_json(stem + ".summary.json", summary)
        bin_rows = []
        for series, values in (("rank_error", report.rank_errors),
                               ("delay", report.delays)):
            for row in bin_timeseries(values, bin_size=args.bin_size):
                bin_rows.append([series, *row])
        results.write_csv(stem + ".bins.csv", results.BINS_HEADER,
                          bin_rows, echo)
        lines.append(f"  wrote {args.out}, {stem}.summary.json, "
                     f"{stem}.bins.csv")
    _emit(args, lines, payload)
    return EXIT_OK


def cmd_sssp(args) -> int:
    from .workloads import parse_dimacs_gr, run_sssp, sequential_sssp

    with open(args.graph) as f:
        graph = parse_dimacs_gr(f.read())
    config = build_config(args)

    rows = []
    result = None
    for rep in range(args.reps):
        result = run_sssp(graph, args.source, config, pin=args.pin)
        rows.append([
            "sssp", rep, config.threads, config.queue_factor,
            config.candidates, config.stickiness, config.period,
            config.num_queues, result.processed, None, None, None, None,
            None, result.processed, result.scanned, round(result.elapsed, 6),
        ])

    payload = {
        "workload": "sssp", "graph": args.graph, "source": args.source,
        "nodes": graph.n, "edges": graph.m, "processed": result.processed,
        "scanned": result.scanned, "elapsed": result.elapsed,
        "wasted": result.processed - result.scanned,
    }
    lines = [f"sssp: {args.graph} n={graph.n} m={graph.m} "
             f"source={args.source} p={config.threads}",
             f"  processed={result.processed} scanned={result.scanned} "
             f"wasted={result.processed - result.scanned} "
             f"elapsed={result.elapsed:.3f}s"]

    code = EXIT_OK
    if args.verify:
        expected = sequential_sssp(graph, args.source)
        mismatches = sum(1 for a, b in zip(result.distances, expected)
                         if a != b)
        payload["verify_mismatches"] = mismatches
        if mismatches:
            lines.append(f"  VERIFY FAILED: {mismatches} distances differ "
                         f"from sequential Dijkstra")
            code = EXIT_VERIFY
        else:
            lines.append("  verify: distances match sequential Dijkstra")

    if args.out:
        results.write_csv(
            args.out, results.SUMMARY_HEADER, rows,
            _echo("sssp", config, args, graph=args.graph,
                  source=args.source, reps=args.reps))
        lines.append(f"  wrote summary to {args.out}")
    _emit(args, lines, payload)
    return code


def cmd_knapsack(args) -> int:
    from .workloads import generate_knapsack, knapsack_dp, run_knapsack

    config = build_config(args)
    inst = generate_knapsack(
        items=args.items, max_weight=args.max_weight,
        surplus_factor=args.surplus, capacity_fraction=args.capacity_fraction,
        seed=config.seed)

    rows = []
    result = None
    for rep in range(args.reps):
        result = run_knapsack(inst, config, pin=args.pin)
        rows.append([
            "knapsack", rep, config.threads, config.queue_factor,
            config.candidates, config.stickiness, config.period,
            config.num_queues, result.processed, None, None, None, None,
            None, result.processed, None, round(result.elapsed, 6),
        ])

    payload = {
        "workload": "knapsack", "items": inst.items,
        "capacity": inst.capacity, "best_value": result.best_value,
        "processed": result.processed, "elapsed": result.elapsed,
    }
    lines = [f"knapsack: items={inst.items} capacity={inst.capacity} "
             f"p={config.threads}",
             f"  best value {result.best_value}, "
             f"processed {result.processed} nodes in "
             f"{result.elapsed:.3f}s"]

    code = EXIT_OK
    if args.verify:
        optimum = knapsack_dp(inst)
        payload["optimum"] = optimum
        if result.best_value != optimum:
            lines.append(f"  VERIFY FAILED: best value {result.best_value} "
                         f"!= DP optimum {optimum}")
            code = EXIT_VERIFY
        else:
            lines.append("  verify: matches DP optimum")

    if args.out:
        results.write_csv(
            args.out, results.SUMMARY_HEADER, rows,
            _echo("knapsack", config, args, items=args.items,
                  max_weight=args.max_weight, surplus_factor=args.surplus,
                  capacity_fraction=args.capacity_fraction, reps=args.reps))
        lines.append(f"  wrote summary to {args.out}")
    _emit(args, lines, payload)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mq-bench",
        description="Benchmark and analyze a relaxed concurrent priority queue.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ap = sub.add_parser(
        "stress-monotonic",
        help="alternating delete/insert benchmark over a drifting key space")
    _queue_flags(ap)
    ap.add_argument("--prefill", type=int, default=1 << 16, metavar="N",
                    help="elements preloaded before timing (default 65536)")
    ap.add_argument("--iterations", type=int, default=100_000, metavar="N",
                    help="delete+insert rounds per thread (default 100000)")
    ap.add_argument("--reps", type=int, default=5,
                    help="repetitions (default 5)")
    ap.add_argument("--timeout", type=float, default=5.0, metavar="SEC",
                    help="per-rep time budget (default 5.0)")
    ap.add_argument("--log-quality", metavar="PATH",
                    help="record the final rep's operations to a log file")
    ap.add_argument("--pin", action="store_true",
                    help="pin worker threads to CPUs when supported")
    _output_flags(ap)
    ap.set_defaults(func=cmd_stress_monotonic)

    ap = sub.add_parser(
        "stress-insdel",
        help="bulk insert phase then a cooperative drain, with conservation checks")
    _queue_flags(ap)
    ap.add_argument("--iterations", type=int, default=100_000, metavar="N",
                    help="elements inserted per thread (default 100000)")
    ap.add_argument("--reps", type=int, default=5,
                    help="repetitions (default 5)")
    ap.add_argument("--log-quality", metavar="PATH",
                    help="record the final rep's operations to a log file")
    ap.add_argument("--pin", action="store_true",
                    help="pin worker threads to CPUs when supported")
    _output_flags(ap)
    ap.set_defaults(func=cmd_stress_insdel)

    ap = sub.add_parser(
        "simulate",
        help="sequential rank-error simulator (use -c N -p 1 for N queues)")
    _queue_flags(ap)
    ap.add_argument("--prefill", type=int, default=1 << 20, metavar="N",
                    help="elements preloaded (default 1048576)")
    ap.add_argument("--iterations", type=int, default=1_000_000, metavar="N",
                    help="delete+insert rounds (default 1000000)")
    ap.add_argument("--drain", action="store_true",
                    help="empty the queues after the iteration phase")
    ap.add_argument("--log-quality", metavar="PATH",
                    help="write the synthetic operation log here")
    _output_flags(ap)
    ap.set_defaults(func=cmd_simulate)

    ap = sub.add_parser(
        "replay",
        help="replay an operation log and report per-deletion quality")
    ap.add_argument("log", help="operation log (binary or text)")
    ap.add_argument("--fanout", type=int, default=16,
                    help="replay tree fanout (default 16)")
    ap.add_argument("--bin-size", type=int, default=1 << 18, metavar="N",
                    help="deletions per time-series bin (default 262144)")
    _output_flags(ap)
    ap.set_defaults(func=cmd_replay)

    ap = sub.add_parser(
        "sssp", help="single-source shortest paths on a DIMACS .gr graph")
    _queue_flags(ap)
    ap.add_argument("--graph", required=True, metavar="PATH",
                    help="DIMACS shortest-path graph file")
    ap.add_argument("--source", type=int, default=0, metavar="NODE",
                    help="source node, zero-based (default 0)")
    ap.add_argument("--reps", type=int, default=1,
                    help="repetitions (default 1)")
    ap.add_argument("--verify", action="store_true",
                    help="compare distances against sequential Dijkstra")
    ap.add_argument("--pin", action="store_true",
                    help="pin worker threads to CPUs when supported")
    _output_flags(ap)
    ap.set_defaults(func=cmd_sssp)

    ap = sub.add_parser(
        "knapsack",
        help="branch-and-bound 0/1 knapsack on a generated instance")
    _queue_flags(ap)
    ap.add_argument("--items", type=int, default=1000,
                    help="instance size (default 1000)")
    ap.add_argument("--max-weight", type=int, default=1000, metavar="W",
                    help="maximum item weight (default 1000)")
    ap.add_argument("--surplus", type=float, default=1.15, metavar="F",
                    help="value surplus factor (default 1.15)")
    ap.add_argument("--capacity-fraction", type=float, default=0.5,
                    metavar="F", help="capacity as a fraction of total "
                    "weight (default 0.5)")
    ap.add_argument("--reps", type=int, default=1,
                    help="repetitions (default 1)")
    ap.add_argument("--verify", action="store_true",
                    help="compare the result against dynamic programming")
    ap.add_argument("--pin", action="store_true",
                    help="pin worker threads to CPUs when supported")
    _output_flags(ap)
    ap.set_defaults(func=cmd_knapsack)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"mq-bench: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"mq-bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
