"""Benchmark workloads driving the relaxed queue."""

from .stress import (  # noqa: F401
    StressOutcome,
    RepMetrics,
    run_stress_monotonic,
    run_stress_insert_delete,
    drain_parallel,
)
from .simulator import SimulationResult, run_sequential_simulator  # noqa: F401
from .graphs import (  # noqa: F401
    Graph,
    DimacsError,
    parse_dimacs_gr,
    write_dimacs_gr,
    random_graph,
)
from .sssp import SsspResult, run_sssp, sequential_sssp  # noqa: F401
from .knapsack import (  # noqa: F401
    KnapsackInstance,
    KnapsackResult,
    generate_knapsack,
    greedy_bounds,
    knapsack_dp,
    run_knapsack,
    sequential_knapsack,
)
