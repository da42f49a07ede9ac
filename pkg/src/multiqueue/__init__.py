"""Relaxed concurrent priority queue with benchmarking and analysis tools.

The core structure spreads elements over many small internal queues; deletion
samples a few queues and takes the best top element it sees, trading strict
ordering for throughput. This package provides the queue itself (mq), the
buffered internal queues (pq_core), closed-form rank-error models (analysis),
cooperative termination protocols (termination), offline quality replay
(replay), and benchmark workloads plus a CLI (workloads, cli).
"""

__version__ = "0.1.0"

from .pq_core import EMPTY_KEY, MAX_VALUE, KaryHeap, InternalQueue  # noqa: F401
from .mq import (  # noqa: F401
    Config,
    ConfigError,
    Handle,
    MultiQueue,
    PermutationArray,
    PRESETS,
    STICKINESS_MODES,
    config_with,
    preset_config,
)
from .analysis import RankErrorModel, empirical_tail, ks_distance  # noqa: F401
from .termination import (  # noqa: F401
    AtomicCounter,
    CountingState,
    TerminationState,
    process_until_empty,
    process_until_empty_counting,
)
from .replay import (  # noqa: F401
    DELETE_FAILED,
    DELETE_SUCCESS,
    INSERT,
    LogFormatError,
    QualityReport,
    ReplayError,
    ReplayTree,
    bin_timeseries,
    merge_logs,
    parse_log_text,
    read_log,
    replay,
    replay_naive,
    write_log,
    write_log_text,
)
from .rng import SplitMix64, mix64, stream_seed  # noqa: F401
