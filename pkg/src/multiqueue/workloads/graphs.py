"""Directed weighted graphs: CSR storage, DIMACS .gr parsing, random gen."""

from __future__ import annotations

import numpy as np


class DimacsError(ValueError):
    pass


class Graph:
    """Compressed sparse row digraph with nonnegative integer weights."""

    __slots__ = ("n", "m", "offsets", "targets", "weights")

    def __init__(self, n: int, offsets, targets, weights):
        self.n = n
        self.m = len(targets)
        self.offsets = offsets
        self.targets = targets
        self.weights = weights

    @classmethod
    def from_edges(cls, n: int, sources, targets, weights) -> "Graph":
        """Build CSR from parallel edge arrays; input order kept per source."""
        sources = np.asarray(sources, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.int64)
        order = np.argsort(sources, kind="stable")
        counts = np.bincount(sources, minlength=n)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return cls(n, offsets.tolist(),
                   targets[order].tolist(), weights[order].tolist())

    def out_degree(self, u: int) -> int:
        return self.offsets[u + 1] - self.offsets[u]


def parse_dimacs_gr(text: str) -> Graph:
    """Parse DIMACS shortest-path format: 'c' comments, one 'p sp <n> <m>'
    problem line, then m 'a <u> <v> <w>' arcs with 1-based node ids.
    Duplicate arcs and self-loops are kept. Errors carry line numbers."""
    n = m = -1
    sources: list[int] = []
    targets: list[int] = []
    weights: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if n != -1:
                raise DimacsError(f"line {lineno}: second problem line")
            if len(parts) != 4 or parts[1] != "sp":
                raise DimacsError(f"line {lineno}: expected 'p sp <nodes> <arcs>'")
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"line {lineno}: non-integer problem size") from None
            if n < 1 or m < 0:
                raise DimacsError(f"line {lineno}: bad problem size n={n} m={m}")
        elif parts[0] == "a":
            if n == -1:
                raise DimacsError(f"line {lineno}: arc before problem line")
            if len(parts) != 4:
                raise DimacsError(f"line {lineno}: expected 'a <from> <to> <weight>'")
            try:
                u, v, w = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"line {lineno}: non-integer arc field") from None
            if not 1 <= u <= n or not 1 <= v <= n:
                raise DimacsError(f"line {lineno}: node id outside [1, {n}]")
            if w < 0:
                raise DimacsError(f"line {lineno}: negative weight {w}")
            sources.append(u - 1)
            targets.append(v - 1)
            weights.append(w)
        else:
            raise DimacsError(f"line {lineno}: unknown line type {parts[0]!r}")
    if n == -1:
        raise DimacsError("missing problem line")
    if len(sources) != m:
        raise DimacsError(f"problem line claims {m} arcs, found {len(sources)}")
    return Graph.from_edges(n, sources, targets, weights)


def write_dimacs_gr(graph: Graph) -> str:
    lines = [f"p sp {graph.n} {graph.m}"]
    offsets, targets, weights = graph.offsets, graph.targets, graph.weights
    for u in range(graph.n):
        for e in range(offsets[u], offsets[u + 1]):
            lines.append(f"a {u + 1} {targets[e] + 1} {weights[e]}")
    return "\n".join(lines) + "\n"


def random_graph(n: int, avg_degree: float = 4.0, max_weight: int = 1000,
                 seed: int = 1) -> Graph:
    """Uniform random digraph: round(n * avg_degree) independent uniform
    arcs with weights in [1, max_weight]. Parallel arcs and loops possible."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    m = int(round(n * avg_degree))
    rng = np.random.Generator(np.random.Philox(seed))
    sources = rng.integers(0, n, size=m)
    targets = rng.integers(0, n, size=m)
    weights = rng.integers(1, max_weight + 1, size=m)
    return Graph.from_edges(n, sources, targets, weights)
