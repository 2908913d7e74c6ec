"""Population structures: generators, validation and edge-list I/O.

All generators are deterministic for a fixed seed. Random families are
redrawn (with a derived seed per attempt) until the sample is connected.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np

MAX_ATTEMPTS = 100

FAMILIES = ("lattice2d", "random_regular", "erdos_renyi", "watts_strogatz", "barabasi_albert")


class GraphError(ValueError):
    """Infeasible graph parameters or malformed graph data."""


@dataclass(frozen=True, eq=True)
class Graph:
    """Undirected simple graph with sorted neighbour lists."""

    n: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.adjacency) != self.n:
            raise GraphError(f"adjacency has {len(self.adjacency)} rows, expected {self.n}")
        for i, nbrs in enumerate(self.adjacency):
            if list(nbrs) != sorted(set(nbrs)):
                raise GraphError(f"neighbour list of node {i} is not sorted/unique")
            for j in nbrs:
                if j == i:
                    raise GraphError(f"self-loop at node {i}")
                if not 0 <= j < self.n:
                    raise GraphError(f"node {i} has out-of-range neighbour {j}")
                if i not in self.adjacency[j]:
                    raise GraphError(f"edge ({i}, {j}) is not symmetric")

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs))

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "Graph":
        mapping = {node: i for i, node in enumerate(sorted(g.nodes()))}
        return cls.from_edges(len(mapping), ((mapping[u], mapping[v]) for u, v in g.edges()))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def n_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    @property
    def mean_degree(self) -> float:
        return 2.0 * self.n_edges / self.n

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j]

    def is_regular(self) -> bool:
        return bool(np.all(self.degrees == self.degrees[0]))

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in self.adjacency[i]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.n

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) arrays for the simulation kernels."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(self.degrees)
        indices = np.fromiter(
            (j for nbrs in self.adjacency for j in nbrs), dtype=np.int64, count=int(indptr[-1])
        )
        return indptr, indices

    def __hash__(self):
        return hash((self.n, self.adjacency))


@dataclass(frozen=True)
class GraphSpec:
    """Which network family to build, with its parameters.

    ``n`` is ignored for ``lattice2d`` (N = L*L). Defaults follow the
    average-degree-4 setup used for all topologies.
    """

    family: str = "lattice2d"
    n: int = 100
    L: int = 10
    k: int = 4
    mean_degree: float = 4.0
    base_degree: int = 4
    rewire_p: float = 0.1
    m0: int = 6
    m: int = 2
    seed: int = 0

    @property
    def size(self) -> int:
        return self.L * self.L if self.family == "lattice2d" else self.n

    def validate(self) -> None:
        f = self.family
        if f not in FAMILIES:
            raise GraphError(f"unknown graph family {f!r}; expected one of {FAMILIES}")
        if f == "lattice2d":
            if self.L < 3:
                raise GraphError("lattice2d needs L >= 3 for a simple degree-4 torus")
            return
        if self.n < 3:
            raise GraphError("graph needs n >= 3")
        if f == "random_regular":
            if not 0 < self.k < self.n:
                raise GraphError(f"random_regular needs 0 < k < n, got k={self.k}")
            if (self.n * self.k) % 2:
                raise GraphError(f"random_regular infeasible: n*k = {self.n * self.k} is odd")
        elif f == "erdos_renyi":
            if self.mean_degree <= 0:
                raise GraphError("erdos_renyi needs mean_degree > 0")
            if self._er_edges() > self.n * (self.n - 1) // 2:
                raise GraphError("erdos_renyi mean_degree too large for n")
        elif f == "watts_strogatz":
            if self.base_degree <= 0 or self.base_degree % 2:
                raise GraphError("watts_strogatz base_degree must be positive and even")
            if self.base_degree >= self.n:
                raise GraphError("watts_strogatz base_degree must be < n")
            if not 0.0 <= self.rewire_p <= 1.0:
                raise GraphError("watts_strogatz rewire_p must lie in [0, 1]")
        elif f == "barabasi_albert":
            if self.m <= 0 or self.m0 <= 0:
                raise GraphError("barabasi_albert needs positive m0 and m")
            if self.m > self.m0:
                raise GraphError(f"barabasi_albert needs m <= m0, got m={self.m}, m0={self.m0}")
            if self.m0 >= self.n:
                raise GraphError("barabasi_albert needs m0 < n")

    def _er_edges(self) -> int:
        return int(np.ceil(self.mean_degree * self.n / 2.0))


def lattice2d(L: int) -> Graph:
    """L x L torus with von Neumann neighbourhood (every degree is 4)."""
    if L < 3:
        raise GraphError("lattice2d needs L >= 3")
    edges = []
    for x in range(L):
        for y in range(L):
            i = x * L + y
            edges.append((i, ((x + 1) % L) * L + y))
            edges.append((i, x * L + (y + 1) % L))
    return Graph.from_edges(L * L, edges)


def _attempt_seed(seed: int, attempt: int) -> int:
    return int(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, attempt]).generate_state(1, np.uint64)[0])


def _draw(spec: GraphSpec, seed: int) -> nx.Graph:
    f = spec.family
    if f == "random_regular":
        return nx.random_regular_graph(spec.k, spec.n, seed=seed)
    if f == "erdos_renyi":
        return nx.gnm_random_graph(spec.n, spec._er_edges(), seed=seed)
    if f == "watts_strogatz":
        return nx.watts_strogatz_graph(spec.n, spec.base_degree, spec.rewire_p, seed=seed)
    if f == "barabasi_albert":
        return nx.barabasi_albert_graph(spec.n, spec.m, seed=seed, initial_graph=nx.complete_graph(spec.m0))
    raise GraphError(f"no random generator for {f!r}")


def generate(spec: GraphSpec) -> Graph:
    """Build the graph described by ``spec``; raises GraphError if infeasible."""
    spec.validate()
    if spec.family == "lattice2d":
        return lattice2d(spec.L)
    for attempt in range(MAX_ATTEMPTS):
        g = Graph.from_networkx(_draw(spec, _attempt_seed(spec.seed, attempt)))
        if g.n == spec.n and g.is_connected():
            return g
    raise GraphError(f"{spec.family}: no connected sample within {MAX_ATTEMPTS} attempts")


def save_edge_list(g: Graph) -> str:
    lines = [f"# n={g.n}"]
    lines.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(lines) + "\n"


def load_edge_list(text: str, n: int | None = None) -> Graph:
    """Parse whitespace-separated ``u v`` pairs (0-based).

    The node count comes from ``n``, else from a ``# n=`` header line, else
    from the largest index seen.
    """
    edges = []
    header_n = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("n="):
                header_n = int(body[2:])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer node index in {raw!r}") from None
        if u < 0 or v < 0:
            raise GraphError(f"line {lineno}: negative node index")
        if u == v:
            raise GraphError(f"line {lineno}: self-loop at node {u}")
        edges.append((u, v))
    size = n if n is not None else header_n
    if size is None:
        size = 1 + max((max(e) for e in edges), default=-1)
    for u, v in edges:
        if u >= size or v >= size:
            raise GraphError(f"edge ({u}, {v}) out of range for n={size}")
    return Graph.from_edges(size, edges)
