"""Minor embedding of Ising models onto sparse hardware graphs.

Each logical spin is represented by a *chain*, a connected set of physical
qubits.  Chains are kept aligned by a ferromagnetic coupling ``-P`` on the
edges of a spanning tree of each chain; a ``+P`` offset per tree edge makes
every chain-consistent physical state have exactly the logical energy.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import ConfigError, ConsistencyError
from .ising import IsingModel, as_spins, brute_force_ground_state, energy


@dataclass(frozen=True)
class HardwareGraph:
    """Undirected qubit graph.

    ``family`` optionally records how the graph was generated, e.g.
    ``("chimera", m, n, t)``; the embedder uses it for a structured fallback.
    """

    n_qubits: int
    edges: frozenset
    family: tuple = ()

    def __post_init__(self):
        canon = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ConfigError(f"self-loop on qubit {a}")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ConfigError(f"edge ({a}, {b}) references a missing qubit")
            canon.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(canon))

    def to_networkx(self) -> nx.Graph:
        return self._graph.copy()

    @cached_property
    def _graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_qubits))
        g.add_edges_from(self.edges)
        return g

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def max_degree(self) -> int:
        return max((d for _, d in self.to_networkx().degree()), default=0)

    def dumps(self) -> str:
        head = " ".join(map(str, (self.n_qubits, *self.family)))
        lines = [head] + [f"{a} {b}" for a, b in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "HardwareGraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        head = rows[0]
        family = (head[1], *map(int, head[2:])) if len(head) > 1 else ()
        return cls(int(head[0]), frozenset((int(a), int(b)) for a, b in rows[1:]), family)


def complete_graph(n: int) -> HardwareGraph:
    if n < 1:
        raise ConfigError("complete graph needs at least one node")
    return HardwareGraph(n, frozenset(itertools.combinations(range(n), 2)))


def grid_graph(rows: int, cols: int) -> HardwareGraph:
    if rows < 1 or cols < 1:
        raise ConfigError("grid dimensions must be positive")
    edges = set()
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.add((q, q + 1))
            if r + 1 < rows:
                edges.add((q, q + cols))
    return HardwareGraph(rows * cols, frozenset(edges))


def chimera_graph(m: int, n: int | None = None, t: int = 4) -> HardwareGraph:
    """``m x n`` tiling of ``K_{t,t}`` cells.

    Qubit ``((i * n + j) * 2 + u) * t + k`` is index ``k`` on shore ``u`` of
    cell ``(i, j)``.  Shore 0 couples vertically between cells, shore 1
    horizontally.
    """
    n = m if n is None else n
    if m < 1 or n < 1 or t < 1:
        raise ConfigError("chimera dimensions must be positive")

    def q(i, j, u, k):
        return ((i * n + j) * 2 + u) * t + k

    edges = set()
    for i in range(m):
        for j in range(n):
            for a in range(t):
                for b in range(t):
                    edges.add((q(i, j, 0, a), q(i, j, 1, b)))
                if i + 1 < m:
                    edges.add((q(i, j, 0, a), q(i + 1, j, 0, a)))
                if j + 1 < n:
                    edges.add((q(i, j, 1, a), q(i, j + 1, 1, a)))
    return HardwareGraph(m * n * 2 * t, frozenset(edges), ("chimera", m, n, t))


def demo_graph() -> HardwareGraph:
    """Seven qubits, maximum degree 3.

    Two triangles ``(0, 1, 2)`` and ``(3, 4, 5)`` joined by the edge
    ``2 - 3``; qubit 6 bridges 0 and 5.  A degree-4 logical spin cannot sit
    on a single qubit here.
    """
    edges = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5), (0, 6), (5, 6)]
    return HardwareGraph(7, frozenset(edges))


def custom_graph(n_qubits: int, edges: Iterable[Sequence[int]]) -> HardwareGraph:
    return HardwareGraph(n_qubits, frozenset(tuple(e) for e in edges))


def generate_hardware_graph(kind: str, **params) -> HardwareGraph:
    """Dispatch on ``kind``: complete, grid, demo, chimera or custom."""
    try:
        if kind == "complete":
            return complete_graph(params.get("n", 8))
        if kind == "grid":
            return grid_graph(params.get("rows", 4), params.get("cols", params.get("rows", 4)))
        if kind == "demo":
            return demo_graph()
        if kind == "chimera":
            return chimera_graph(params.get("m", 4), params.get("n"), params.get("t", 4))
        if kind == "custom":
            return custom_graph(params["n_qubits"], params["edges"])
    except KeyError as exc:
        raise ConfigError(f"missing hardware parameter {exc}") from None
    raise ConfigError(f"unknown hardware kind {kind!r}")


def coupling_graph(model: IsingModel) -> nx.Graph:
    """Logical interaction graph: one node per spin, one edge per coupling."""
    g = nx.Graph()
    g.add_nodes_from(range(model.n_spins))
    g.add_edges_from(k for k, v in model.couplings.items() if v != 0.0)
    return g


@dataclass(frozen=True)
class ChainEmbedding:
    chains: tuple[tuple[int, ...], ...]
    hardware: HardwareGraph

    @property
    def n_logical(self) -> int:
        return len(self.chains)

    def max_chain_length(self) -> int:
        return max((len(c) for c in self.chains), default=0)

    def n_qubits_used(self) -> int:
        return sum(len(c) for c in self.chains)

    def dumps(self) -> str:
        """One line per logical spin: ``index: q q q``."""
        return "".join(f"{i}: {' '.join(map(str, c))}\n" for i, c in enumerate(self.chains))


def check_embedding(emb: ChainEmbedding, logical: nx.Graph) -> list[str]:
    """Return a list of invariant violations (empty when valid)."""
    problems = []
    hw = emb.hardware._graph
    if emb.n_logical != logical.number_of_nodes():
        problems.append(f"{emb.n_logical} chains for {logical.number_of_nodes()} logical spins")
        return problems
    seen: dict[int, int] = {}
    for i, chain in enumerate(emb.chains):
        if not chain:
            problems.append(f"chain {i} is empty")
            continue
        for q in chain:
            if not 0 <= q < emb.hardware.n_qubits:
                problems.append(f"chain {i} uses missing qubit {q}")
            elif q in seen:
                problems.append(f"qubit {q} shared by chains {seen[q]} and {i}")
            else:
                seen[q] = i
        if all(0 <= q < emb.hardware.n_qubits for q in chain) and not nx.is_connected(hw.subgraph(chain)):
            problems.append(f"chain {i} is not connected")
    for a, b in logical.edges:
        if not any(emb.hardware.has_edge(p, q) for p in emb.chains[a] for q in emb.chains[b]):
            problems.append(f"no hardware edge between chains {a} and {b}")
    return problems


def _identity(logical: nx.Graph, hardware: HardwareGraph) -> ChainEmbedding | None:
    n = logical.number_of_nodes()
    if n > hardware.n_qubits or any(not hardware.has_edge(a, b) for a, b in logical.edges):
        return None
    return ChainEmbedding(tuple((i,) for i in range(n)), hardware)


def _placement_order(logical: nx.Graph, rng: np.random.Generator) -> list[int]:
    """Breadth-first order from high-degree nodes, ties randomized."""
    order: list[int] = []
    done: set[int] = set()
    nodes = list(logical.nodes)
    rng.shuffle(nodes)
    nodes.sort(key=lambda v: -logical.degree(v))
    for start in nodes:
        if start in done:
            continue
        queue = deque([start])
        done.add(start)
        while queue:
            v = queue.popleft()
            order.append(v)
            nbrs = [u for u in logical.neighbors(v) if u not in done]
            rng.shuffle(nbrs)
            nbrs.sort(key=lambda u: -logical.degree(u))
            for u in nbrs:
                done.add(u)
                queue.append(u)
    return order


class _Router:
    """Chain routing with overlap penalties (rip-up and reroute).

    Chains may share qubits while the embedding is being built.  Entering a
    qubit costs ``(1 + history) * base ** usage``: ``base`` grows every pass
    and ``history`` accumulates past congestion, so contested qubits are
    eventually abandoned by all but one chain.
    """

    def __init__(self, logical: nx.Graph, hardware: HardwareGraph, rng: np.random.Generator):
        self.logical = logical
        self.n = hardware.n_qubits
        self.rng = rng
        e = np.array(sorted(hardware.edges), dtype=np.int64).reshape(-1, 2)
        self.src = np.concatenate([e[:, 0], e[:, 1]])
        self.dst = np.concatenate([e[:, 1], e[:, 0]])
        self.usage = np.zeros(self.n, dtype=np.int64)
        self.history = np.zeros(self.n)
        self.chains: dict[int, np.ndarray] = {}

    def _weights(self, base: float) -> np.ndarray:
        return (1.0 + self.history) * base ** self.usage.astype(float) + 1e-3 * self.rng.random(self.n)

    def age(self) -> None:
        """Remember congestion so qubits that stay contested grow expensive."""
        self.history += np.maximum(self.usage - 1, 0)

    def route(self, v: int, base: float) -> None:
        old = self.chains.pop(v, None)
        if old is not None:
            self.usage[old] -= 1
        w = self._weights(base)
        placed = [u for u in self.logical.neighbors(v) if u in self.chains]
        if not placed:
            root = int(np.argmin(w))
            chain = np.array([root])
        else:
            graph = csr_matrix((w[self.dst], (self.src, self.dst)), shape=(self.n, self.n))
            total = np.zeros(self.n)
            preds = []
            for u in placed:
                srcs = self.chains[u]
                dist, pred = dijkstra(graph, indices=srcs, min_only=True, return_predecessors=True)[:2]
                # cost of the path excluding the root itself
                d = dist - w
                d[srcs] = 0.0
                total += d
                preds.append((set(srcs.tolist()), pred))
            total += w
            root = int(np.argmin(total))
            if not np.isfinite(total[root]):
                raise _Unroutable()
            members = {root}
            for srcs, pred in preds:
                q = int(pred[root])
                while q >= 0 and q not in srcs:
                    members.add(q)
                    q = int(pred[q])
            chain = np.array(sorted(members))
        self.chains[v] = chain
        self.usage[chain] += 1


class _Unroutable(Exception):
    pass


def _attempt(logical: nx.Graph, hardware: HardwareGraph, rng: np.random.Generator,
             passes: int) -> ChainEmbedding | None:
    router = _Router(logical, hardware, rng)
    order = _placement_order(logical, rng)
    try:
        cap = 4.0 * hardware.n_qubits
        for v in order:
            router.route(v, 2.0)
        for p in range(passes):
            if router.usage.max() <= 1:
                break
            router.age()
            rng.shuffle(order)
            for v in order:
                router.route(v, min(cap, 4.0 * 2.0 ** p))
    except _Unroutable:
        return None
    if router.usage.max() > 1:
        return None
    chains = tuple(tuple(int(q) for q in router.chains[i]) for i in range(logical.number_of_nodes()))
    emb = ChainEmbedding(chains, hardware)
    return emb if not check_embedding(emb, logical) else None


def find_embedding(logical, hardware: HardwareGraph, seed: int = 0,
                   retries: int = 10, passes: int = 30) -> ChainEmbedding | None:
    """Heuristic minor embedding; ``None`` when every retry fails.

    ``logical`` is a networkx graph on nodes ``0..n-1`` or an
    :class:`IsingModel` (its coupling graph is used).  The identity map is
    tried first.  Otherwise each logical node is routed, in a randomized
    breadth-first order, as a shortest-path tree towards the chains of its
    neighbours; shared qubits are penalized more heavily on every pass until
    no qubit belongs to two chains.  Dense graphs can deadlock this router;
    on chimera hardware a clique layout is the last resort.
    """
    if isinstance(logical, IsingModel):
        logical = coupling_graph(logical)
    if sorted(logical.nodes) != list(range(logical.number_of_nodes())):
        raise ValueError("logical graph nodes must be 0..n-1")
    if logical.number_of_nodes() == 0:
        return ChainEmbedding((), hardware)
    emb = _identity(logical, hardware)
    if emb is not None:
        return emb
    if logical.number_of_nodes() > hardware.n_qubits:
        return None
    for attempt in range(retries):
        emb = _attempt(logical, hardware, np.random.default_rng([seed, attempt]), passes)
        if emb is not None:
            return emb
    emb = chimera_clique_embedding(logical.number_of_nodes(), hardware)
    if emb is not None and not check_embedding(emb, logical):
        return emb
    return None


def chimera_clique_embedding(n_logical: int, hardware: HardwareGraph) -> ChainEmbedding | None:
    """Cross-shaped chains that embed a complete graph in a chimera tiling.

    Logical node ``b * t + k`` takes shore-1 qubit ``k`` of cells ``(b, 0..b)``
    and shore-0 qubit ``k`` of cells ``(b..M-1, b)`` with ``M = min(m, n)``.
    Any two chains meet inside one cell, so every logical graph with at most
    ``t * M`` nodes embeds.  Returns ``None`` for non-chimera hardware or when
    the graph is too large.
    """
    if not hardware.family or hardware.family[0] != "chimera":
        return None
    _, m, n, t = hardware.family
    M = min(m, n)
    if n_logical > t * M:
        return None

    def q(i, j, u, k):
        return ((i * n + j) * 2 + u) * t + k

    chains = []
    for v in range(n_logical):
        b, k = divmod(v, t)
        chain = [q(b, j, 1, k) for j in range(b + 1)] + [q(i, b, 0, k) for i in range(b, M)]
        chains.append(tuple(sorted(chain)))
    return ChainEmbedding(tuple(chains), hardware)


def chain_tree_edges(chain: Sequence[int], hardware: HardwareGraph) -> list[tuple[int, int]]:
    """Breadth-first spanning tree of a chain from its lowest qubit."""
    members = set(chain)
    hw = hardware._graph
    root = min(chain)
    seen = {root}
    queue = deque([root])
    edges = []
    while queue:
        q = queue.popleft()
        for r in sorted(hw.neighbors(q)):
            if r in members and r not in seen:
                seen.add(r)
                edges.append((min(q, r), max(q, r)))
                queue.append(r)
    return edges


@dataclass(frozen=True)
class EmbeddedModel:
    physical: IsingModel
    chain_strength: float
    embedding: ChainEmbedding
    penalty_edges: tuple[tuple[int, int], ...]


def embed_model(model: IsingModel, emb: ChainEmbedding, chain_strength: float) -> EmbeddedModel:
    """Physical model over all hardware qubits.

    Fields are split evenly along chains, each coupling sits on the
    lexicographically smallest hardware edge joining the two chains, and
    every spanning-tree edge of a chain carries ``-chain_strength``.
    """
    if not chain_strength > 0:
        raise ConfigError("chain strength must be > 0")
    issues = check_embedding(emb, coupling_graph(model))
    if issues:
        raise ConsistencyError("; ".join(issues))
    hw = emb.hardware
    h = np.zeros(hw.n_qubits)
    for i, chain in enumerate(emb.chains):
        h[list(chain)] += model.fields[i] / len(chain)
    couplings: dict[tuple[int, int], float] = {}
    for (i, j), v in model.couplings.items():
        pairs = sorted((min(p, q), max(p, q)) for p in emb.chains[i] for q in emb.chains[j]
                       if hw.has_edge(p, q))
        couplings[pairs[0]] = couplings.get(pairs[0], 0.0) + v
    penalty = []
    for chain in emb.chains:
        for e in chain_tree_edges(chain, hw):
            couplings[e] = couplings.get(e, 0.0) - chain_strength
            penalty.append(e)
    offset = model.offset + chain_strength * len(penalty)
    physical = IsingModel(hw.n_qubits, couplings, h, offset)
    return EmbeddedModel(physical, float(chain_strength), emb, tuple(penalty))


def default_chain_strength(model: IsingModel) -> float:
    return max(1.0, 1.5 * model.max_abs_coefficient())


def is_chain_consistent(state, emb: ChainEmbedding) -> bool:
    s = np.asarray(state)
    return all(len(set(s[list(c)].tolist())) == 1 for c in emb.chains)


def unembed(state, emb: ChainEmbedding) -> np.ndarray:
    """Majority vote per chain; an exact tie resolves to +1."""
    s = as_spins(state, emb.hardware.n_qubits)
    return np.array([1 if s[list(c)].sum() >= 0 else -1 for c in emb.chains], dtype=np.int8)


def extend_state(logical_state, emb: ChainEmbedding, fill: int = -1) -> np.ndarray:
    """Chain-consistent physical state for a logical state; unused qubits get ``fill``."""
    out = np.full(emb.hardware.n_qubits, fill, dtype=np.int8)
    for v, chain in zip(np.asarray(logical_state), emb.chains):
        out[list(chain)] = v
    return out


@dataclass(frozen=True)
class PenaltyCheck:
    chain_strength: float
    chain_consistent: bool
    ground_state_preserved: bool

    @property
    def ok(self) -> bool:
        return self.chain_consistent and self.ground_state_preserved


def check_penalty(model: IsingModel, emb: ChainEmbedding, chain_strength: float) -> PenaltyCheck:
    """Exhaustively test one chain strength.

    The physical ground state must be chain-consistent and unembed to a
    logical state with the logical ground energy.  Energies are compared
    rather than states because symmetric models have degenerate ground states.
    """
    _, e_logical = brute_force_ground_state(model)
    phys = embed_model(model, emb, chain_strength).physical
    state = brute_force_ground_state(phys)[0]
    consistent = is_chain_consistent(state, emb)
    tol = 1e-9 * max(1.0, abs(e_logical))
    preserved = consistent and abs(energy(model, unembed(state, emb)) - e_logical) <= tol
    return PenaltyCheck(float(chain_strength), consistent, preserved)


def penalty_sweep(model: IsingModel, emb: ChainEmbedding, strengths: Iterable[float]) -> list[PenaltyCheck]:
    return [check_penalty(model, emb, p) for p in strengths]


def penalty_threshold(model: IsingModel, emb: ChainEmbedding, start: float = 1.0 / 64,
                      limit: float = 1e6) -> float:
    """Smallest power-of-two multiple of ``start`` at which :func:`check_penalty` passes.

    Returns ``start`` if even the first probe passes; raises
    :class:`ConsistencyError` if nothing up to ``limit`` does.
    """
    p = start
    while p <= limit:
        if check_penalty(model, emb, p).ok:
            return p
        p *= 2.0
    raise ConsistencyError(f"no chain strength up to {limit} preserves the ground state")
