"""Network graphs and diffusion combination weights.

Combination matrices are stored column-wise: ``A[l, k]`` is the weight node
``k`` gives to node ``l``, and every column sums to one, so the combine step
is ``w_k = sum_l A[l, k] phi_l``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ConstructionError(RuntimeError):
    """Raised when a random graph could not be made connected."""


@dataclass(frozen=True)
class NetworkTopology:
    """Undirected graph with self-loops.

    ``neighbors[k]`` is the sorted tuple of nodes that ``k`` exchanges data
    with, always including ``k`` itself.
    """

    neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        N = len(self.neighbors)
        if N < 1:
            raise ValueError("topology needs at least one node")
        for k, nbrs in enumerate(self.neighbors):
            if k not in nbrs:
                raise ValueError(f"node {k} is missing from its own neighborhood")
            for l in nbrs:
                if not 0 <= l < N:
                    raise ValueError(f"node {k} lists out-of-range neighbor {l}")
                if k not in self.neighbors[l]:
                    raise ValueError(f"asymmetric link {l} -> {k}")
        if not _connected(self.neighbors):
            raise ValueError("topology is not connected")

    @property
    def node_count(self) -> int:
        return len(self.neighbors)

    @classmethod
    def from_edges(cls, N: int, edges) -> "NetworkTopology":
        sets = [{k} for k in range(N)]
        for a, b in edges:
            sets[a].add(b)
            sets[b].add(a)
        return cls(tuple(tuple(sorted(s)) for s in sets))

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges ``(l, k)`` with ``l < k``."""
        return [(k, l) for k, nbrs in enumerate(self.neighbors) for l in nbrs if l > k]

    def degree(self, k: int) -> int:
        """Neighborhood size ``|N_k|`` (self included)."""
        return len(self.neighbors[k])

    def adjacency(self) -> np.ndarray:
        """Boolean ``N x N`` adjacency-plus-self pattern."""
        N = self.node_count
        adj = np.zeros((N, N), dtype=bool)
        for k, nbrs in enumerate(self.neighbors):
            adj[list(nbrs), k] = True
        return adj


def _components(neighbors) -> list[list[int]]:
    seen = set()
    comps = []
    for start in range(len(neighbors)):
        if start in seen:
            continue
        seen.add(start)
        comp, queue = [], deque([start])
        while queue:
            k = queue.popleft()
            comp.append(k)
            for l in neighbors[k]:
                if l not in seen:
                    seen.add(l)
                    queue.append(l)
        comps.append(sorted(comp))
    return comps


def _connected(neighbors) -> bool:
    return len(_components(neighbors)) == 1


def is_connected(topology: NetworkTopology) -> bool:
    """Breadth-first reachability of every node from node 0."""
    return _connected(topology.neighbors)


def _try_random_graph(N, d, rng):
    sets = [set() for _ in range(N)]
    for k in map(int, rng.permutation(N)):
        while len(sets[k]) < d:
            free = [l for l in range(N) if l != k and l not in sets[k] and len(sets[l]) < d]
            if not free:
                break
            l = free[rng.integers(len(free))]
            sets[k].add(l)
            sets[l].add(k)
    # nodes left short by more than one may borrow from nodes at degree d
    for k in map(int, rng.permutation(N)):
        while len(sets[k]) < d - 1:
            free = [l for l in range(N) if l != k and l not in sets[k] and len(sets[l]) <= d]
            if not free:
                break
            l = free[rng.integers(len(free))]
            sets[k].add(l)
            sets[l].add(k)
    # chain leftover components through their least-connected nodes
    comps = _components(sets)
    for left, right in zip(comps[:-1], comps[1:]):
        a = min(left, key=lambda k: (len(sets[k]), rng.random()))
        b = min(right, key=lambda k: (len(sets[k]), rng.random()))
        sets[a].add(b)
        sets[b].add(a)
    return sets


def random_connected_graph(N: int, target_degree: int, rng: np.random.Generator,
                           max_retries: int = 200) -> NetworkTopology:
    """Random connected graph with node degrees close to ``target_degree``.

    Edges are matched at random up to ``target_degree`` per node, then any
    leftover components are chained together. Draws whose degrees (self
    excluded) leave ``target_degree +/- 1`` are discarded and redrawn.

    Raises
    ------
    ValueError
        If ``N < 2`` or ``target_degree`` is not in ``[1, N)``.
    ConstructionError
        If no connected graph was drawn within ``max_retries`` attempts.
    """
    if N < 2:
        raise ValueError(f"need at least two nodes, got N={N}")
    if not 1 <= target_degree < N:
        raise ValueError(f"target_degree must be in [1, {N - 1}], got {target_degree}")
    for _ in range(max_retries):
        sets = _try_random_graph(N, target_degree, rng)
        degrees = [len(s) for s in sets]
        if _connected(sets) and max(degrees) <= target_degree + 1 \
                and min(degrees) >= target_degree - 1:
            return NetworkTopology(tuple(tuple(sorted(int(l) for l in s | {k}))
                                         for k, s in enumerate(sets)))
    raise ConstructionError(
        f"no connected graph with N={N}, degree={target_degree} after {max_retries} draws")


def ring_graph(N: int) -> NetworkTopology:
    """Cycle over ``N`` nodes (a single edge for ``N = 2``)."""
    if N < 2:
        raise ValueError(f"need at least two nodes, got N={N}")
    return NetworkTopology.from_edges(N, [(k, (k + 1) % N) for k in range(N)])


def uniform_weights(topology: NetworkTopology) -> np.ndarray:
    """``A[l, k] = 1/|N_k|`` for ``l`` in ``N_k``."""
    adj = topology.adjacency()
    if topology.node_count == 1:
        raise ValueError("a single isolated node has no diffusion weights")
    return adj / adj.sum(axis=0, keepdims=True)


def metropolis_weights(topology: NetworkTopology) -> np.ndarray:
    """Metropolis rule ``A[l, k] = 1/max(|N_k|, |N_l|)`` off the diagonal."""
    N = topology.node_count
    if N == 1:
        raise ValueError("a single isolated node has no diffusion weights")
    deg = np.array([topology.degree(k) for k in range(N)])
    A = np.zeros((N, N))
    for k, nbrs in enumerate(topology.neighbors):
        for l in nbrs:
            if l != k:
                A[l, k] = 1.0 / max(deg[k], deg[l])
        A[k, k] = 1.0 - A[:, k].sum()
    return A


def identity_weights(topology: NetworkTopology) -> np.ndarray:
    """No cooperation: every node keeps only its own estimate."""
    return np.eye(topology.node_count)


WEIGHT_RULES = {
    "uniform": uniform_weights,
    "metropolis": metropolis_weights,
    "identity": identity_weights,
}


def check_combination_matrix(A, topology: NetworkTopology | None = None, tol: float = 1e-12):
    """Raise ``ValueError`` unless ``A`` is a valid column-stochastic weight matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"combination matrix must be square, got shape {A.shape}")
    if np.any(A < 0):
        raise ValueError("combination weights must be non-negative")
    if np.max(np.abs(A.sum(axis=0) - 1.0)) > tol:
        raise ValueError("combination matrix columns must sum to one")
    if topology is not None:
        if A.shape[0] != topology.node_count:
            raise ValueError("combination matrix size does not match topology")
        if np.any(A[~topology.adjacency()] != 0):
            raise ValueError("nonzero weight between non-neighbors")


# -- plain-text serialization ------------------------------------------------
#
#   nodes <N>
#   edge <l> <k>              one line per undirected edge, l < k
#   weight <name> <l> <k> <v> one line per nonzero entry, v written with repr()


def dumps_network(topology: NetworkTopology, matrices: dict[str, np.ndarray] | None = None) -> str:
    lines = [f"nodes {topology.node_count}"]
    lines += [f"edge {l} {k}" for l, k in topology.edges()]
    for name, A in (matrices or {}).items():
        if not name.isidentifier():
            raise ValueError(f"matrix name must be an identifier, got {name!r}")
        for l, k in zip(*np.nonzero(A)):
            lines.append(f"weight {name} {l} {k} {float(A[l, k])!r}")
    return "\n".join(lines) + "\n"


def loads_network(text: str) -> tuple[NetworkTopology, dict[str, np.ndarray]]:
    N = None
    edges = []
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        try:
            if tag == "nodes":
                (N,) = map(int, rest)
            elif tag == "edge":
                l, k = map(int, rest)
                edges.append((l, k))
            elif tag == "weight":
                name, l, k, v = rest
                entries.setdefault(name, []).append((int(l), int(k), float(v)))
            else:
                raise ValueError(f"unknown record {tag!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if N is None:
        raise ValueError("missing 'nodes' record")
    topology = NetworkTopology.from_edges(N, edges)
    matrices = {}
    for name, triplets in entries.items():
        A = np.zeros((N, N))
        for l, k, v in triplets:
            A[l, k] = v
        matrices[name] = A
    return topology, matrices


def save_network(path, topology, matrices=None):
    Path(path).write_text(dumps_network(topology, matrices))


def load_network(path):
    return loads_network(Path(path).read_text())
