"""Graph containers shared by every construction.

``MultiGraph`` stores a configuration-model realization at half-edge level:
half-edge ids are contiguous and grouped by vertex, and ``matching`` is a
fixed-point-free involution on them. ``SimpleGraph`` stores an edge set of
unordered distinct pairs. Both expose ``edge_array()`` and ``adjacency()`` so
component code never needs to know which one it was handed.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple, Union

import numpy as np
from scipy import sparse

from .error_handling import LabValidationError

logger = logging.getLogger(__name__)


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _sparse_adjacency(n: int, edges: np.ndarray) -> sparse.csr_matrix:
    """Symmetric edge-multiplicity matrix; a self-loop contributes 2 on the diagonal."""
    if edges.size == 0:
        return sparse.csr_matrix((n, n), dtype=np.int64)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    data = np.ones(rows.size, dtype=np.int64)
    return sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


@dataclass(frozen=True)
class MultiGraph:
    n: int
    half_edge_owner: np.ndarray
    matching: np.ndarray

    def __post_init__(self):
        owner = np.asarray(self.half_edge_owner, dtype=np.int64).reshape(-1)
        match = np.asarray(self.matching, dtype=np.int64).reshape(-1)
        if owner.size != match.size:
            raise LabValidationError('owner and matching lengths differ',
                                     context={'owners': owner.size, 'matching': match.size})
        if owner.size:
            if owner.min() < 0 or owner.max() >= self.n:
                raise LabValidationError('half-edge owner out of range', context={'n': self.n})
            if np.any(np.diff(owner) < 0):
                raise LabValidationError('half-edge ids must be grouped by vertex')
            ids = np.arange(match.size)
            if match.min() < 0 or match.max() >= match.size:
                raise LabValidationError('matching refers to unknown half-edges')
            if np.any(match == ids) or np.any(match[match] != ids):
                raise LabValidationError('matching must be a fixed-point-free involution')
        object.__setattr__(self, 'half_edge_owner', _readonly(owner.copy()))
        object.__setattr__(self, 'matching', _readonly(match.copy()))

    @classmethod
    def from_edge_list(cls, n: int, edges: Union[np.ndarray, Iterable[Tuple[int, int]]]) -> 'MultiGraph':
        """Half-edge form of an edge list; repeated rows are multi-edges, (u, u) is a loop."""
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64).reshape(-1, 2)
        m = arr.shape[0]
        stubs = np.concatenate([arr[:, 0], arr[:, 1]])
        order = np.argsort(stubs, kind='stable')
        new_id = np.empty(2 * m, dtype=np.int64)
        new_id[order] = np.arange(2 * m)
        matching = np.empty(2 * m, dtype=np.int64)
        matching[new_id[:m]] = new_id[m:]
        matching[new_id[m:]] = new_id[:m]
        return cls(n=n, half_edge_owner=stubs[order], matching=matching)

    @property
    def total_half_edges(self) -> int:
        return int(self.half_edge_owner.size)

    @property
    def num_edges(self) -> int:
        return self.total_half_edges // 2

    def degrees(self) -> np.ndarray:
        return np.bincount(self.half_edge_owner, minlength=self.n).astype(np.int64)

    def edge_array(self) -> np.ndarray:
        """(m, 2) array, one row per matched pair, smaller endpoint first."""
        ids = np.arange(self.total_half_edges)
        first = ids[ids < self.matching]
        u = self.half_edge_owner[first]
        v = self.half_edge_owner[self.matching[first]]
        return np.column_stack([np.minimum(u, v), np.maximum(u, v)])

    def loop_count(self) -> int:
        edges = self.edge_array()
        return int(np.count_nonzero(edges[:, 0] == edges[:, 1]))

    def adjacency(self) -> sparse.csr_matrix:
        return _sparse_adjacency(self.n, self.edge_array())

    def neighbors(self, v: int) -> List[Tuple[int, int]]:
        """(neighbor, multiplicity) pairs of v; a loop lists v with its loop count."""
        start, stop = np.searchsorted(self.half_edge_owner, [v, v + 1])
        partners = self.half_edge_owner[self.matching[start:stop]]
        counts = Counter(int(u) for u in partners)
        if v in counts:
            counts[v] //= 2
        return sorted(counts.items())

    def edge_multiset(self) -> Counter:
        return Counter(map(tuple, self.edge_array().tolist()))

    def to_simple(self) -> Tuple['SimpleGraph', int]:
        """Erase loops and collapse multi-edges; returns the graph and the erased-edge count."""
        edges = self.edge_array()
        proper = edges[edges[:, 0] != edges[:, 1]]
        unique = np.unique(proper, axis=0) if proper.size else proper.reshape(0, 2)
        return SimpleGraph(self.n, unique), int(edges.shape[0] - unique.shape[0])


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if arr.size:
            if arr.min() < 0 or arr.max() >= self.n:
                raise LabValidationError('edge endpoint out of range', context={'n': self.n})
            arr = np.column_stack([arr.min(axis=1), arr.max(axis=1)])
            if np.any(arr[:, 0] == arr[:, 1]):
                raise LabValidationError('simple graphs cannot hold self-loops')
            unique = np.unique(arr, axis=0)
            if unique.shape[0] != arr.shape[0]:
                raise LabValidationError('simple graphs cannot hold repeated pairs')
            arr = unique
        object.__setattr__(self, 'edges', _readonly(arr.copy()))

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.reshape(-1), minlength=self.n).astype(np.int64)

    def edge_array(self) -> np.ndarray:
        return self.edges

    def adjacency(self) -> sparse.csr_matrix:
        return _sparse_adjacency(self.n, self.edges)

    def edge_set(self) -> set:
        return set(map(tuple, self.edges.tolist()))

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edge_set()


Graph = Union[MultiGraph, SimpleGraph]


class LazyMatching:
    """Uniform perfect matching revealed one pair at a time.

    Unpaired half-edges sit in a pool with swap-removal, so drawing a uniform
    unpaired half-edge and removing a given one are both O(1). Pairing every
    half-edge through ``pair_uniform`` yields a uniform perfect matching
    regardless of the order in which half-edges are offered.
    """

    BUFFER = 4096

    def __init__(self, total: int, rng: np.random.Generator):
        self.rng = rng
        self.pool = np.arange(total, dtype=np.int64)
        self.position = np.arange(total, dtype=np.int64)
        self.size = total
        self.partner = np.full(total, -1, dtype=np.int64)
        self._buffer = np.empty(0)
        self._cursor = 0

    def _uniform(self) -> float:
        if self._cursor >= self._buffer.size:
            self._buffer = self.rng.random(self.BUFFER)
            self._cursor = 0
        u = self._buffer[self._cursor]
        self._cursor += 1
        return float(u)

    @property
    def unpaired(self) -> int:
        return self.size

    def is_unpaired(self, h: int) -> bool:
        return self.partner[h] < 0 and self.position[h] < self.size

    def remove(self, h: int) -> None:
        i = self.position[h]
        last = self.pool[self.size - 1]
        self.pool[i] = last
        self.position[last] = i
        self.pool[self.size - 1] = h
        self.position[h] = self.size - 1
        self.size -= 1

    def draw(self) -> int:
        """A uniform unpaired half-edge, left in the pool."""
        if self.size == 0:
            raise LabValidationError('no unpaired half-edges left')
        return int(self.pool[min(int(self._uniform() * self.size), self.size - 1)])

    def pair(self, h: int, x: int) -> None:
        self.remove(h)
        self.remove(x)
        self.partner[h] = x
        self.partner[x] = h

    def pair_uniform(self, h: int) -> int:
        """Pair h with a uniform other unpaired half-edge and return it."""
        self.remove(h)
        x = self.draw()
        self.remove(x)
        self.partner[h] = x
        self.partner[x] = h
        return x

    def matching(self) -> np.ndarray:
        if self.size:
            raise LabValidationError('matching is incomplete', context={'unpaired': self.size})
        return self.partner.copy()


def graph_summary(graph: Graph) -> Dict[str, object]:
    return {
        'n': int(graph.n),
        'edges': int(graph.edge_array().shape[0]),
        'kind': 'multigraph' if isinstance(graph, MultiGraph) else 'simple',
    }
