"""Union-find with path compression and union by size."""
from __future__ import annotations

from typing import Dict, Iterable, List, Tuple

import numpy as np


class UnionFind:
    """Disjoint sets over 0..size-1; also tracks per-set edge counts."""

    def __init__(self, size: int):
        self.size = size
        self.parents = list(range(size))
        self.set_size = [1] * size
        self.edge_count = [0] * size
        self.num_components = size

    def find(self, elem: int) -> int:
        root = elem
        while root != self.parents[root]:
            root = self.parents[root]
        # compress the path just walked
        while elem != root:
            nxt = self.parents[elem]
            self.parents[elem] = root
            elem = nxt
        return root

    def union(self, a: int, b: int) -> int:
        """Add an edge a-b; loops and repeated edges only bump the edge count."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            self.edge_count[ra] += 1
            return ra
        if self.set_size[ra] < self.set_size[rb]:
            ra, rb = rb, ra
        self.parents[rb] = ra
        self.set_size[ra] += self.set_size[rb]
        self.edge_count[ra] += self.edge_count[rb] + 1
        self.num_components -= 1
        return ra

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def add_edges(self, edges: Iterable[Tuple[int, int]]) -> 'UnionFind':
        for u, v in edges:
            self.union(int(u), int(v))
        return self

    def components(self) -> List[List[int]]:
        """Vertex lists, each sorted, ordered by their minimum vertex."""
        groups: Dict[int, List[int]] = {}
        for i in range(self.size):
            groups.setdefault(self.find(i), []).append(i)
        return sorted(groups.values(), key=lambda c: c[0])

    def size_edge_pairs(self) -> List[Tuple[int, int]]:
        """(vertices, edges) per component, components ordered by minimum vertex."""
        return [(len(c), self.edge_count[self.find(c[0])]) for c in self.components()]

    def labels(self) -> np.ndarray:
        return np.array([self.find(i) for i in range(self.size)], dtype=np.int64)
