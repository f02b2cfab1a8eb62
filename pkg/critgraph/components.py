"""Component decomposition and component statistics.

Labels come from ``scipy.sparse.csgraph.connected_components``; distances from
unweighted breadth-first searches run in row chunks through
``scipy.sparse.csgraph.shortest_path``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .config_loader import load_settings
from .degree_models import ScalingConstants, WeightSequence
from .error_handling import LabValidationError
from .graphs import Graph
from .unionfind import UnionFind

logger = logging.getLogger(__name__)

BFS_CHUNK = 256
DOUBLE_SWEEPS = 4


@dataclass(frozen=True)
class ComponentStats:
    size: int
    edges: int
    surplus: int
    diameter: int
    weight: float
    open_half_edges: Optional[int] = None
    min_vertex: int = 0
    vertices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64),
                                 repr=False, compare=False)


@dataclass(frozen=True)
class UVector:
    pairs: Tuple[Tuple[float, int], ...]

    def xs(self) -> np.ndarray:
        return np.array([x for x, _ in self.pairs], dtype=float)

    def ys(self) -> np.ndarray:
        return np.array([y for _, y in self.pairs], dtype=float)

    def top(self, k: int) -> 'UVector':
        return UVector(self.pairs[:k])

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class SusceptibilityReport:
    s2_star: float
    s3_star: float
    spr_star: float
    Dn_star: float
    delta_max: int

    def as_dict(self) -> Dict[str, float]:
        return {'s2_star': self.s2_star, 's3_star': self.s3_star, 'spr_star': self.spr_star,
                'Dn_star': self.Dn_star, 'delta_max': self.delta_max}


def _weights(w: Optional[Union[WeightSequence, Sequence[float]]], n: int) -> np.ndarray:
    if w is None:
        return np.ones(n)
    arr = w.weights if isinstance(w, WeightSequence) else np.asarray(w, dtype=float)
    if arr.size != n:
        raise LabValidationError('weights must have one entry per vertex',
                                 context={'weights': int(arr.size), 'n': n})
    return arr


def _labels(graph: Graph) -> Tuple[int, np.ndarray]:
    return csgraph.connected_components(graph.adjacency(), directed=False)


def _grouped(labels: np.ndarray, count: int) -> List[np.ndarray]:
    order = np.argsort(labels, kind='stable')
    cuts = np.cumsum(np.bincount(labels, minlength=count))[:-1]
    return np.split(order, cuts)


def _bfs_rows(adj: sparse.csr_matrix, rows: np.ndarray, limit: Optional[int] = None) -> np.ndarray:
    if limit is None:
        return csgraph.shortest_path(adj, method='D', directed=False, unweighted=True, indices=rows)
    return csgraph.dijkstra(adj, directed=False, unweighted=True, indices=rows, limit=limit)


def _exact_diameter(adj: sparse.csr_matrix) -> int:
    size = adj.shape[0]
    best = 0
    for lo in range(0, size, BFS_CHUNK):
        dist = _bfs_rows(adj, np.arange(lo, min(lo + BFS_CHUNK, size)))
        best = max(best, int(dist.max()))
    return best


def _double_sweep(adj: sparse.csr_matrix, rng: np.random.Generator) -> int:
    best = 0
    start = int(rng.integers(adj.shape[0]))
    for _ in range(DOUBLE_SWEEPS):
        dist = _bfs_rows(adj, np.array([start]))[0]
        far = int(np.argmax(dist))
        best = max(best, int(dist[far]))
        start = far
    return best


def _diagonal_blocks(adj: sparse.csr_matrix, vertex_sets: Sequence[np.ndarray]) -> Iterator[sparse.csr_matrix]:
    """Induced adjacency of each vertex set, cut as contiguous blocks of one permuted matrix."""
    if not vertex_sets:
        return
    order = np.concatenate(vertex_sets)
    perm = sparse.csr_matrix(adj[order][:, order])
    start = 0
    for verts in vertex_sets:
        stop = start + verts.size
        yield perm[start:stop, start:stop]
        start = stop


def _block_diameter(sub: sparse.csr_matrix, exact_max: int,
                    rng: Optional[np.random.Generator] = None) -> Tuple[int, bool]:
    size = sub.shape[0]
    if size <= 1:
        return 0, True
    if size == 2:
        return 1, True
    if size <= exact_max:
        return _exact_diameter(sub), True
    return _double_sweep(sub, rng or np.random.default_rng(0)), False


def decompose(G: Graph, w: Optional[Union[WeightSequence, Sequence[float]]] = None,
              isolated_zero: bool = False, diameters: Union[bool, int] = True,
              open_half_edges: Optional[np.ndarray] = None,
              settings: Optional[dict] = None) -> List[ComponentStats]:
    """Exact component decomposition, largest first, ties by minimum vertex id.

    ``diameters`` may be an int k to compute diameters of the k largest
    components only; the others report -1.
    """
    weights = _weights(w, G.n)
    if G.n == 0:
        return []
    settings = settings or load_settings()
    exact_max = int(settings['diameter_exact_max'])
    count, labels = _labels(G)
    edges = G.edge_array()
    sizes = np.bincount(labels, minlength=count)
    edge_counts = np.bincount(labels[edges[:, 0]], minlength=count) if edges.size else np.zeros(count, int)
    comp_weight = np.bincount(labels, weights=weights, minlength=count)
    mins = np.full(count, G.n, dtype=np.int64)
    np.minimum.at(mins, labels, np.arange(G.n))
    opens = None
    if open_half_edges is not None:
        opens = np.bincount(labels, weights=open_half_edges, minlength=count).astype(np.int64)
    groups = _grouped(labels, count)
    isolated = (sizes == 1) & (edge_counts == 0)
    reported = np.where(isolated & isolated_zero, 0, sizes)
    ranking = np.lexsort((mins, -reported))
    limit = count if diameters is True else (0 if diameters is False else int(diameters))
    diams = np.full(count, -1, dtype=np.int64)
    head = ranking[:limit]
    # one vertex: 0, two connected vertices: 1
    diams[head] = np.minimum(sizes[head] - 1, 1)
    searched = head[sizes[head] > 2].tolist()
    blocks = _diagonal_blocks(G.adjacency(), [groups[c] for c in searched]) if searched else iter(())
    for c, block in zip(searched, blocks):
        value, exact = _block_diameter(block, exact_max)
        diams[c] = value
        if not exact:
            logger.info(f"component of size {sizes[c]} got a double-sweep diameter lower bound")
    out = []
    for c in ranking:
        out.append(ComponentStats(size=int(reported[c]), edges=int(edge_counts[c]),
                                  surplus=int(edge_counts[c] - sizes[c] + 1), diameter=int(diams[c]),
                                  weight=float(comp_weight[c]),
                                  open_half_edges=None if opens is None else int(opens[c]),
                                  min_vertex=int(mins[c]), vertices=groups[c]))
    return out


def decompose_percolated(perc, w=None, isolated_zero: bool = False,
                         diameters: Union[bool, int] = True) -> List[ComponentStats]:
    """Decompose a PercolatedGraph, attaching open half-edge counts O_i per component."""
    return decompose(perc.graph, w=w, isolated_zero=isolated_zero, diameters=diameters,
                     open_half_edges=perc.open_half_edges())


def diameter(G: Graph, vertices: Optional[Iterable[int]] = None, settings: Optional[dict] = None,
             rng: Optional[np.random.Generator] = None, return_exact: bool = False):
    """Largest eccentricity of a connected vertex set.

    Exact all-sources search up to ``diameter_exact_max`` vertices, double-sweep
    lower bound beyond, flagged through ``return_exact``.
    """
    settings = settings or load_settings()
    verts = np.arange(G.n) if vertices is None else np.asarray(sorted(set(vertices)), dtype=np.int64)
    if verts.size == 0:
        raise LabValidationError('diameter of an empty vertex set')
    sub = next(_diagonal_blocks(G.adjacency(), [verts]))
    pieces, _ = csgraph.connected_components(sub, directed=False)
    if pieces != 1:
        raise LabValidationError('diameter needs a connected vertex set', context={'pieces': int(pieces)})
    value, exact = _block_diameter(sub, int(settings['diameter_exact_max']), rng)
    return (value, exact) if return_exact else value


def _weighted_distance_sum(sub: sparse.csr_matrix, weights: np.ndarray) -> float:
    total = 0.0
    size = sub.shape[0]
    for lo in range(0, size, BFS_CHUNK):
        rows = np.arange(lo, min(lo + BFS_CHUNK, size))
        dist = _bfs_rows(sub, rows)
        total += float(weights[rows] @ (dist @ weights))
    return total


def susceptibilities(G: Graph, w: Union[WeightSequence, Sequence[float]],
                     stats: Optional[List[ComponentStats]] = None) -> SusceptibilityReport:
    """Weight-based susceptibilities s2*, s3*, s_pr*, distance susceptibility D_n* and max diameter."""
    weights = _weights(w, G.n)
    n = G.n
    stats = stats if stats is not None else decompose(G, weights)
    cw = np.array([c.weight for c in stats])
    sizes = np.array([c.vertices.size for c in stats], dtype=float)
    dist_total = 0.0
    searched = []
    for c in stats:
        if c.vertices.size == 2:
            dist_total += 2.0 * float(weights[c.vertices[0]] * weights[c.vertices[1]])
        elif c.vertices.size > 2:
            searched.append(c.vertices)
    for verts, block in zip(searched, _diagonal_blocks(G.adjacency(), searched)):
        dist_total += _weighted_distance_sum(block, weights[verts])
    diameters = [c.diameter for c in stats]
    return SusceptibilityReport(s2_star=float(np.sum(cw ** 2) / n),
                                s3_star=float(np.sum(cw ** 3) / n),
                                spr_star=float(np.sum(cw * sizes) / n),
                                Dn_star=dist_total / n,
                                delta_max=int(max(diameters)) if diameters else 0)


def ball_radius(delta: float, scal: ScalingConstants) -> int:
    return int(math.ceil(delta * scal.n ** scal.eta))


def lower_mass(G: Graph, w: Union[WeightSequence, Sequence[float]], i: int, delta: float,
               scal: ScalingConstants, stats: Optional[List[ComponentStats]] = None) -> float:
    """inf over v in C_(i) of n^{-rho} times the w-mass of the radius ceil(delta n^eta) ball at v."""
    if delta < 0:
        raise LabValidationError('delta must be non-negative', context={'delta': delta})
    weights = _weights(w, G.n)
    stats = stats if stats is not None else decompose(G, weights, diameters=False)
    if not 1 <= i <= len(stats):
        raise LabValidationError('component rank out of range', context={'i': i, 'components': len(stats)})
    verts = stats[i - 1].vertices
    radius = ball_radius(delta, scal)
    sub = next(_diagonal_blocks(G.adjacency(), [verts]))
    local = weights[verts]
    best = math.inf
    for lo in range(0, verts.size, BFS_CHUNK):
        rows = np.arange(lo, min(lo + BFS_CHUNK, verts.size))
        dist = _bfs_rows(sub, rows, limit=radius)
        masses = (np.isfinite(dist) & (dist <= radius)) @ local
        best = min(best, float(masses.min()))
    return best / scal.n ** scal.rho


def order_u0(pairs: Iterable[Tuple[float, int]]) -> UVector:
    """Sort by x descending, ties by y descending; (0, y > 0) is not an element of U0."""
    cleaned = []
    for x, y in pairs:
        if x < 0 or y < 0 or int(y) != y:
            raise LabValidationError('U-vector entries need x >= 0 and integer y >= 0', context={'x': x, 'y': y})
        if x == 0 and y > 0:
            raise LabValidationError('y must be 0 whenever x is 0', context={'y': y})
        cleaned.append((float(x), int(y)))
    return UVector(tuple(sorted(cleaned, key=lambda p: (-p[0], -p[1]))))


def _padded(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    size = max(a.size, b.size)
    return np.pad(a, (0, size - a.size)), np.pad(b, (0, size - b.size))


def _as_xs(v: Union[UVector, Sequence[float]]) -> np.ndarray:
    return v.xs() if isinstance(v, UVector) else np.asarray(v, dtype=float)


def dist_l2(x1: Union[UVector, Sequence[float]], x2: Union[UVector, Sequence[float]]) -> float:
    a, b = _padded(_as_xs(x1), _as_xs(x2))
    return float(np.sqrt(np.sum((a - b) ** 2)))


def dist_u(z1: UVector, z2: UVector) -> float:
    """l2 distance of sizes plus the l1 distance of the products x_i y_i."""
    a, b = _padded(z1.xs() * z1.ys(), z2.xs() * z2.ys())
    return dist_l2(z1, z2) + float(np.sum(np.abs(a - b)))


def u_vector(stats: List[ComponentStats], scale: float = 1.0) -> UVector:
    """(size / scale, surplus) pairs of a decomposition, U0-ordered."""
    return order_u0((c.size / scale, c.surplus if c.size > 0 else 0) for c in stats)


def ordered_sizes(G: Graph) -> Tuple[int, ...]:
    count, labels = _labels(G)
    return tuple(sorted(np.bincount(labels, minlength=count).tolist(), reverse=True))


def union_find_components(G: Graph) -> List[Tuple[int, int]]:
    """(size, edges) per component by union-find, ordered by minimum vertex."""
    return UnionFind(G.n).add_edges(G.edge_array().tolist()).size_edge_pairs()


def component_table(stats: List[ComponentStats]) -> List[Dict[str, object]]:
    return [{'rank': rank, 'size': c.size, 'edges': c.edges, 'surplus': c.surplus,
             'diameter': c.diameter, 'weight': c.weight}
            for rank, c in enumerate(stats, 1)]
