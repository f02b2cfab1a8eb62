"""Random graph families: configuration multigraphs, uniform simple graphs,
erased configuration models, rank-one inhomogeneous graphs and p-tree based
connected graphs (re-exported from ``critgraph.ptrees``).
"""
from __future__ import annotations

import logging
import math
from typing import Optional, Tuple

import numpy as np

from .config_loader import load_settings
from .degree_models import DegreeSequence, WeightSequence
from .error_handling import LabValidationError, SamplingExhaustedError
from .graphs import MultiGraph, SimpleGraph
from .ptrees import (PTree, TiltState, pcon_graph, pcon_sample, ptree_direct,  # noqa: F401
                     ptree_tilted)

logger = logging.getLogger(__name__)

KERNELS = ('grg', 'chunglu', 'norrosreittu', 'nr_q')


def _require_even(d: DegreeSequence) -> None:
    if not d.has_even_total:
        raise LabValidationError('total degree must be even', context={'total': d.total})


def config_model(d: DegreeSequence, rng: np.random.Generator) -> MultiGraph:
    """Uniform perfect matching of the half-edges: shuffle, then pair consecutively."""
    _require_even(d)
    perm = rng.permutation(d.total)
    matching = np.empty(d.total, dtype=np.int64)
    matching[perm[0::2]] = perm[1::2]
    matching[perm[1::2]] = perm[0::2]
    return MultiGraph(n=d.n, half_edge_owner=d.half_edge_owner(), matching=matching)


def is_simple(graph: MultiGraph) -> bool:
    edges = graph.edge_array()
    if edges.size == 0:
        return True
    if np.any(edges[:, 0] == edges[:, 1]):
        return False
    return np.unique(edges, axis=0).shape[0] == edges.shape[0]


def uniform_simple(d: DegreeSequence, rng: np.random.Generator,
                   max_tries: Optional[int] = None) -> SimpleGraph:
    """Reject configuration multigraphs until a simple one appears."""
    _require_even(d)
    if max_tries is None:
        max_tries = int(load_settings()['uniform_simple_max_tries'])
    if max_tries < 1:
        raise LabValidationError('max_tries must be at least 1', context={'max_tries': max_tries})
    for attempt in range(1, max_tries + 1):
        graph = config_model(d, rng)
        if is_simple(graph):
            logger.debug(f"simple realization accepted after {attempt} attempt(s)")
            return SimpleGraph(d.n, graph.edge_array())
    raise SamplingExhaustedError('no simple realization found', attempts=max_tries,
                                 context={'n': d.n, 'total': d.total})


def erased_config_model(d: DegreeSequence, rng: np.random.Generator) -> Tuple[SimpleGraph, int]:
    """Configuration multigraph with loops deleted and multi-edges collapsed.

    Returns the simple graph and the number of erased edges.
    """
    _require_even(d)
    return config_model(d, rng).to_simple()


def kernel_probability(kernel: str, product: np.ndarray | float, ell: float = 1.0,
                       q: Optional[float] = None) -> np.ndarray | float:
    """Edge probability for weight product w_i w_j (or x_i x_j for NR_q)."""
    if kernel == 'grg':
        return product / (ell + product)
    if kernel == 'chunglu':
        return np.minimum(product / ell, 1.0)
    if kernel == 'norrosreittu':
        return -np.expm1(-product / ell)
    if kernel == 'nr_q':
        if q is None or q < 0:
            raise LabValidationError('NR_q kernel needs q >= 0', context={'q': q})
        return -np.expm1(-q * product)
    raise LabValidationError('unknown kernel', context={'kernel': kernel, 'known': list(KERNELS)})


def inhomogeneous_graph(w: WeightSequence, kernel: str, rng: np.random.Generator,
                        q: Optional[float] = None) -> SimpleGraph:
    """Independent edges with rank-one kernel probabilities.

    Every kernel is bounded by min(c w_i w_j, 1) with c = 1/l_n (or q), which is
    non-increasing along weight-sorted vertices, so candidate partners of each
    vertex are reached by geometric skips and thinned to the exact kernel.
    """
    if kernel not in KERNELS:
        raise LabValidationError('unknown kernel', context={'kernel': kernel, 'known': list(KERNELS)})
    if kernel == 'nr_q' and (q is None or q < 0):
        raise LabValidationError('NR_q kernel needs q >= 0', context={'q': q})
    n = w.n
    ell = w.total
    order = np.argsort(-w.weights, kind='stable')
    weights = w.weights[order]
    scale = q if kernel == 'nr_q' else (1.0 / ell if ell > 0 else 0.0)
    rows, cols = [], []
    for u in range(n - 1):
        factor = weights[u] * scale
        if factor <= 0:
            break
        v = u + 1
        bound = min(weights[v] * factor, 1.0)
        while v < n and bound > 0:
            if bound < 1.0:
                r = rng.random()
                v += int(math.floor(math.log(r) / math.log1p(-bound))) if r > 0 else n
            if v >= n:
                break
            true_p = float(kernel_probability(kernel, weights[u] * weights[v], ell, q))
            if rng.random() * bound < true_p:
                rows.append(order[u])
                cols.append(order[v])
            bound = min(weights[v] * factor, 1.0)
            v += 1
    edges = np.column_stack([np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64)])
    return SimpleGraph(n, edges)
