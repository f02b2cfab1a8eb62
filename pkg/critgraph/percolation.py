"""Bond percolation on configuration models and the critical-window parameterizations.

Four constructions of CM_n(d, p) live here and agree in law:

* ``bond_percolate`` deletes each edge of a realized graph independently;
* ``janson_percolate`` explodes half-edges onto red degree-one vertices first;
* ``fountoulakis_percolate`` draws the retained edge count, then matches that
  many uniformly chosen half-edge pairs;
* ``harris_family`` realizes all p on a lambda grid at once, monotonically.

``sandwich_graph`` is the half-edge retention construction used to bracket
CM_n(d, p) between p(1 - eps) and p(1 + eps).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .config_loader import load_settings
from .degree_models import (DegreeSequence, ScalingConstants, WeightSequence,
                            criticality)
from .error_handling import LabValidationError, RegimeError
from .graph_gen import config_model, erased_config_model
from .graphs import Graph, MultiGraph, SimpleGraph

logger = logging.getLogger(__name__)

REGIMES = ('tau_gt4', 'tau_34', 'tau_23_CM', 'tau_23_single')
JANSON_CLEANUPS = ('delete_red', 'delete_uniform_deg1')


@dataclass(frozen=True)
class PercolationSpec:
    regime: str
    lam: float = 0.0
    p: Optional[float] = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise RegimeError('unknown percolation regime', context={'regime': self.regime})


@dataclass(frozen=True)
class PercolatedGraph:
    """A percolated graph plus the bookkeeping of the construction that produced it."""

    graph: Graph
    p: float
    method: str
    retained: Optional[np.ndarray] = None
    host_degrees: Optional[np.ndarray] = None
    n_plus: int = 0
    exploded_degrees: Optional[DegreeSequence] = None
    retained_half_edges: Optional[np.ndarray] = None
    regime: Optional[str] = None
    lam: Optional[float] = None

    @property
    def n(self) -> int:
        return self.graph.n

    def open_half_edges(self) -> Optional[np.ndarray]:
        """Host half-edges per vertex whose edge was not retained."""
        if self.host_degrees is None:
            return None
        return self.host_degrees - self.graph.degrees()

    def sidecar(self) -> dict:
        return {'p': self.p, 'regime': self.regime, 'lambda': self.lam,
                'n_plus': self.n_plus, 'method': self.method}


@dataclass(frozen=True)
class CoupledFamily:
    """Harris-coupled percolation family on one configuration model.

    ``pairs[k]`` is the k-th pairing of a uniform pairing sequence and the graph at
    lambda_j consists of the first ``edge_counts[j]`` pairs.
    """

    n: int
    half_edge_owner: np.ndarray
    pairs: np.ndarray
    marks: np.ndarray
    lambdas: Tuple[float, ...]
    p_values: Tuple[float, ...]
    edge_counts: Tuple[int, ...]

    def edges_at(self, index: int) -> np.ndarray:
        chosen = self.pairs[:self.edge_counts[index]]
        u = self.half_edge_owner[chosen[:, 0]]
        v = self.half_edge_owner[chosen[:, 1]]
        return np.column_stack([np.minimum(u, v), np.maximum(u, v)])

    def graph(self, index: int) -> MultiGraph:
        return MultiGraph.from_edge_list(self.n, self.edges_at(index))

    def graphs(self) -> List[MultiGraph]:
        return [self.graph(k) for k in range(len(self.lambdas))]


def _check_p(p: float, low_open: bool = False) -> float:
    if not (0.0 <= p <= 1.0) or (low_open and p == 0.0):
        interval = '(0, 1]' if low_open else '[0, 1]'
        raise LabValidationError(f'percolation probability must lie in {interval}', context={'p': p})
    return float(p)


def _nu(seq: Union[DegreeSequence, WeightSequence], scal: ScalingConstants) -> float:
    if isinstance(seq, DegreeSequence):
        return criticality(seq, scal).nu_n
    weights = seq.weights
    return float(np.dot(weights, weights) / weights.sum())


def critical_p(spec: PercolationSpec, seq: Union[DegreeSequence, WeightSequence],
               scal: ScalingConstants) -> float:
    """Regime's percolation probability at window location lambda, clamped into [0, 1]."""
    if spec.p is not None:
        return _check_p(spec.p)
    lam = spec.lam
    if spec.regime in ('tau_23_CM', 'tau_23_single') and lam <= 0:
        raise RegimeError('lambda must be positive in the tau in (2, 3) windows',
                          tau=scal.tau, context={'lambda': lam, 'regime': spec.regime})
    if spec.regime == 'tau_23_single':
        value = lam * scal.n ** (-(3.0 - scal.tau) / 2.0)
    else:
        nu = _nu(seq, scal)
        if nu <= 0:
            raise LabValidationError('criticality parameter must be positive', context={'nu_n': nu})
        if spec.regime == 'tau_gt4':
            value = (1.0 + lam * scal.n ** (-1.0 / 3.0)) / nu
        elif spec.regime == 'tau_34':
            value = (1.0 + lam / scal.c_n) / nu
        else:
            value = lam / nu
    if not 0.0 <= value <= 1.0:
        clamped = min(max(value, 0.0), 1.0)
        logger.warning(f"critical p {value:.6g} clamped to {clamped} (regime={spec.regime}, lambda={lam})")
        value = clamped
    return float(value)


def default_regime(scal: ScalingConstants) -> str:
    return {'tau_gt4': 'tau_gt4', 'tau_34': 'tau_34', 'tau_23': 'tau_23_CM'}[scal.regime]


def bond_percolate(G: Graph, p: float, rng: np.random.Generator) -> PercolatedGraph:
    """Keep each edge independently with probability p."""
    p = _check_p(p)
    edges = G.edge_array()
    keep = rng.random(edges.shape[0]) < p
    kept = edges[keep]
    if isinstance(G, MultiGraph):
        graph: Graph = MultiGraph.from_edge_list(G.n, kept)
    else:
        graph = SimpleGraph(G.n, kept)
    keep.setflags(write=False)
    return PercolatedGraph(graph=graph, p=p, method='bond', retained=keep,
                           host_degrees=G.degrees())


def janson_percolate(d: DegreeSequence, p: float, rng: np.random.Generator,
                     cleanup: str = 'delete_uniform_deg1') -> PercolatedGraph:
    """Explode each half-edge with probability 1 - sqrt(p), build CM on the exploded degrees, clean up."""
    p = _check_p(p, low_open=True)
    if cleanup not in JANSON_CLEANUPS:
        raise LabValidationError('unknown Janson cleanup', context={'cleanup': cleanup})
    if not d.has_even_total:
        raise LabValidationError('total degree must be even', context={'total': d.total})
    n = d.n
    owner = d.half_edge_owner()
    detached = rng.random(d.total) >= math.sqrt(p)
    n_plus = int(detached.sum())
    kept_degrees = d.degrees - np.bincount(owner[detached], minlength=n)
    exploded = DegreeSequence(np.concatenate([kept_degrees, np.ones(n_plus, dtype=np.int64)]))
    host = config_model(exploded, rng)
    edges = host.edge_array()
    if cleanup == 'delete_red':
        keep = (edges[:, 0] < n) & (edges[:, 1] < n)
        graph = MultiGraph.from_edge_list(n, edges[keep])
    else:
        graph = _delete_uniform_degree_one(host, n, n_plus, exploded, rng)
    return PercolatedGraph(graph=graph, p=p, method=f'janson:{cleanup}', host_degrees=d.degrees,
                           n_plus=n_plus, exploded_degrees=exploded)


def _delete_uniform_degree_one(host: MultiGraph, n: int, n_plus: int, exploded: DegreeSequence,
                               rng: np.random.Generator) -> MultiGraph:
    """Delete n_plus uniform degree-one vertices; surviving red vertices take the freed labels."""
    edges = host.edge_array()
    if n_plus == 0:
        return MultiGraph.from_edge_list(n, edges)
    # the n_plus red vertices have degree one, so there are always enough candidates
    candidates = np.flatnonzero(exploded.degrees == 1)
    deleted = np.zeros(exploded.n, dtype=bool)
    deleted[rng.choice(candidates, size=n_plus, replace=False)] = True
    freed = np.flatnonzero(deleted[:n])
    survivors = np.flatnonzero(~deleted[n:]) + n
    relabel = np.arange(exploded.n)
    relabel[survivors] = rng.permutation(freed)
    keep = ~(deleted[edges[:, 0]] | deleted[edges[:, 1]])
    return MultiGraph.from_edge_list(n, relabel[edges[keep]])


def fountoulakis_percolate(d: DegreeSequence, p: float, rng: np.random.Generator) -> PercolatedGraph:
    """X ~ Bin(l_n / 2, p) edges formed by uniformly matching 2X uniformly chosen half-edges."""
    p = _check_p(p)
    if not d.has_even_total:
        raise LabValidationError('total degree must be even', context={'total': d.total})
    x = int(rng.binomial(d.total // 2, p))
    chosen = rng.choice(d.total, size=2 * x, replace=False)
    owner = d.half_edge_owner()
    u, v = owner[chosen[0::2]], owner[chosen[1::2]]
    graph = MultiGraph.from_edge_list(d.n, np.column_stack([np.minimum(u, v), np.maximum(u, v)]))
    retained = np.zeros(d.total, dtype=bool)
    retained[chosen] = True
    retained.setflags(write=False)
    return PercolatedGraph(graph=graph, p=p, method='fountoulakis', host_degrees=d.degrees,
                           retained_half_edges=retained)


def sandwich_graph(d: DegreeSequence, p: float, rng: np.random.Generator,
                   uniforms: Optional[np.ndarray] = None) -> PercolatedGraph:
    """Keep half-edge h when its uniform U_h < p, then take CM on the retained degrees.

    A dummy half-edge on vertex 1 restores parity. Passing shared ``uniforms``
    nests the retained sets across p.
    """
    p = _check_p(p)
    if uniforms is None:
        uniforms = rng.random(d.total)
    elif uniforms.shape != (d.total,):
        raise LabValidationError('need one uniform per half-edge',
                                 context={'uniforms': uniforms.shape, 'total': d.total})
    retained = uniforms < p
    kept = np.bincount(d.half_edge_owner()[retained], minlength=d.n).astype(np.int64)
    if d.n and int(kept.sum()) % 2 == 1:
        kept[0] += 1
    thinned = DegreeSequence(kept)
    graph = config_model(thinned, rng)
    retained.setflags(write=False)
    return PercolatedGraph(graph=graph, p=p, method='sandwich', host_degrees=d.degrees,
                           exploded_degrees=thinned, retained_half_edges=retained)


def sandwich_epsilon(n: int, ell: int, p: float, factor: Optional[float] = None) -> float:
    """factor * sqrt(log n / (l_n p))."""
    if factor is None:
        factor = float(load_settings()['sandwich_eps_factor'])
    if n < 2 or ell <= 0 or p <= 0:
        raise LabValidationError('sandwich epsilon needs n >= 2, l_n > 0 and p > 0',
                                 context={'n': n, 'ell': ell, 'p': p})
    return factor * math.sqrt(math.log(n) / (ell * p))


def sandwich_bracket(d: DegreeSequence, p: float, eps: float,
                     rng: np.random.Generator) -> Tuple[PercolatedGraph, PercolatedGraph]:
    """Sandwich graphs at p(1 - eps) and p(1 + eps) sharing their half-edge uniforms."""
    uniforms = rng.random(d.total)
    low = min(max(p * (1.0 - eps), 0.0), 1.0)
    high = min(max(p * (1.0 + eps), 0.0), 1.0)
    return (sandwich_graph(d, low, rng, uniforms=uniforms),
            sandwich_graph(d, high, rng, uniforms=uniforms))


def harris_family(d: DegreeSequence, lambdas: Sequence[float], scal: ScalingConstants,
                  rng: np.random.Generator, regime: Optional[str] = None,
                  p_values: Optional[Sequence[float]] = None) -> CoupledFamily:
    """One realization coupling CM_n(d, p(lambda)) over a sorted lambda grid."""
    grid = [float(x) for x in lambdas]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise LabValidationError('lambda grid must be sorted', context={'lambdas': grid})
    if not d.has_even_total:
        raise LabValidationError('total degree must be even', context={'total': d.total})
    if p_values is None:
        regime = regime or default_regime(scal)
        p_values = [critical_p(PercolationSpec(regime, lam), d, scal) for lam in grid]
    else:
        p_values = [_check_p(float(x)) for x in p_values]
    if len(p_values) != len(grid):
        raise LabValidationError('one p value per lambda is required')
    perm = rng.permutation(d.total)
    pairs = perm.reshape(-1, 2)
    marks = rng.random(pairs.shape[0])
    counts = tuple(int(np.count_nonzero(marks <= p)) for p in p_values)
    for arr in (pairs, marks):
        arr.setflags(write=False)
    return CoupledFamily(n=d.n, half_edge_owner=d.half_edge_owner(), pairs=pairs, marks=marks,
                         lambdas=tuple(grid), p_values=tuple(float(p) for p in p_values),
                         edge_counts=counts)


def erase_then_percolate(d: DegreeSequence, p: float, rng: np.random.Generator) -> PercolatedGraph:
    """Percolation on an erased configuration model (the order used in the tau in (2, 3) windows)."""
    simple, _ = erased_config_model(d, rng)
    return bond_percolate(simple, p, rng)


def percolate_then_erase(d: DegreeSequence, p: float, rng: np.random.Generator) -> PercolatedGraph:
    """Experimental: percolate the multigraph, then erase loops and multi-edges."""
    logger.warning('percolate-then-erase is experimental and carries no acceptance checks')
    perc = bond_percolate(config_model(d, rng), p, rng)
    simple, _ = perc.graph.to_simple()
    return PercolatedGraph(graph=simple, p=p, method='percolate_then_erase',
                           host_degrees=perc.host_degrees)
