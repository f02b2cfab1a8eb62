"""Exploration walks that build a configuration model while exploring it.

``explore_dfs`` discovers one vertex per stage. Its increment is
d_w - 2 - 2c, where c counts the cycle pairs found while discovering w, so
component k ends at the first time the walk reaches -2k.

``explore_unit`` consumes one edge per pairing stage, breadth first. Each
component starts with a root stage that pairs nothing, so the stages of
component k number edges(C_k) + 1.

Pairings are revealed through ``LazyMatching``, so the byproduct multigraph is
a uniform matching whatever order the walk asks for partners in.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from .degree_models import DegreeSequence, ScalingConstants
from .error_handling import IncompleteWalkError, LabValidationError
from .graphs import LazyMatching, MultiGraph

logger = logging.getLogger(__name__)

MODES = ('dfs_vertex', 'unit_edge')


@dataclass(frozen=True)
class ExplorationWalk:
    values: np.ndarray
    tau: np.ndarray
    mode: str
    surplus_times: np.ndarray
    discovered_order: np.ndarray
    events: Tuple[str, ...]
    loop_times: np.ndarray
    count_loops: bool = True

    @property
    def stages(self) -> int:
        return int(self.values.size - 1)

    @property
    def component_count(self) -> int:
        return int(self.tau.size)


@dataclass(frozen=True)
class WalkComponent:
    size: int
    edges: int
    surplus: int


@dataclass(frozen=True)
class RescaledPath:
    times: np.ndarray
    values: np.ndarray
    a_n: float
    b_n: float


@dataclass(frozen=True)
class SizeBiasedDiagnostic:
    observed: np.ndarray
    expected: np.ndarray
    statistic: float
    p_value: float
    runs: int


def hitting_times(values: np.ndarray) -> np.ndarray:
    """tau_k = first index with S = -2k, for k = 1, 2, ..."""
    taus = []
    level = -2
    for i, s in enumerate(values):
        if s == level:
            taus.append(i)
            level -= 2
    return np.array(taus, dtype=np.int64)


def _require_even(d: DegreeSequence) -> None:
    if not d.has_even_total:
        raise LabValidationError('total degree must be even', context={'total': d.total})


def _finish(values: List[int], mode: str, surplus: List[int], loops: List[int], order: List[int],
            events: List[str], count_loops: bool) -> ExplorationWalk:
    arr = np.array(values, dtype=np.int64)
    marks = sorted(surplus + loops) if count_loops else list(surplus)
    out = ExplorationWalk(values=arr, tau=hitting_times(arr), mode=mode,
                          surplus_times=np.array(marks, dtype=np.int64),
                          discovered_order=np.array(order, dtype=np.int64),
                          events=tuple(events), loop_times=np.array(loops, dtype=np.int64),
                          count_loops=count_loops)
    for field_name in ('values', 'tau', 'surplus_times', 'discovered_order', 'loop_times'):
        getattr(out, field_name).setflags(write=False)
    return out


def explore_dfs(d: DegreeSequence, rng: np.random.Generator,
                count_loops: bool = True) -> Tuple[ExplorationWalk, MultiGraph]:
    """Depth-first, one vertex per stage.

    Active half-edges are unpaired-so-far from the walk's point of view: each is
    matched to a half-edge of a still sleeping vertex. The newest vertex's active
    half-edges sit on top of the stack with the lowest id popped first.
    """
    _require_even(d)
    n = d.n
    deg = d.degrees
    owner = d.half_edge_owner()
    start = np.concatenate([[0], np.cumsum(deg)])
    matching = LazyMatching(d.total, rng)
    partner = matching.partner
    active = np.zeros(d.total, dtype=bool)
    stack: List[int] = []
    values, events, order, surplus, loops = [0], [], [], [], []
    s = 0
    positive = int(np.count_nonzero(deg))

    while len(order) < positive:
        while stack and not active[stack[-1]]:
            stack.pop()
        if stack:
            h = stack.pop()
            active[h] = False
            incoming = int(partner[h])
            w = int(owner[incoming])
            events.append('new')
        else:
            incoming = -1
            w = int(owner[matching.draw()])
            events.append('root')
        stage = len(values)
        order.append(w)
        cycles = 0
        fresh = []
        for g in range(start[w], start[w + 1]):
            if g == incoming:
                continue
            x = int(partner[g])
            if x >= 0:
                if owner[x] == w:
                    continue
                active[x] = False
                cycles += 1
                surplus.append(stage)
                continue
            x = matching.pair_uniform(g)
            if owner[x] == w:
                cycles += 1
                loops.append(stage)
            else:
                active[g] = True
                fresh.append(g)
        stack.extend(reversed(fresh))
        s += int(deg[w]) - 2 - 2 * cycles
        values.append(s)

    for v in np.flatnonzero(deg == 0):
        order.append(int(v))
        events.append('root')
        s -= 2
        values.append(s)

    walk = _finish(values, 'dfs_vertex', surplus, loops, order, events, count_loops)
    return walk, MultiGraph(n=n, half_edge_owner=owner, matching=matching.matching())


def explore_unit(d: DegreeSequence, rng: np.random.Generator,
                 count_loops: bool = True) -> Tuple[ExplorationWalk, MultiGraph]:
    """Breadth-first, one edge per pairing stage; root stages choose a vertex by degree."""
    _require_even(d)
    n = d.n
    deg = d.degrees
    owner = d.half_edge_owner()
    start = np.concatenate([[0], np.cumsum(deg)])
    matching = LazyMatching(d.total, rng)
    partner = matching.partner
    discovered = np.zeros(n, dtype=bool)
    cursor = start[:-1].copy()
    queue: deque = deque()
    values, events, order, surplus, loops = [0], [], [], [], []
    s = 0

    def next_unpaired(v: int) -> int:
        while cursor[v] < start[v + 1] and partner[cursor[v]] >= 0:
            cursor[v] += 1
        return int(cursor[v]) if cursor[v] < start[v + 1] else -1

    while matching.unpaired:
        while queue and next_unpaired(queue[0]) < 0:
            queue.popleft()
        stage = len(values)
        if not queue:
            w = int(owner[matching.draw()])
            discovered[w] = True
            queue.append(w)
            order.append(w)
            events.append('root')
            s += int(deg[w]) - 2
        else:
            v = queue[0]
            x = matching.pair_uniform(next_unpaired(v))
            u = int(owner[x])
            if u == v:
                loops.append(stage)
                events.append('loop')
                s -= 2
            elif not discovered[u]:
                discovered[u] = True
                queue.append(u)
                order.append(u)
                events.append('new')
                s += int(deg[u]) - 2
            else:
                surplus.append(stage)
                events.append('surplus')
                s -= 2
        values.append(s)

    for v in np.flatnonzero(deg == 0):
        order.append(int(v))
        events.append('root')
        s -= 2
        values.append(s)

    walk = _finish(values, 'unit_edge', surplus, loops, order, events, count_loops)
    return walk, MultiGraph(n=n, half_edge_owner=owner, matching=matching.matching())


def components_from_walk(w: ExplorationWalk) -> List[WalkComponent]:
    """Per-component (size, edges, surplus) read off the walk's hitting times and marks."""
    if w.mode not in MODES:
        raise LabValidationError('unknown walk mode', context={'mode': w.mode})
    count = w.component_count
    if w.stages == 0 and count == 0:
        return []
    if count == 0 or int(w.values[-1]) != -2 * count or int(w.tau[-1]) != w.stages:
        raise IncompleteWalkError('walk does not end at -2 times its component count',
                                  context={'final': int(w.values[-1]), 'components': count})
    bounds = np.concatenate([[0], w.tau])
    marks = np.searchsorted(w.surplus_times, bounds, side='right')
    loop_counts = np.searchsorted(w.loop_times, bounds, side='right')
    out = []
    for k in range(count):
        stages = int(bounds[k + 1] - bounds[k])
        sp = int(marks[k + 1] - marks[k])
        if w.mode == 'dfs_vertex':
            out.append(WalkComponent(size=stages, edges=stages - 1 + sp, surplus=sp))
        else:
            edges = stages - 1
            if not w.count_loops:
                edges -= int(loop_counts[k + 1] - loop_counts[k])
            out.append(WalkComponent(size=edges - sp + 1, edges=edges, surplus=sp))
    return out


def walk_scaling(scal: ScalingConstants) -> Tuple[float, float]:
    """(a, b) used to rescale walks: (n^{1/3}, n^{2/3}) above tau = 4, (a_n, b_n) in (3, 4), (n^rho, n^rho) in (2, 3)."""
    if scal.regime == 'tau_23':
        return scal.n ** scal.rho, scal.n ** scal.rho
    return scal.a_n, scal.b_n


def rescale_walk(w: ExplorationWalk, scal: Optional[ScalingConstants] = None,
                 a_n: Optional[float] = None, b_n: Optional[float] = None,
                 dt: Optional[float] = None) -> RescaledPath:
    """values(t) = S(floor(b_n t)) / a_n on t in [0, T / b_n]."""
    if scal is not None:
        a_default, b_default = walk_scaling(scal)
        a_n = a_n if a_n is not None else a_default
        b_n = b_n if b_n is not None else b_default
    a_n = 1.0 if a_n is None else float(a_n)
    b_n = 1.0 if b_n is None else float(b_n)
    if a_n <= 0 or b_n <= 0:
        raise LabValidationError('rescaling constants must be positive', context={'a_n': a_n, 'b_n': b_n})
    horizon = w.stages / b_n
    if dt is None:
        times = np.arange(w.stages + 1) / b_n
        idx = np.arange(w.stages + 1)
    else:
        times = np.arange(0.0, horizon + dt / 2, dt)
        idx = np.minimum(np.floor(b_n * times + 1e-9).astype(np.int64), w.stages)
    return RescaledPath(times=times, values=w.values[idx] / a_n, a_n=a_n, b_n=b_n)


def size_biased_check(d: DegreeSequence, rng: np.random.Generator, runs: int = 10000,
                      steps: int = 1) -> SizeBiasedDiagnostic:
    """Discovery frequencies of the first ``steps`` vertices of the DFS walk.

    Row 0 of ``observed`` is compared with d_j / l_n by a chi-square test.
    """
    if steps < 1 or steps > d.n:
        raise LabValidationError('steps must lie in [1, n]', context={'steps': steps, 'n': d.n})
    if runs < 1:
        raise LabValidationError('runs must be positive', context={'runs': runs})
    observed = np.zeros((steps, d.n), dtype=np.int64)
    for _ in range(runs):
        walk, _ = explore_dfs(d, rng)
        for i, v in enumerate(walk.discovered_order[:steps]):
            observed[i, v] += 1
    expected = d.degrees / d.total
    support = expected > 0
    if support.sum() > 1:
        statistic, p_value = stats.chisquare(observed[0, support], expected[support] * runs)
    else:
        statistic, p_value = 0.0, 1.0
    return SizeBiasedDiagnostic(observed=observed, expected=expected, statistic=float(statistic),
                                p_value=float(p_value), runs=runs)
