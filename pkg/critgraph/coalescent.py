"""Multiplicative coalescent, its augmented version, and the dynamic half-edge constructions.

All simulators are exact event-driven (Gillespie) schemes. Rates are kept in
array-backed sum trees so each event costs O(log m).
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csgraph

from .degree_models import DegreeSequence, WeightSequence
from .error_handling import LabValidationError
from .graph_gen import inhomogeneous_graph
from .graphs import MultiGraph
from .unionfind import UnionFind

logger = logging.getLogger(__name__)


class SumTree:
    """Non-negative weights with O(log m) point updates and prefix-sum sampling."""

    def __init__(self, weights: Sequence[float]):
        size = 1
        while size < max(len(weights), 1):
            size *= 2
        self.size = size
        self.tree = np.zeros(2 * size)
        self.tree[size:size + len(weights)] = weights
        for i in range(size - 1, 0, -1):
            self.tree[i] = self.tree[2 * i] + self.tree[2 * i + 1]

    @property
    def total(self) -> float:
        return float(self.tree[1])

    def get(self, i: int) -> float:
        return float(self.tree[self.size + i])

    def update(self, i: int, value: float) -> None:
        pos = self.size + i
        self.tree[pos] = value
        pos //= 2
        while pos:
            self.tree[pos] = self.tree[2 * pos] + self.tree[2 * pos + 1]
            pos //= 2

    def find(self, u: float) -> int:
        """Index whose cumulative interval contains u in [0, total)."""
        pos = 1
        while pos < self.size:
            left = self.tree[2 * pos]
            if u < left:
                pos = 2 * pos
            else:
                u -= left
                pos = 2 * pos + 1
        return pos - self.size

    def sample(self, rng: np.random.Generator) -> int:
        i = self.find(rng.random() * self.total)
        # guard against landing on a zero leaf through rounding
        while self.get(i) <= 0:
            i = self.find(rng.random() * self.total)
        return i


@dataclass(frozen=True)
class MCState:
    masses: np.ndarray
    attributes: np.ndarray
    clock: float
    K1: float
    K2: float = 0.0


@dataclass(frozen=True)
class CoalescentEvent:
    time: float
    kind: str
    i: int
    j: int


@dataclass
class MCTrajectory:
    events: List[CoalescentEvent]
    snapshots: Dict[float, MCState]
    final: MCState

    def event_times(self) -> np.ndarray:
        return np.array([e.time for e in self.events])

    def ordered_masses(self, t: Optional[float] = None) -> np.ndarray:
        state = self.final if t is None else self.snapshots[t]
        return np.sort(state.masses)[::-1]


def _validate_masses(x0: Sequence[float]) -> np.ndarray:
    arr = np.asarray(x0, dtype=float).reshape(-1)
    if arr.size == 0 or np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise LabValidationError('masses must be a finite non-empty positive list')
    return arr


def _snapshot(x: np.ndarray, y: np.ndarray, alive: np.ndarray, clock: float, K1: float, K2: float) -> MCState:
    return MCState(masses=x[alive].copy(), attributes=y[alive].copy(), clock=clock, K1=K1, K2=K2)


def simulate_amc(x0: Sequence[float], y0: Optional[Sequence[int]], K1: float, K2: float, T: float,
                 rng: np.random.Generator, observe: Sequence[float] = ()) -> MCTrajectory:
    """Augmented multiplicative coalescent.

    Particles i, j merge at rate K1 x_i x_j (masses and attributes add); each
    particle's attribute grows by one at rate K2 x_i^2.
    """
    x = _validate_masses(x0).copy()
    y = np.zeros(x.size, dtype=np.int64) if y0 is None else np.asarray(y0, dtype=np.int64).copy()
    if y.size != x.size or np.any(y < 0):
        raise LabValidationError('attributes must be non-negative, one per particle')
    if K1 < 0 or K2 < 0 or T < 0:
        raise LabValidationError('rates and horizon must be non-negative', context={'K1': K1, 'K2': K2, 'T': T})
    total_mass = float(x.sum())
    alive = np.ones(x.size, dtype=bool)
    alive_count = x.size
    pair_tree = SumTree(x * (total_mass - x))
    mass_tree = SumTree(x)
    square_tree = SumTree(x ** 2)
    checkpoints = sorted(float(t) for t in observe if 0 <= t <= T)
    snapshots: Dict[float, MCState] = {}
    events: List[CoalescentEvent] = []
    clock = 0.0
    while True:
        merge_rate = K1 * pair_tree.total / 2.0 if alive_count > 1 else 0.0
        self_rate = K2 * square_tree.total
        rate = merge_rate + self_rate
        wait = rng.exponential(1.0 / rate) if rate > 1e-300 else math.inf
        while checkpoints and checkpoints[0] < clock + wait:
            snapshots[checkpoints.pop(0)] = _snapshot(x, y, alive, clock, K1, K2)
        if clock + wait > T:
            break
        clock += wait
        if rng.random() * rate < merge_rate:
            i = pair_tree.sample(rng)
            mass_tree.update(i, 0.0)
            j = mass_tree.sample(rng)
            mass_tree.update(i, x[i])
            keep, drop = (i, j) if i < j else (j, i)
            x[keep] += x[drop]
            y[keep] += y[drop]
            x[drop] = 0.0
            y[drop] = 0
            alive[drop] = False
            alive_count -= 1
            for idx in (keep, drop):
                pair_tree.update(idx, x[idx] * (total_mass - x[idx]) if alive[idx] else 0.0)
                mass_tree.update(idx, x[idx])
                square_tree.update(idx, x[idx] ** 2)
            events.append(CoalescentEvent(clock, 'merge', keep, drop))
        else:
            i = square_tree.sample(rng)
            y[i] += 1
            events.append(CoalescentEvent(clock, 'surplus', i, i))
    final = _snapshot(x, y, alive, T, K1, K2)
    return MCTrajectory(events=events, snapshots=snapshots, final=final)


def simulate_mc(x0: Sequence[float], K1: float, T: float, rng: np.random.Generator,
                observe: Sequence[float] = ()) -> MCTrajectory:
    """Multiplicative coalescent: i and j merge at rate K1 x_i x_j."""
    return simulate_amc(x0, None, K1, 0.0, T, rng, observe=observe)


@dataclass(frozen=True)
class DynEvent:
    time: float
    kind: str
    i: int
    j: int
    open_i: int = 0
    open_j: int = 0


@dataclass(frozen=True)
class DynState:
    """Snapshot of a half-edge construction.

    ``open_by_component`` maps a component's smallest vertex to its number of
    open half-edges O_i; ``surplus_by_component`` likewise for surplus edges.
    """

    time: float
    n: int
    edges: np.ndarray
    open_by_component: Dict[int, int]
    surplus_by_component: Dict[int, int]
    s1: int
    events: Tuple[DynEvent, ...] = ()
    bad_edges: int = 0

    def graph(self) -> MultiGraph:
        return MultiGraph.from_edge_list(self.n, self.edges)


@dataclass
class DynTrajectory:
    times: np.ndarray
    s1_values: np.ndarray
    events: List[DynEvent]
    final: DynState
    bad_edge_counts: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


class _OpenPool:
    """Open half-edges with O(1) uniform draws and removals."""

    def __init__(self, ids: Sequence[int]):
        self.items = list(int(h) for h in ids)
        self.where = {h: k for k, h in enumerate(self.items)}

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, h: int) -> bool:
        return h in self.where

    def remove(self, h: int) -> None:
        k = self.where.pop(h)
        last = self.items.pop()
        if last != h:
            self.items[k] = last
            self.where[last] = k

    def draw(self, rng: np.random.Generator, exclude: int = -1) -> int:
        while True:
            h = self.items[int(rng.integers(len(self.items)))]
            if h != exclude:
                return h


class DynamicConstruction:
    """Unit-rate clocks on open half-edges; a ringing half-edge pairs with a uniform other open one."""

    def __init__(self, d: DegreeSequence, rng: np.random.Generator):
        if not d.has_even_total:
            raise LabValidationError('total degree must be even', context={'total': d.total})
        self.d = d
        self.rng = rng
        self.owner = d.half_edge_owner()
        self.pool = _OpenPool(range(d.total))
        self.components = UnionFind(d.n)
        self.open_count = d.degrees.astype(np.int64).copy()
        self.surplus = np.zeros(d.n, dtype=np.int64)
        self.edges: List[Tuple[int, int]] = []
        self.events: List[DynEvent] = []
        self.clock = 0.0
        self.times = [0.0]
        self.s1_values = [d.total]

    @property
    def s1(self) -> int:
        return len(self.pool)

    def _join(self, h: int, x: int, time: float) -> DynEvent:
        u, v = int(self.owner[h]), int(self.owner[x])
        self.pool.remove(h)
        self.pool.remove(x)
        self.edges.append((min(u, v), max(u, v)))
        ru, rv = self.components.find(u), self.components.find(v)
        if ru == rv:
            self.open_count[ru] -= 2
            self.surplus[ru] += 1
            event = DynEvent(time, 'surplus', ru, ru, int(self.open_count[ru]), int(self.open_count[ru]))
        else:
            ou, ov = int(self.open_count[ru]), int(self.open_count[rv])
            root = self.components.union(u, v)
            self.open_count[root] = ou + ov - 2
            self.surplus[root] = self.surplus[ru] + self.surplus[rv]
            event = DynEvent(time, 'merge', ru, rv, ou, ov)
        self.events.append(event)
        return event

    def run_until(self, T: float) -> None:
        while self.s1 >= 2:
            wait = self.rng.exponential(1.0 / self.s1)
            if self.clock + wait > T:
                self.clock = T
                return
            self.clock += wait
            h = self.pool.draw(self.rng)
            x = self.pool.draw(self.rng, exclude=h)
            self._join(h, x, self.clock)
            self.times.append(self.clock)
            self.s1_values.append(self.s1)
        if math.isfinite(T):
            self.clock = max(self.clock, T)

    def state(self) -> DynState:
        roots: Dict[int, int] = {}
        opens: Dict[int, int] = {}
        surplus: Dict[int, int] = {}
        for v in range(self.d.n):
            r = self.components.find(v)
            if r not in roots:
                roots[r] = v
                opens[v] = int(self.open_count[r])
                surplus[v] = int(self.surplus[r])
        edges = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        return DynState(time=self.clock, n=self.d.n, edges=edges, open_by_component=opens,
                        surplus_by_component=surplus, s1=self.s1, events=tuple(self.events))

    def trajectory(self) -> DynTrajectory:
        return DynTrajectory(times=np.array(self.times), s1_values=np.array(self.s1_values),
                             events=list(self.events), final=self.state())


def dynamic_construction(d: DegreeSequence, T: float, rng: np.random.Generator) -> Tuple[DynTrajectory, MultiGraph]:
    """Run the dynamic construction to time T (math.inf runs to exhaustion)."""
    if T < 0:
        raise LabValidationError('horizon must be non-negative', context={'T': T})
    dyn = DynamicConstruction(d, rng)
    dyn.run_until(T)
    trajectory = dyn.trajectory()
    return trajectory, trajectory.final.graph()


def modified_process(d: DegreeSequence, t_start: float, T: float, rng: np.random.Generator,
                     start: Optional[DynamicConstruction] = None) -> DynTrajectory:
    """Kept-alive process coupled to the dynamic construction from t_start on.

    The open set O frozen at t_start never depletes: every event pairs a uniform
    pair of O at total rate |O|, so components of the kept-alive graph merge at
    rate 2 O_i O_j / (|O| - 1). A pairing whose half-edges are both still open
    in the dynamic graph is applied there too ('pair'); otherwise it is a bad edge.
    """
    if T < t_start:
        raise LabValidationError('T must not precede t_start', context={'t_start': t_start, 'T': T})
    dyn = start or DynamicConstruction(d, rng)
    if start is None:
        dyn.run_until(t_start)
    frozen = list(dyn.pool.items)
    s_bar = len(frozen)
    bar_components = UnionFind(d.n)
    for u, v in dyn.edges:
        bar_components.union(u, v)
    roots = {}
    for h in frozen:
        r = bar_components.find(int(dyn.owner[h]))
        roots[r] = roots.get(r, 0) + 1
    bar_open = np.zeros(d.n, dtype=np.int64)
    for r, count in roots.items():
        bar_open[r] = count
    bar_surplus = np.zeros(d.n, dtype=np.int64)
    events: List[DynEvent] = []
    bad = 0
    bad_counts = [0]
    times = [t_start]
    s1_values = [s_bar]
    clock = t_start
    while s_bar >= 2:
        wait = rng.exponential(1.0 / s_bar)
        if clock + wait > T:
            break
        clock += wait
        a = frozen[int(rng.integers(s_bar))]
        b = a
        while b == a:
            b = frozen[int(rng.integers(s_bar))]
        u, v = int(dyn.owner[a]), int(dyn.owner[b])
        ru, rv = bar_components.find(u), bar_components.find(v)
        if ru == rv:
            bar_surplus[ru] += 1
            events.append(DynEvent(clock, 'surplus', ru, ru, int(bar_open[ru]), int(bar_open[ru])))
        else:
            ou, ov = int(bar_open[ru]), int(bar_open[rv])
            root = bar_components.union(u, v)
            bar_open[root] = ou + ov
            bar_surplus[root] = bar_surplus[ru] + bar_surplus[rv]
            events.append(DynEvent(clock, 'merge', ru, rv, ou, ov))
        if a in dyn.pool and b in dyn.pool:
            dyn._join(a, b, clock)
            events.append(DynEvent(clock, 'pair', a, b))
        else:
            bad += 1
        times.append(clock)
        s1_values.append(dyn.s1)
        bad_counts.append(bad)
    dyn.clock = clock
    state = dyn.state()
    final = DynState(time=clock, n=d.n, edges=state.edges, open_by_component=state.open_by_component,
                     surplus_by_component=state.surplus_by_component, s1=state.s1,
                     events=tuple(events), bad_edges=bad)
    return DynTrajectory(times=np.array(times), s1_values=np.array(s1_values), events=events,
                         final=final, bad_edge_counts=np.array(bad_counts, dtype=np.int64))


def open_half_edge_masses(state: DynState) -> Tuple[np.ndarray, np.ndarray]:
    """(O_i, surplus_i) per component with at least one open half-edge, as AMC input."""
    keys = [k for k, o in state.open_by_component.items() if o > 0]
    masses = np.array([state.open_by_component[k] for k in keys], dtype=float)
    attrs = np.array([state.surplus_by_component[k] for k in keys], dtype=np.int64)
    return masses, attrs


def merge_statistics(events: Sequence) -> Dict[str, float]:
    """Counts of merge and surplus events and the first merge time."""
    merges = [e for e in events if e.kind == 'merge']
    return {
        'merges': len(merges),
        'surplus': sum(1 for e in events if e.kind == 'surplus'),
        'first_merge_time': merges[0].time if merges else math.inf,
    }


def time_map(nu_n: float, c_n: float, lam: float) -> float:
    """t_n(lambda) = (1/2) log(nu_n / (nu_n - 1)) + lambda / (2 (nu_n - 1) c_n)."""
    if nu_n <= 1:
        raise LabValidationError('time map needs nu_n > 1', context={'nu_n': nu_n})
    if c_n <= 0:
        raise LabValidationError('c_n must be positive', context={'c_n': c_n})
    return 0.5 * math.log(nu_n / (nu_n - 1.0)) + lam / (2.0 * (nu_n - 1.0) * c_n)


def _mass_key(masses: np.ndarray) -> Tuple[float, ...]:
    return tuple(round(float(m), 9) for m in sorted(masses, reverse=True))


def nr_mc_coupling_check(x: Sequence[float], t: float, rng: np.random.Generator,
                         n_samples: int) -> float:
    """Total variation between MC(t) masses from x and component masses of NR with q = t."""
    masses = _validate_masses(x)
    if t < 0 or n_samples < 1:
        raise LabValidationError('need t >= 0 and n_samples >= 1', context={'t': t, 'n_samples': n_samples})
    mc_counts: Counter = Counter()
    nr_counts: Counter = Counter()
    weights = WeightSequence(masses)
    for _ in range(n_samples):
        traj = simulate_mc(masses, 1.0, t, rng)
        mc_counts[_mass_key(traj.final.masses)] += 1
        graph = inhomogeneous_graph(weights, 'nr_q', rng, q=t)
        count, labels = csgraph.connected_components(graph.adjacency(), directed=False)
        nr_counts[_mass_key(np.bincount(labels, weights=masses, minlength=count))] += 1
    keys = set(mc_counts) | set(nr_counts)
    return 0.5 * sum(abs(mc_counts[k] - nr_counts[k]) for k in keys) / n_samples
