"""p-trees, their tilted ordered law, and the connected-graph construction on top of them.

A p-tree on [m] has law P(t) = prod_v p_v^{d_v(t)} where d_v is the number of
children of v. Giving every vertex a uniform order on its children yields the
ordered law prod_v p_v^{d_v} / d_v!. Tilting the ordered law by

    L(t) = prod_{(k,l) in E(t)} (exp(a p_k p_l) - 1) / (a p_k p_l) * exp(Lambda(t))

and then sprinkling Poisson surplus edges between each vertex and its permitted
endpoints produces a connected graph with law P_con(.; p, a, [m]).

Permitted endpoints of v are the children of strict ancestors of v that sit to
the right of the root-to-v path. A(v) is their total p-mass and
Lambda(t) = a sum_v p_v A(v).
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .config_loader import load_settings
from .error_handling import LabValidationError
from .graphs import SimpleGraph

logger = logging.getLogger(__name__)

ROOT = -1


@dataclass(frozen=True)
class PTree:
    m: int
    parent: Tuple[int, ...]
    child_order: Tuple[Tuple[int, ...], ...]
    root: int

    def __post_init__(self):
        if self.m < 1 or len(self.parent) != self.m or len(self.child_order) != self.m:
            raise LabValidationError('tree arrays must have length m', context={'m': self.m})
        roots = [v for v, par in enumerate(self.parent) if par == ROOT]
        if roots != [self.root]:
            raise LabValidationError('tree must have exactly one root', context={'roots': roots})
        for v, children in enumerate(self.child_order):
            if any(self.parent[c] != v for c in children):
                raise LabValidationError('child order disagrees with parent array', context={'vertex': v})
        if sum(len(c) for c in self.child_order) != self.m - 1:
            raise LabValidationError('child order must list every non-root vertex once')
        if len(self.depth_first_order()) != self.m:
            raise LabValidationError('parent array contains a cycle')

    @classmethod
    def from_parents(cls, parent: Sequence[int], child_order: Optional[Sequence[Sequence[int]]] = None) -> 'PTree':
        m = len(parent)
        if child_order is None:
            buckets: List[List[int]] = [[] for _ in range(m)]
            for v, par in enumerate(parent):
                if par != ROOT:
                    buckets[par].append(v)
            child_order = buckets
        root = next((v for v, par in enumerate(parent) if par == ROOT), -1)
        return cls(m=m, parent=tuple(int(x) for x in parent),
                   child_order=tuple(tuple(int(c) for c in cs) for cs in child_order), root=root)

    def children_counts(self) -> np.ndarray:
        return np.array([len(c) for c in self.child_order], dtype=np.int64)

    def edges(self) -> List[Tuple[int, int]]:
        return [(par, v) for v, par in enumerate(self.parent) if par != ROOT]

    def depth_first_order(self) -> List[int]:
        """Preorder, children visited left to right."""
        order: List[int] = []
        stack = [self.root]
        seen = 0
        while stack and seen <= self.m:
            v = stack.pop()
            order.append(v)
            seen += 1
            stack.extend(reversed(self.child_order[v]))
        return order

    def shuffled(self, rng: np.random.Generator) -> 'PTree':
        """Same tree with independent uniform child orders."""
        orders = tuple(tuple(int(c) for c in rng.permutation(cs)) if len(cs) > 1 else cs
                       for cs in self.child_order)
        return PTree(self.m, self.parent, orders, self.root)

    def unordered_key(self) -> Tuple[int, ...]:
        return self.parent


@dataclass(frozen=True)
class TiltState:
    tree: PTree
    depth_first_order: Tuple[int, ...]
    permitted_mass: np.ndarray
    tilt_value: float
    surplus_rate: float
    surplus_endpoints: Tuple[Tuple[int, int], ...] = ()
    importance_ess: Optional[float] = field(default=None, compare=False)


def validate_mass(p: Sequence[float]) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.size == 0:
        raise LabValidationError('probability vector is empty')
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise LabValidationError('p-tree masses must be strictly positive',
                                 context={'min_mass': float(arr.min())})
    if not math.isclose(float(arr.sum()), 1.0, rel_tol=0, abs_tol=1e-9):
        raise LabValidationError('p-tree masses must sum to 1', context={'sum': float(arr.sum())})
    return arr / arr.sum()


def decode_rooted_pruefer(sequence: Sequence[int], m: int) -> PTree:
    """Rooted Pruefer decoding: entry i is the parent of the smallest free leaf; the last entry is the root."""
    if m == 1:
        return PTree(1, (ROOT,), ((),), 0)
    count = [0] * m
    for s in sequence:
        count[s] += 1
    leaves = [v for v in range(m) if count[v] == 0]
    heapq.heapify(leaves)
    parent = [ROOT] * m
    children: List[List[int]] = [[] for _ in range(m)]
    for s in sequence:
        leaf = heapq.heappop(leaves)
        parent[leaf] = int(s)
        children[s].append(leaf)
        count[s] -= 1
        if count[s] == 0:
            heapq.heappush(leaves, int(s))
    root = int(sequence[-1])
    return PTree(m, tuple(parent), tuple(tuple(c) for c in children), root)


def _draw_indices(cdf: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    idx = np.searchsorted(cdf, rng.random(size), side='right')
    return np.minimum(idx, cdf.size - 1)


def _birthday_tree(p: np.ndarray, rng: np.random.Generator) -> PTree:
    m = p.size
    cdf = np.cumsum(p)
    parent = [ROOT] * m
    children: List[List[int]] = [[] for _ in range(m)]
    seen = np.zeros(m, dtype=bool)
    prev = int(_draw_indices(cdf, rng, 1)[0])
    root = prev
    seen[root] = True
    found = 1
    batch = max(4 * m, 64)
    while found < m:
        for y in _draw_indices(cdf, rng, batch):
            y = int(y)
            if not seen[y]:
                seen[y] = True
                parent[y] = prev
                children[prev].append(y)
                found += 1
                if found == m:
                    break
            prev = y
    return PTree(m, tuple(parent), tuple(tuple(c) for c in children), root)


def ptree_direct(p: Sequence[float], rng: np.random.Generator, mode: str = 'birthday') -> PTree:
    """Sample a p-tree by the repeat-time (birthday) construction or by decoding i.i.d. p-draws."""
    probs = validate_mass(p)
    m = probs.size
    if m == 1:
        return PTree(1, (ROOT,), ((),), 0)
    if mode == 'birthday':
        return _birthday_tree(probs, rng)
    if mode == 'sequential':
        seq = _draw_indices(np.cumsum(probs), rng, m - 1)
        return decode_rooted_pruefer(seq.tolist(), m)
    raise LabValidationError('unknown p-tree mode', context={'mode': mode})


def enumerate_rooted_trees(m: int) -> Iterator[PTree]:
    """All m^(m-1) rooted labelled trees on [m], children in ascending order."""
    if m == 1:
        yield PTree(1, (ROOT,), ((),), 0)
        return
    for seq in itertools.product(range(m), repeat=m - 1):
        tree = decode_rooted_pruefer(seq, m)
        yield PTree.from_parents(tree.parent, [sorted(c) for c in tree.child_order])


def enumerate_ordered_trees(m: int) -> Iterator[PTree]:
    for tree in enumerate_rooted_trees(m):
        per_vertex = [list(itertools.permutations(cs)) for cs in tree.child_order]
        for orders in itertools.product(*per_vertex):
            yield PTree(m, tree.parent, tuple(orders), tree.root)


def tree_probability(tree: PTree, p: Sequence[float]) -> float:
    probs = np.asarray(p, dtype=float)
    return float(np.prod(probs ** tree.children_counts()))


def ordered_tree_probability(tree: PTree, p: Sequence[float]) -> float:
    counts = tree.children_counts()
    return tree_probability(tree, p) / float(np.prod([math.factorial(int(c)) for c in counts]))


def permitted_endpoints(tree: PTree, v: int) -> List[int]:
    """Children of strict ancestors of v lying to the right of the root-to-v path, ascending ids."""
    out: List[int] = []
    child = v
    anc = tree.parent[v]
    while anc != ROOT:
        siblings = tree.child_order[anc]
        out.extend(siblings[siblings.index(child) + 1:])
        child, anc = anc, tree.parent[anc]
    return sorted(out)


def permitted_mass(tree: PTree, p: Sequence[float]) -> np.ndarray:
    probs = np.asarray(p, dtype=float)
    mass = np.zeros(tree.m)
    stack = [tree.root]
    while stack:
        i = stack.pop()
        children = tree.child_order[i]
        right = 0.0
        for c in reversed(children):
            mass[c] = mass[i] + right
            right += probs[c]
            stack.append(c)
    return mass


def _edge_factor(x: float) -> float:
    return 1.0 if x == 0 else math.expm1(x) / x


def tilt_value(tree: PTree, p: Sequence[float], a: float) -> float:
    probs = np.asarray(p, dtype=float)
    edge_part = 1.0
    for k, l in tree.edges():
        edge_part *= _edge_factor(a * probs[k] * probs[l])
    lam = a * float(np.dot(probs, permitted_mass(tree, probs)))
    return edge_part * math.exp(lam)


def tilt_state(tree: PTree, p: Sequence[float], a: float,
               surplus: Sequence[Tuple[int, int]] = (), ess: Optional[float] = None) -> TiltState:
    probs = np.asarray(p, dtype=float)
    mass = permitted_mass(tree, probs)
    mass.setflags(write=False)
    return TiltState(tree=tree,
                     depth_first_order=tuple(tree.depth_first_order()),
                     permitted_mass=mass,
                     tilt_value=tilt_value(tree, probs, a),
                     surplus_endpoints=tuple(surplus),
                     surplus_rate=a * float(np.dot(probs, mass)),
                     importance_ess=ess)


def tilted_ordered_law(p: Sequence[float], a: float) -> Dict[PTree, float]:
    """Exact tilted ordered law by brute enumeration; only sensible for m <= 5."""
    probs = validate_mass(p)
    weights = {t: ordered_tree_probability(t, probs) * tilt_value(t, probs, a)
               for t in enumerate_ordered_trees(probs.size)}
    total = sum(weights.values())
    return {t: w / total for t, w in weights.items()}


def _subtree_mass(tree: PTree, probs: np.ndarray) -> np.ndarray:
    mass = probs.copy()
    for v in reversed(tree.depth_first_order()):
        if tree.parent[v] != ROOT:
            mass[tree.parent[v]] += mass[v]
    return mass


def _order_weights(children: Sequence[int], subtree: np.ndarray, probs: np.ndarray,
                   a: float) -> Tuple[List[Tuple[int, ...]], np.ndarray]:
    """Every ordering of one sibling group with its weight exp(a sum_{j<l} S_{c_j} p_{c_l})."""
    orders = list(itertools.permutations(children))
    logw = np.empty(len(orders))
    for idx, order in enumerate(orders):
        acc = 0.0
        left = 0.0
        for c in order:
            acc += left * probs[c]
            left += subtree[c]
        logw[idx] = a * acc
    return orders, np.exp(logw)


@lru_cache(maxsize=8)
def _tilted_tree_table(p_key: Tuple[float, ...], a: float) -> np.ndarray:
    """Normalized tilted weights of every unordered rooted tree, indexed by Pruefer code."""
    probs = np.array(p_key)
    m = probs.size
    weights = []
    for tree in enumerate_rooted_trees(m):
        subtree = _subtree_mass(tree, probs)
        w = tree_probability(tree, probs)
        for k, l in tree.edges():
            w *= _edge_factor(a * probs[k] * probs[l])
        for cs in tree.child_order:
            if len(cs) > 1:
                _, ow = _order_weights(cs, subtree, probs, a)
                w *= float(ow.mean())
        weights.append(w)
    arr = np.array(weights)
    return arr / arr.sum()


def _code_to_sequence(index: int, m: int) -> List[int]:
    digits = []
    for _ in range(m - 1):
        index, r = divmod(index, m)
        digits.append(r)
    return digits[::-1]


def _sample_enumerated(probs: np.ndarray, a: float, rng: np.random.Generator) -> PTree:
    m = probs.size
    if m == 1:
        return PTree(1, (ROOT,), ((),), 0)
    table = _tilted_tree_table(tuple(float(x) for x in probs), float(a))
    code = int(rng.choice(table.size, p=table))
    base = decode_rooted_pruefer(_code_to_sequence(code, m), m)
    base = PTree.from_parents(base.parent, [sorted(c) for c in base.child_order])
    subtree = _subtree_mass(base, probs)
    orders = []
    for cs in base.child_order:
        if len(cs) > 1:
            options, ow = _order_weights(cs, subtree, probs, a)
            orders.append(options[int(rng.choice(len(options), p=ow / ow.sum()))])
        else:
            orders.append(cs)
    return PTree(m, base.parent, tuple(tuple(o) for o in orders), base.root)


def ptree_tilted(p: Sequence[float], a: float, rng: np.random.Generator,
                 sampler: str = 'enumerate', proposals: int = 1000,
                 settings: Optional[dict] = None) -> Tuple[TiltState, float]:
    """Draw from the tilted ordered p-tree law.

    ``enumerate`` is exact and returns weight 1. ``importance`` draws ``proposals``
    uniform-order p-trees, resamples one proportionally to L(t) and returns it with
    its raw weight L(t); the effective sample size is kept on the state.
    """
    probs = validate_mass(p)
    if a <= 0:
        raise LabValidationError('tilt parameter a must be positive', context={'a': a})
    settings = settings or load_settings()
    if sampler == 'enumerate':
        limit = int(settings['tilt_enumerate_max_m'])
        if probs.size > limit:
            raise LabValidationError('exact enumeration is limited to small trees',
                                     context={'m': probs.size, 'max_m': limit})
        tree = _sample_enumerated(probs, a, rng)
        return tilt_state(tree, probs, a), 1.0
    if sampler == 'importance':
        if proposals < 1:
            raise LabValidationError('importance sampling needs at least one proposal',
                                     context={'proposals': proposals})
        trees = [ptree_direct(probs, rng, mode='sequential').shuffled(rng) for _ in range(proposals)]
        weights = np.array([tilt_value(t, probs, a) for t in trees])
        norm = weights / weights.sum()
        ess = float(1.0 / np.sum(norm ** 2))
        if ess < 0.1 * proposals:
            logger.warning(f"low effective sample size {ess:.1f} of {proposals} tilted proposals (a={a})")
        chosen = int(rng.choice(proposals, p=norm))
        return tilt_state(trees[chosen], probs, a, ess=ess), float(weights[chosen])
    raise LabValidationError('unknown tilted sampler', context={'sampler': sampler})


def _surplus_edges(state: TiltState, probs: np.ndarray, a: float,
                   rng: np.random.Generator) -> List[Tuple[int, int]]:
    order = list(state.depth_first_order)
    heights = a * probs[order] * state.permitted_mass[order]
    lam = float(heights.sum())
    count = int(rng.poisson(lam)) if lam > 0 else 0
    edges = set()
    if count == 0:
        return []
    firsts = rng.choice(len(order), size=count, p=heights / lam)
    for idx in firsts:
        v = order[int(idx)]
        endpoints = permitted_endpoints(state.tree, v)
        masses = probs[endpoints]
        u = endpoints[int(rng.choice(len(endpoints), p=masses / masses.sum()))]
        edges.add((min(v, u), max(v, u)))
    return sorted(edges)


def pcon_sample(p: Sequence[float], a: float, rng: np.random.Generator,
                sampler: Optional[str] = None, proposals: int = 1000,
                settings: Optional[dict] = None) -> Tuple[SimpleGraph, TiltState]:
    settings = settings or load_settings()
    probs = validate_mass(p)
    if sampler is None:
        sampler = 'enumerate' if probs.size <= int(settings['tilt_enumerate_max_m']) else 'importance'
    state, _ = ptree_tilted(probs, a, rng, sampler=sampler, proposals=proposals, settings=settings)
    surplus = _surplus_edges(state, probs, a, rng)
    edges = [(min(u, v), max(u, v)) for u, v in state.tree.edges()] + surplus
    graph = SimpleGraph(probs.size, np.array(edges, dtype=np.int64).reshape(-1, 2))
    final = TiltState(tree=state.tree, depth_first_order=state.depth_first_order,
                      permitted_mass=state.permitted_mass, tilt_value=state.tilt_value,
                      surplus_rate=state.surplus_rate, surplus_endpoints=tuple(surplus),
                      importance_ess=state.importance_ess)
    return graph, final


def pcon_graph(p: Sequence[float], a: float, rng: np.random.Generator,
               sampler: Optional[str] = None, proposals: int = 1000,
               settings: Optional[dict] = None) -> SimpleGraph:
    """Connected graph with law P_con(.; p, a, [m]): tilted tree plus deduplicated Poisson surplus."""
    graph, _ = pcon_sample(p, a, rng, sampler=sampler, proposals=proposals, settings=settings)
    return graph
