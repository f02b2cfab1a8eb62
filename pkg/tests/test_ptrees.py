from collections import Counter

import numpy as np
import pytest
from scipy import stats

from critgraph.error_handling import LabValidationError
from critgraph.ptrees import (ROOT, PTree, decode_rooted_pruefer, enumerate_ordered_trees,
                              enumerate_rooted_trees, ordered_tree_probability, pcon_graph,
                              pcon_sample, permitted_endpoints, permitted_mass, ptree_direct,
                              ptree_tilted, tilt_value, tilted_ordered_law, tree_probability)
from critgraph.unionfind import UnionFind

P3 = (0.5, 0.3, 0.2)


def test_pruefer_decoding_last_entry_is_root():
    tree = decode_rooted_pruefer([2, 2], 3)
    assert tree.root == 2
    assert tree.parent == (2, 2, ROOT)
    assert tree.depth_first_order() == [2, 0, 1]

    chain = decode_rooted_pruefer([0, 1], 3)
    assert chain.parent == (1, ROOT, 0)
    assert chain.root == 1


def test_enumeration_counts():
    assert sum(1 for _ in enumerate_rooted_trees(3)) == 9
    assert len({t.parent for t in enumerate_rooted_trees(4)}) == 64
    # the three stars on [3] each have two child orders
    assert sum(1 for _ in enumerate_ordered_trees(3)) == 12


@pytest.mark.parametrize('p', [P3, (0.1, 0.2, 0.3, 0.4)])
def test_tree_probabilities_sum_to_one(p):
    m = len(p)
    assert sum(tree_probability(t, p) for t in enumerate_rooted_trees(m)) == pytest.approx(1.0)
    assert sum(ordered_tree_probability(t, p) for t in enumerate_ordered_trees(m)) == pytest.approx(1.0)


def test_ptree_rejects_bad_masses():
    with pytest.raises(LabValidationError):
        ptree_direct([0.5, 0.5, 0.0], np.random.default_rng(0))
    with pytest.raises(LabValidationError):
        ptree_direct([0.5, 0.6], np.random.default_rng(0))
    with pytest.raises(LabValidationError):
        ptree_direct([0.5, 0.5], np.random.default_rng(0), mode='bogus')


def test_single_vertex_tree():
    tree = ptree_direct([1.0], np.random.default_rng(0))
    assert tree.m == 1 and tree.root == 0 and tree.edges() == []


def test_invalid_parent_arrays():
    with pytest.raises(LabValidationError):
        PTree.from_parents([ROOT, ROOT])
    with pytest.raises(LabValidationError):
        PTree.from_parents([1, 0, ROOT])


@pytest.mark.parametrize('mode', ['birthday', 'sequential'])
def test_direct_sampler_matches_ptree_law(mode):
    rng = np.random.default_rng(7)
    trees = list(enumerate_rooted_trees(3))
    expected = np.array([tree_probability(t, P3) for t in trees])
    draws = 6000
    counts = Counter(ptree_direct(P3, rng, mode=mode).unordered_key() for _ in range(draws))
    observed = np.array([counts.get(t.parent, 0) for t in trees])
    assert observed.sum() == draws
    _, p_value = stats.chisquare(observed, expected * draws)
    assert p_value > 1e-3


def test_permitted_endpoints_on_small_tree():
    # root 0 with children 1, 2 (in that order); 3 hangs below 1
    tree = PTree.from_parents([ROOT, 0, 0, 1])
    assert permitted_endpoints(tree, 3) == [2]
    assert permitted_endpoints(tree, 1) == [2]
    assert permitted_endpoints(tree, 2) == []
    assert permitted_endpoints(tree, 0) == []
    flipped = PTree(4, tree.parent, ((2, 1), (3,), (), ()), 0)
    assert permitted_endpoints(flipped, 2) == [1]
    assert permitted_endpoints(flipped, 3) == []


def test_permitted_mass_matches_endpoints():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    for tree in enumerate_ordered_trees(4):
        mass = permitted_mass(tree, p)
        for v in range(4):
            assert mass[v] == pytest.approx(p[permitted_endpoints(tree, v)].sum())


def test_tilt_is_one_without_tilting():
    for tree in enumerate_ordered_trees(3):
        assert tilt_value(tree, P3, 0.0) == 1.0


def test_tilted_law_normalized():
    law = tilted_ordered_law(P3, 1.5)
    assert len(law) == 12
    assert sum(law.values()) == pytest.approx(1.0)


def test_enumerated_tilted_sampler_matches_exact_law():
    rng = np.random.default_rng(11)
    a = 2.0
    law = tilted_ordered_law(P3, a)
    draws = 5000
    counts = Counter()
    for _ in range(draws):
        state, weight = ptree_tilted(P3, a, rng)
        assert weight == 1.0
        counts[state.tree] += 1
    for tree, prob in law.items():
        assert counts[tree] / draws == pytest.approx(prob, abs=0.035)


def test_tilted_sampler_preconditions():
    rng = np.random.default_rng(0)
    with pytest.raises(LabValidationError):
        ptree_tilted(P3, 0.0, rng)
    with pytest.raises(LabValidationError):
        ptree_tilted(P3, 1.0, rng, settings={'tilt_enumerate_max_m': 2})
    with pytest.raises(LabValidationError):
        ptree_tilted(P3, 1.0, rng, sampler='importance', proposals=0)
    with pytest.raises(LabValidationError):
        ptree_tilted(P3, 1.0, rng, sampler='mcmc')


def test_importance_sampler_reports_weight_and_ess():
    rng = np.random.default_rng(3)
    state, weight = ptree_tilted(P3, 1.0, rng, sampler='importance', proposals=200)
    assert weight == pytest.approx(state.tilt_value)
    assert 1.0 <= state.importance_ess <= 200.0


@pytest.mark.parametrize('sampler', ['enumerate', 'importance'])
def test_pcon_graph_is_connected_and_simple(sampler):
    rng = np.random.default_rng(5)
    p = np.array([0.4, 0.25, 0.15, 0.1, 0.1])
    for _ in range(50):
        graph = pcon_graph(p, 3.0, rng, sampler=sampler, proposals=50)
        assert graph.n == 5
        assert UnionFind(5).add_edges(graph.edge_array().tolist()).num_components == 1
        assert graph.num_edges >= 4


def test_pcon_surplus_edges_use_permitted_endpoints():
    rng = np.random.default_rng(9)
    p = np.array([0.3, 0.3, 0.2, 0.2])
    seen_surplus = False
    for _ in range(200):
        graph, state = pcon_sample(p, 8.0, rng)
        tree_edges = {(min(u, v), max(u, v)) for u, v in state.tree.edges()}
        for u, v in state.surplus_endpoints:
            seen_surplus = True
            assert v in permitted_endpoints(state.tree, u) or u in permitted_endpoints(state.tree, v)
            assert (u, v) not in tree_edges
        assert graph.num_edges == len(tree_edges) + len(state.surplus_endpoints)
    assert seen_surplus
