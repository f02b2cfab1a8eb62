from collections import Counter

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critgraph.degree_models import DegreeSequence, scaling_constants
from critgraph.error_handling import IncompleteWalkError, LabValidationError
from critgraph.exploration import (ExplorationWalk, components_from_walk, explore_dfs, explore_unit,
                                   hitting_times, rescale_walk, size_biased_check, walk_scaling)
from critgraph.unionfind import UnionFind

degree_lists = st.lists(st.integers(min_value=0, max_value=6), min_size=1, max_size=25).map(
    lambda xs: DegreeSequence.from_iterable(xs))


def _byproduct_components(graph):
    uf = UnionFind(graph.n).add_edges(graph.edge_array().tolist())
    return Counter(uf.size_edge_pairs())


def _walk_components(walk):
    return Counter((c.size, c.edges) for c in components_from_walk(walk))


def test_hitting_times():
    assert hitting_times(np.array([0, 1, -1, -2, 0, -4, -6])).tolist() == [3, 5, 6]
    assert hitting_times(np.array([0, 2, 1])).tolist() == []


@settings(max_examples=60, deadline=None)
@given(degree_lists, st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_dfs_walk_matches_byproduct_graph(d, seed):
    walk, graph = explore_dfs(d, np.random.default_rng(seed))
    assert graph.degrees().tolist() == d.degrees.tolist()
    assert walk.stages == d.n
    assert int(walk.values[-1]) == -2 * walk.component_count
    assert sorted(walk.discovered_order.tolist()) == list(range(d.n))
    assert _walk_components(walk) == _byproduct_components(graph)


@settings(max_examples=60, deadline=None)
@given(degree_lists, st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_unit_walk_matches_byproduct_graph(d, seed):
    walk, graph = explore_unit(d, np.random.default_rng(seed))
    assert graph.degrees().tolist() == d.degrees.tolist()
    assert int(walk.values[-1]) == -2 * walk.component_count
    assert walk.component_count == UnionFind(d.n).add_edges(graph.edge_array().tolist()).num_components
    assert _walk_components(walk) == _byproduct_components(graph)
    # one root stage per component plus one stage per edge
    assert walk.stages == graph.num_edges + walk.component_count


def test_dfs_walk_agrees_with_networkx():
    rng = np.random.default_rng(12)
    d = DegreeSequence([5, 4, 3, 3, 2, 2, 2, 1, 1, 1, 0])
    walk, graph = explore_dfs(d, rng)
    nxg = nx.MultiGraph()
    nxg.add_nodes_from(range(d.n))
    nxg.add_edges_from(graph.edge_array().tolist())
    expected = sorted(len(c) for c in nx.connected_components(nxg))
    assert sorted(c.size for c in components_from_walk(walk)) == expected


def test_loops_can_be_left_out_of_marks():
    d = DegreeSequence([4])
    walk, graph = explore_unit(d, np.random.default_rng(0), count_loops=False)
    assert graph.loop_count() == 2
    assert walk.surplus_times.size == 0
    assert walk.loop_times.size == 2
    comp, = components_from_walk(walk)
    assert (comp.size, comp.edges, comp.surplus) == (1, 0, 0)

    walk, _ = explore_unit(d, np.random.default_rng(0), count_loops=True)
    comp, = components_from_walk(walk)
    assert (comp.size, comp.edges, comp.surplus) == (1, 2, 2)


def test_isolated_vertices_are_their_own_components():
    walk, _ = explore_dfs(DegreeSequence([0, 0, 0]), np.random.default_rng(0))
    assert walk.values.tolist() == [0, -2, -4, -6]
    assert [c.size for c in components_from_walk(walk)] == [1, 1, 1]


def test_empty_sequence_has_no_components():
    walk, _ = explore_dfs(DegreeSequence([]), np.random.default_rng(0))
    assert walk.stages == 0
    assert components_from_walk(walk) == []


def test_odd_total_is_rejected():
    with pytest.raises(LabValidationError):
        explore_dfs(DegreeSequence([1, 2]), np.random.default_rng(0))
    with pytest.raises(LabValidationError):
        explore_unit(DegreeSequence([3]), np.random.default_rng(0))


def test_incomplete_walk_is_reported():
    empty = np.array([], dtype=np.int64)
    walk = ExplorationWalk(values=np.array([0, 1]), tau=empty, mode='dfs_vertex', surplus_times=empty,
                           discovered_order=np.array([0]), events=('root',), loop_times=empty)
    with pytest.raises(IncompleteWalkError):
        components_from_walk(walk)


def test_walk_arrays_are_read_only():
    walk, _ = explore_dfs(DegreeSequence([2, 2]), np.random.default_rng(0))
    with pytest.raises(ValueError):
        walk.values[0] = 5


def test_rescale_walk():
    walk, _ = explore_dfs(DegreeSequence([3, 3, 2, 2, 1, 1]), np.random.default_rng(1))
    path = rescale_walk(walk, a_n=2.0, b_n=3.0)
    assert path.times[-1] == pytest.approx(walk.stages / 3.0)
    assert np.allclose(path.values, walk.values / 2.0)
    grid = rescale_walk(walk, a_n=1.0, b_n=1.0, dt=0.5)
    assert grid.values[1] == walk.values[0]
    assert grid.values[2] == walk.values[1]
    with pytest.raises(LabValidationError):
        rescale_walk(walk, a_n=0.0)


def test_walk_scaling_by_regime():
    scal = scaling_constants(2.5, 1000)
    a, b = walk_scaling(scal)
    assert a == b == pytest.approx(1000 ** scal.rho)
    scal = scaling_constants(3.5, 1000)
    assert walk_scaling(scal) == (scal.a_n, scal.b_n)


def test_first_discovered_vertex_is_size_biased():
    d = DegreeSequence([4, 3, 2, 2, 1])
    diag = size_biased_check(d, np.random.default_rng(3), runs=2000)
    assert diag.observed[0].sum() == 2000
    assert np.allclose(diag.expected, d.degrees / d.total)
    assert diag.p_value > 1e-3


def test_size_biased_check_validates():
    with pytest.raises(LabValidationError):
        size_biased_check(DegreeSequence([1, 1]), np.random.default_rng(0), steps=3)
    with pytest.raises(LabValidationError):
        size_biased_check(DegreeSequence([1, 1]), np.random.default_rng(0), runs=0)
