import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from critgraph.degree_models import DegreeSequence, WeightSequence
from critgraph.error_handling import LabValidationError, SamplingExhaustedError
from critgraph.graph_gen import (config_model, erased_config_model, inhomogeneous_graph, is_simple,
                                 kernel_probability, uniform_simple)


def test_config_model_preserves_degrees():
    rng = np.random.default_rng(1)
    d = DegreeSequence([3, 1, 1, 1, 0, 2])
    for _ in range(20):
        g = config_model(d, rng)
        assert g.degrees().tolist() == d.degrees.tolist()
        assert g.num_edges == 4


def test_config_model_rejects_odd_total():
    with pytest.raises(LabValidationError):
        config_model(DegreeSequence([1, 2]), np.random.default_rng(0))


def test_config_model_pairing_is_uniform():
    # four half-edges on one vertex each: three perfect matchings
    rng = np.random.default_rng(2)
    d = DegreeSequence([1, 1, 1, 1])
    draws = 3000
    counts = Counter(tuple(map(tuple, config_model(d, rng).edge_array().tolist())) for _ in range(draws))
    assert len(counts) == 3
    _, p_value = stats.chisquare(list(counts.values()))
    assert p_value > 1e-3


def test_uniform_simple_is_simple_and_uniform():
    # 2-regular on four vertices: exactly three 4-cycles
    rng = np.random.default_rng(3)
    d = DegreeSequence([2, 2, 2, 2])
    draws = 1500
    counts = Counter()
    for _ in range(draws):
        g = uniform_simple(d, rng)
        assert g.degrees().tolist() == [2, 2, 2, 2]
        counts[frozenset(g.edge_set())] += 1
    assert len(counts) == 3
    _, p_value = stats.chisquare(list(counts.values()))
    assert p_value > 1e-3


def test_uniform_simple_gives_up():
    with pytest.raises(SamplingExhaustedError) as info:
        uniform_simple(DegreeSequence([3, 1]), np.random.default_rng(0), max_tries=5)
    assert info.value.attempts == 5
    with pytest.raises(LabValidationError):
        uniform_simple(DegreeSequence([1, 1]), np.random.default_rng(0), max_tries=0)


def test_erased_config_model_never_adds_degree():
    rng = np.random.default_rng(4)
    d = DegreeSequence([5, 3, 2, 2, 1, 1])
    for _ in range(30):
        g, erased = erased_config_model(d, rng)
        assert np.all(g.degrees() <= d.degrees)
        assert g.num_edges + erased == d.total // 2


def test_is_simple():
    from critgraph.graphs import MultiGraph
    assert is_simple(MultiGraph.from_edge_list(3, [(0, 1), (1, 2)]))
    assert not is_simple(MultiGraph.from_edge_list(3, [(0, 1), (1, 0)]))
    assert not is_simple(MultiGraph.from_edge_list(3, [(2, 2)]))


def test_kernel_probability_values():
    assert kernel_probability('grg', 1.0, ell=1.0) == pytest.approx(0.5)
    assert kernel_probability('chunglu', 3.0, ell=2.0) == 1.0
    assert kernel_probability('norrosreittu', 1.0, ell=1.0) == pytest.approx(1 - math.exp(-1))
    assert kernel_probability('nr_q', 2.0, q=0.5) == pytest.approx(1 - math.exp(-1))
    with pytest.raises(LabValidationError):
        kernel_probability('nr_q', 1.0)
    with pytest.raises(LabValidationError):
        kernel_probability('bogus', 1.0)


@pytest.mark.parametrize('kernel', ['grg', 'chunglu', 'norrosreittu'])
def test_inhomogeneous_edge_frequencies(kernel):
    rng = np.random.default_rng(5)
    w = WeightSequence(np.array([3.0, 2.0, 1.5, 1.0, 0.5]))
    draws = 3000
    freq = np.zeros((5, 5))
    for _ in range(draws):
        for u, v in inhomogeneous_graph(w, kernel, rng).edge_array():
            freq[u, v] += 1
    freq /= draws
    for u in range(5):
        for v in range(u + 1, 5):
            expected = kernel_probability(kernel, w.weights[u] * w.weights[v], w.total)
            assert freq[u, v] == pytest.approx(expected, abs=0.04)


def test_nr_q_needs_q():
    w = WeightSequence(np.ones(4))
    with pytest.raises(LabValidationError):
        inhomogeneous_graph(w, 'nr_q', np.random.default_rng(0))
    empty = inhomogeneous_graph(w, 'nr_q', np.random.default_rng(0), q=0.0)
    assert empty.num_edges == 0
