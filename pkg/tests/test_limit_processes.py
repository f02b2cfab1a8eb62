import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critgraph.error_handling import LabValidationError
from critgraph.limit_processes import (ExcursionLawParams, LimitPath, ThetaSequence,
                                       excursion_law_sample, excursions,
                                       excursions_from_running_minimum, isj_mean, mark_rate, marks,
                                       order_excursions, reflect, simulate_bm_parabolic,
                                       simulate_isj, simulate_path, simulate_thinned_levy,
                                       tail_variance_rate, thinned_levy_mean)


def _path(values, dt=1.0):
    values = np.asarray(values, dtype=float)
    return LimitPath(times=np.arange(values.size) * dt, values=values, dt=dt)


def test_theta_sequence_validation():
    seq = ThetaSequence.power_law(0.5, 3)
    assert np.allclose(seq.theta, [1.0, 2 ** -0.5, 3 ** -0.5])
    assert seq.K == 3
    with pytest.raises(LabValidationError):
        ThetaSequence([1.0, 2.0], 1.0)
    with pytest.raises(LabValidationError):
        ThetaSequence([], 1.0)
    with pytest.raises(LabValidationError):
        ThetaSequence([1.0], 0.0)
    with pytest.raises(LabValidationError):
        ThetaSequence([1.0], 1.0, cls='l1')


def test_reflect_known_values():
    refl = reflect(_path([0, -1, 1, -2, -1]))
    assert refl.values.tolist() == [0, 0, 2, 0, 1]
    assert refl.reflected


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=1, max_size=60))
def test_reflect_is_idempotent(values):
    once = reflect(_path(values))
    assert np.all(once.values >= 0)
    assert np.array_equal(reflect(once).values, once.values)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(min_value=-3, max_value=3), min_size=1, max_size=80))
def test_excursion_extractions_agree(steps):
    path = _path(np.concatenate([[0], np.cumsum(steps)]), dt=0.5)
    a = excursions(path)
    b = excursions_from_running_minimum(path)
    assert np.array_equal(a.index_bounds, b.index_bounds)
    assert np.allclose(a.lengths, b.lengths)
    assert np.allclose(a.areas, b.areas)
    assert np.array_equal(a.complete, b.complete)


def test_excursions_known_path():
    exc = excursions(_path([0, 1, 0, -1, 1, 2]))
    assert exc.index_bounds.tolist() == [[0, 2], [3, 5]]
    assert exc.lengths.tolist() == [2.0, 2.0]
    assert exc.areas.tolist() == [1.0, 2.0]
    assert exc.complete.tolist() == [True, False]


def test_order_excursions_breaks_ties_by_marks():
    exc = excursions(_path([0, 1, 0, 2, 0, 3, 3, 0]))
    tagged = type(exc)(intervals=exc.intervals, lengths=exc.lengths, areas=exc.areas,
                       marks=np.array([0, 4, 1]), complete=exc.complete, index_bounds=exc.index_bounds)
    ordered = order_excursions(tagged)
    assert ordered.lengths.tolist() == [3.0, 2.0, 2.0]
    assert ordered.marks.tolist() == [1, 4, 0]
    assert ordered.as_uvector(2).pairs == ((3.0, 1), (2.0, 4))


def test_grid_validation():
    with pytest.raises(LabValidationError):
        simulate_bm_parabolic(1.0, 1.0, 0.0, 0.0, 0.1, np.random.default_rng(0))
    with pytest.raises(LabValidationError):
        simulate_bm_parabolic(1.0, 1.0, 0.0, 1.0, -0.1, np.random.default_rng(0))
    with pytest.raises(LabValidationError):
        simulate_bm_parabolic(0.0, 1.0, 0.0, 1.0, 0.1, np.random.default_rng(0))


def test_bm_parabolic_mean():
    rng = np.random.default_rng(1)
    ends = [simulate_bm_parabolic(1.0, 1.0, 0.5, 2.0, 0.01, rng).values[-1] for _ in range(2000)]
    # lam t - eta t^2 / (2 mu^3) at t = 2
    assert np.mean(ends) == pytest.approx(-1.0, abs=0.15)
    assert np.var(ends) == pytest.approx(2.0, rel=0.15)


def test_thinned_levy_mean_formula():
    theta = ThetaSequence([1.0, 1.0], 1.0)
    assert thinned_levy_mean(theta, 0.0, 1.0) == pytest.approx(2 * (1 - math.exp(-1)) - 2, abs=1e-12)
    assert thinned_levy_mean(theta, 0.0, 1.0) == pytest.approx(-0.7358, abs=1e-4)


def test_thinned_levy_paths_match_mean():
    rng = np.random.default_rng(2)
    theta = ThetaSequence([1.0, 1.0], 1.0)
    ends = [simulate_thinned_levy(theta, 0.0, 1.0, 0.01, rng).values[-1] for _ in range(4000)]
    assert np.mean(ends) == pytest.approx(-0.7358, abs=0.05)


def test_thinned_levy_tail_modes():
    rng = np.random.default_rng(3)
    theta = ThetaSequence.power_law(0.4, 10)
    path = simulate_thinned_levy(theta, 0.0, 1.0, 0.01, rng, tail='brownian', tail_sigma2=0.5)
    assert path.tail_values is not None and path.tail_values[0] == 0.0
    with pytest.raises(LabValidationError):
        simulate_thinned_levy(theta, 0.0, 1.0, 0.01, rng, tail='brownian')
    with pytest.raises(LabValidationError):
        simulate_thinned_levy(theta, 0.0, 1.0, 0.01, rng, tail='gamma')
    with pytest.raises(LabValidationError):
        simulate_thinned_levy(ThetaSequence([1.0], 1.0, cls='l2_not_l1'), 0.0, 1.0, 0.01, rng)


def test_brownian_tail_variance_matches_rate():
    rng = np.random.default_rng(13)
    theta = ThetaSequence([1.0, 1.0], 1.0)
    sigma2 = 0.5
    paths = [simulate_thinned_levy(theta, 0.0, 1.0, 0.01, rng, tail='brownian', tail_sigma2=sigma2)
             for _ in range(4000)]
    tails = np.array([p.tail_values[-1] for p in paths])
    se = sigma2 * np.sqrt(2.0 / (tails.size - 1))
    assert abs(tails.var(ddof=1) - sigma2) < 3 * se
    assert abs(tails.mean()) < 3 * np.sqrt(sigma2 / tails.size)
    # the tail is added on top of the truncated sum
    path = paths[0]
    truncated = float(np.sum(theta.theta * (path.clocks <= 1.0))) - 2.0
    assert path.values[-1] - path.tail_values[-1] == pytest.approx(truncated)


def test_tail_variance_rate():
    assert tail_variance_rate([1.0, 2.0], mu=2.0) == pytest.approx(4.5)


def test_isj_paths_match_mean():
    rng = np.random.default_rng(4)
    theta = ThetaSequence([1.0, 0.5], 1.0, cls='l2_not_l1')
    ends = [simulate_isj(theta, 2.0, 1.0, 0.01, rng).values[-1] for _ in range(4000)]
    assert np.mean(ends) == pytest.approx(isj_mean(theta, 2.0, 1.0), abs=0.06)
    with pytest.raises(LabValidationError):
        simulate_isj(theta, 0.0, 1.0, 0.01, rng)
    with pytest.raises(LabValidationError):
        simulate_isj(ThetaSequence([1.0], 1.0), 1.0, 1.0, 0.01, rng)


def test_mark_rates():
    theta = ThetaSequence([1.0, 1.0], 2.0)
    assert mark_rate('beta_over_mu', mu=4.0) == 0.25
    assert mark_rate('theta_ratio', theta=theta) == pytest.approx(0.5)
    assert mark_rate('unit') == 1.0
    with pytest.raises(LabValidationError):
        mark_rate('beta_over_mu')
    with pytest.raises(LabValidationError):
        mark_rate('theta_ratio')
    with pytest.raises(LabValidationError):
        mark_rate('other')


def test_marks_follow_excursion_areas():
    rng = np.random.default_rng(5)
    path = reflect(simulate_bm_parabolic(1.0, 1.0, 1.0, 4.0, 0.01, rng))
    totals = []
    for _ in range(2000):
        exc = marks(path, 'unit', rng, rate=2.0)
        totals.append(int(exc.marks.sum()))
    expected = 2.0 * float(excursions(path).areas.sum())
    assert np.mean(totals) == pytest.approx(expected, abs=0.1 + 0.05 * expected)
    zero = marks(path, 'unit', rng, rate=0.0)
    assert zero.marks.sum() == 0
    with pytest.raises(LabValidationError):
        marks(path, 'unit', rng, rate=-1.0)


def test_simulate_path_dispatch():
    rng = np.random.default_rng(6)
    with pytest.raises(LabValidationError):
        simulate_path(ExcursionLawParams(process='thinned_levy'), rng)
    with pytest.raises(LabValidationError):
        simulate_path(ExcursionLawParams(process='other', theta=ThetaSequence([1.0], 1.0)), rng)
    path = simulate_path(ExcursionLawParams(T=1.0, dt=0.1), rng)
    assert path.times.size == 11


def test_excursion_law_sample_shapes():
    params = ExcursionLawParams(T=10.0, dt=0.01)
    law = excursion_law_sample(params, 20, np.random.default_rng(7), k=2,
                               settings={'excursion_pilot_paths': 5, 'excursion_pilot_quantile': 0.5})
    assert len(law.draws) == 20
    assert all(len(d) <= 2 for d in law.draws)
    assert law.longest().shape == (20,)
    assert np.all(law.longest() >= 0)
    with pytest.raises(LabValidationError):
        excursion_law_sample(params, 0, np.random.default_rng(0))


def test_excursion_law_sample_flags_short_horizon(caplog):
    params = ExcursionLawParams(process='thinned_levy', theta=ThetaSequence([1.0], 1.0), lam=5.0,
                                T=1.0, dt=0.01, mark_regime=None)
    with caplog.at_level(logging.WARNING, logger='critgraph.limit_processes'):
        law = excursion_law_sample(params, 5, np.random.default_rng(8),
                                   settings={'excursion_pilot_paths': 3, 'excursion_pilot_quantile': 0.99})
    assert not law.pilot_ok
    assert law.complete_fraction == 0.0
    assert 'too small' in caplog.text
