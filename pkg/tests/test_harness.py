import json
import logging
import math
from pathlib import Path

import numpy as np
import pytest

from critgraph import harness
from critgraph.degree_models import WeightSequence, build_power_law_degrees
from critgraph.error_handling import LabConfigError, LabValidationError, RegimeError
from critgraph.harness import (ExperimentSpec, estimate_kappa, load_experiment_spec,
                               near_critical_report, run_experiment, run_replicate,
                               scaling_regression, summarize, two_hop_check, write_results)
from critgraph.seeding import replicate_rng

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'

SMALL = ExperimentSpec(model='cm', tau=3.5, n_grid=(200, 400), replicates=3, seed=7,
                       outputs=('sizes', 'surplus', 'diameter', 'walks'), top_k=4)


def test_spec_validation_lists_problems():
    with pytest.raises(LabValidationError) as info:
        ExperimentSpec(model='ba', replicates=0)
    problems = info.value.context['problems']
    assert any('model' in p for p in problems)
    assert any('replicates' in p for p in problems)
    with pytest.raises(LabValidationError):
        ExperimentSpec(model='grg', mode='janson')
    with pytest.raises(LabValidationError):
        ExperimentSpec(degrees='mixture', mixture=((1, 0.5), (3, 0.25)))
    with pytest.raises(LabValidationError):
        ExperimentSpec(outputs=('sizes', 'histograms'))


def test_spec_hash_tracks_every_field():
    base = ExperimentSpec()
    assert base.spec_hash() == ExperimentSpec().spec_hash()
    assert base.spec_hash() != ExperimentSpec(seed=1).spec_hash()
    assert base.spec_hash() != ExperimentSpec(n_grid=(1000, 2000)).spec_hash()
    assert base.as_dict()['n_grid'] == [1000]


def test_load_example_experiment():
    spec = load_experiment_spec(CONFIG_DIR / 'example_experiment.toml')
    assert spec.n_grid == (1000, 3000)
    assert spec.lam == 0.0
    assert spec.seed == 20240611


def test_load_spec_aliases_and_errors(tmp_path):
    good = tmp_path / 'spec.json'
    good.write_text(json.dumps({'model': 'cm', 'lambda': 1.5, 'n': 500}))
    spec = load_experiment_spec(good)
    assert spec.lam == 1.5 and spec.n_grid == (500,)

    unknown = tmp_path / 'unknown.toml'
    unknown.write_text('[experiment]\nmodel = "cm"\ncolour = "red"\n')
    with pytest.raises(LabConfigError) as info:
        load_experiment_spec(unknown)
    assert info.value.context['keys'] == ['colour']

    invalid = tmp_path / 'invalid.json'
    invalid.write_text(json.dumps({'model': 'nope'}))
    with pytest.raises(LabConfigError):
        load_experiment_spec(invalid)

    with pytest.raises(LabConfigError):
        load_experiment_spec(tmp_path / 'missing.json')


def test_summarize():
    s = summarize([1.0, 2.0, 3.0, 4.0, math.nan])
    assert s['count'] == 4
    assert s['mean'] == pytest.approx(2.5)
    assert s['se'] == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert s['q50'] == pytest.approx(2.5)
    assert summarize([5.0])['se'] == 0.0
    empty = summarize([])
    assert empty['count'] == 0 and math.isnan(empty['mean'])


def test_run_replicate_record():
    record = run_replicate(SMALL, 200, replicate_rng(7, 0))
    assert len(record.sizes) <= 4
    assert list(record.sizes) == sorted(record.sizes, reverse=True)
    assert record.diameter >= 0
    assert all(e >= s - 1 for s, e in zip(record.sizes, record.edges))
    assert record.walk_sizes
    assert len(record.row()) == len(harness.RECORD_HEADER)


@pytest.mark.parametrize('model', ['ecm', 'grg', 'norrosreittu'])
def test_run_replicate_other_models(model):
    spec = ExperimentSpec(model=model, tau=3.5, n_grid=(300,), replicates=1, outputs=('sizes', 'susceptibilities'))
    record = run_replicate(spec, 300, replicate_rng(1, 0))
    assert record.sizes[0] >= 1
    assert record.s2_star > 0
    assert record.delta_max >= 0


def test_run_replicate_percolation_modes():
    for mode in ('janson', 'fountoulakis', 'none'):
        spec = ExperimentSpec(mode=mode, n_grid=(300,), replicates=1)
        record = run_replicate(spec, 300, replicate_rng(2, 0))
        assert record.sizes[0] >= 1
    assert run_replicate(ExperimentSpec(mode='none'), 300, replicate_rng(2, 0)).p == 1.0


def test_mixture_degrees():
    spec = ExperimentSpec(degrees='mixture', mixture=((1, 0.75), (3, 0.25)), tau=5.0, n_grid=(400,))
    d = harness.build_sequence(spec, 400, np.random.default_rng(0))
    assert d.n == 400
    assert sorted(set(d.degrees.tolist())) == [1, 3]
    assert d.has_even_total


def test_single_replicate_reproduces_run_replicate():
    spec = ExperimentSpec(n_grid=(300,), replicates=1, seed=11, outputs=('sizes', 'surplus'))
    result = run_experiment(spec)
    direct = run_replicate(spec, 300, replicate_rng(11, 0))
    record, = result.records
    assert (record.sizes, record.surplus, record.edges, record.p) == (direct.sizes, direct.surplus,
                                                                       direct.edges, direct.p)


def test_outputs_do_not_depend_on_thread_count(tmp_path):
    serial = write_results(run_experiment(SMALL, parallelism=1), tmp_path / 'serial')
    threaded = write_results(run_experiment(SMALL, parallelism=2), tmp_path / 'threaded')
    for key in ('replicates', 'summary'):
        assert serial[key].read_text() == threaded[key].read_text()


def test_write_results_files(tmp_path):
    result = run_experiment(SMALL)
    paths = write_results(result, tmp_path)
    manifest = json.loads(paths['manifest'].read_text())
    assert manifest['spec_hash'] == SMALL.spec_hash()
    assert manifest['seed'] == 7
    assert manifest['replicates_completed'] == 6
    assert len(manifest['durations']['replicate_s']) == 6
    header = paths['replicates'].read_text().splitlines()[0]
    assert header == ','.join(harness.RECORD_HEADER)
    summary_lines = paths['summary'].read_text().splitlines()
    # two n values, statistics C1, surplus1, diameter1, walk_C1
    assert len(summary_lines) == 1 + 2 * 4
    assert 'limit_law' not in paths


def test_failures_are_counted_not_fatal(monkeypatch, caplog):
    real = harness.run_replicate

    def flaky(spec, n, rng, replicate=0, index=0):
        if index == 1:
            raise LabValidationError('synthetic failure', context={'index': index})
        return real(spec, n, rng, replicate=replicate, index=index)

    monkeypatch.setattr(harness, 'run_replicate', flaky)
    spec = ExperimentSpec(n_grid=(200,), replicates=3, seed=3)
    with caplog.at_level(logging.WARNING, logger='critgraph.harness'):
        result = run_experiment(spec)
    assert result.failure_count == 1
    assert result.records[1] is None
    assert len(result.completed) == 2
    assert result.failures[0]['context']['index'] == 1
    assert '1 of 3 replicates failed' in caplog.text


def test_excursion_output_for_tau_34(tmp_path):
    spec = ExperimentSpec(n_grid=(300,), replicates=4, seed=5, outputs=('sizes', 'excursions'),
                          excursion_T=5.0, excursion_dt=0.01)
    result = run_experiment(spec)
    assert len(result.limit_law['length']) == 4
    paths = write_results(result, tmp_path)
    assert len(paths['limit_law'].read_text().splitlines()) == 5


def test_excursion_output_skipped_for_tau_23(caplog):
    spec = ExperimentSpec(tau=2.5, lam=1.0, n_grid=(300,), replicates=1, outputs=('sizes', 'excursions'))
    with caplog.at_level(logging.WARNING, logger='critgraph.harness'):
        result = run_experiment(spec)
    assert result.limit_law is None
    assert 'no excursion limit' in caplog.text


def test_two_hop_small_example():
    report = two_hop_check(WeightSequence([2.0, 1.0, 1.0]), 0.5, 1.0, 3, 3)
    # a_12 = 2/6, a_32 = 1/5, p^2 = 1/4
    assert report.values[0, 2] == pytest.approx(1 / 60)
    assert report.values[2, 0] == pytest.approx(1 / 60)
    assert np.all(np.diag(report.values) == 0)
    assert report.violations == 0
    assert report.alpha == pytest.approx(math.log(2) / math.log(3))


def test_two_hop_violations_with_small_constant():
    w = harness.build_power_law_weights(2.5, 200)
    report = two_hop_check(w, 0.3, 1.0, 10, 10)
    assert report.violations == 0
    tight = two_hop_check(w, 0.3, 1.0, 10, 10, C=report.C / 2)
    assert tight.violations > 0
    with pytest.raises(LabValidationError):
        two_hop_check(w, 1.5, 1.0, 10, 10)
    with pytest.raises(LabValidationError):
        two_hop_check(w, 0.3, 1.0, 500, 10)


def test_scaling_regression():
    ns = [1000, 10000, 100000]
    fit = scaling_regression({n: [3.0 * n ** 0.6] * 5 for n in ns})
    assert fit.slope == pytest.approx(0.6, abs=1e-10)
    assert fit.ci_low <= fit.slope <= fit.ci_high
    scaled = scaling_regression({n: [30.0 * n ** 0.6] for n in ns})
    assert scaled.slope == pytest.approx(fit.slope)
    assert scaling_regression({n: [7.0] for n in ns}).slope == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(LabValidationError):
        scaling_regression({1000: [1.0], 2000: [2.0]})
    with pytest.raises(LabValidationError):
        scaling_regression({n: [0.0] for n in ns})


def test_estimate_kappa():
    d = build_power_law_degrees(2.5, 2000)
    est = estimate_kappa(d, 0.05, 2.5)
    assert len(est.estimates) == 3
    assert est.kappa > 0
    with pytest.raises(RegimeError):
        estimate_kappa(d, 0.05, 3.5)
    with pytest.raises(LabValidationError):
        estimate_kappa(d, 0.0, 2.5)


def test_near_critical_report_rows():
    rows = near_critical_report(2.5, [400], 'subcritical', replicates=2, seed=1)
    row, = rows
    assert row.p_n < row.p_c
    assert row.ratio['count'] == 2
    assert row.theory == pytest.approx(1.0)
    assert row.edge_ratio['count'] == 0

    sup, = near_critical_report(2.5, [400], 'supercritical', replicates=2, seed=1)
    assert sup.edge_ratio['count'] == 2
    assert sup.edge_ratio_theory == pytest.approx(0.25)
    assert sup.kappa > 0
    with pytest.raises(LabValidationError):
        near_critical_report(2.5, [400], 'critical', replicates=1, seed=1)
    with pytest.raises(RegimeError):
        near_critical_report(3.5, [400], 'subcritical', replicates=1, seed=1)
