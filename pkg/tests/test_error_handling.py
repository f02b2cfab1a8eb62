import logging

import pytest

from critgraph.error_handling import (ExperimentError, FailureLog, IncompleteWalkError, LabConfigError,
                                      LabError, LabValidationError, QuadratureError, RegimeError,
                                      SamplingExhaustedError, to_lab_error)


def test_validation_errors_are_value_errors():
    for error in (LabValidationError('bad'), RegimeError('bad', tau=3.0), IncompleteWalkError('bad')):
        assert isinstance(error, ValueError)
        assert isinstance(error, LabError)
    assert not isinstance(LabConfigError('bad'), ValueError)


def test_error_categories_and_context():
    regime = RegimeError('tau out of range', tau=3.0, context={'n': 10})
    assert regime.error_type == 'regime'
    assert regime.get_error_info()['type'] == 'regime'
    assert regime.context == {'n': 10, 'tau': 3.0}
    exhausted = SamplingExhaustedError('no simple graph', attempts=5)
    assert exhausted.attempts == 5 and exhausted.context['attempts'] == 5
    quad = QuadratureError('no convergence', achieved_error=0.2)
    assert quad.achieved_error == 0.2
    assert ExperimentError('x').error_type == 'experiment'


def test_one_line_and_report():
    error = LabValidationError('p must lie in [0, 1]', context={'p': 1.5})
    assert error.one_line() == 'validation: p must lie in [0, 1] (p=1.5)'
    assert LabError('plain').one_line() == 'generic: plain'
    report = error.format_report()
    assert 'VALIDATION ERROR' in report
    assert 'p: 1.5' in report
    assert 'Recovery Suggestions:' in report


def test_wrapped_exception_details():
    try:
        raise ZeroDivisionError('division by zero')
    except ZeroDivisionError as e:
        error = LabConfigError('cannot parse', original_exception=e)
    info = error.get_error_info()
    assert info['original_error']['type'] == 'ZeroDivisionError'
    assert 'Original Error: ZeroDivisionError' in error.format_report()


def test_to_lab_error_merges_context():
    wrapped = to_lab_error(KeyError('k'), {'index': 3})
    assert wrapped.error_type == 'unexpected'
    assert wrapped.context == {'index': 3}
    original = LabValidationError('bad', context={'a': 1})
    assert to_lab_error(original, {'b': 2}) is original
    assert original.context == {'a': 1, 'b': 2}


def test_failure_log_is_bounded(caplog):
    log = FailureLog(logging.getLogger('critgraph.tests'), limit=2)
    with caplog.at_level(logging.WARNING, logger='critgraph.tests'):
        for i in range(3):
            log.record(ValueError(f'failure {i}'), {'index': i})
    assert log.count == 3
    history = log.get_history()
    assert [h['context']['index'] for h in history] == [1, 2]
    assert history[0]['type'] == 'unexpected'
    assert 'failure 2' in caplog.text


def test_log_error(caplog):
    with caplog.at_level(logging.ERROR):
        LabValidationError('oops').log_error()
    assert 'oops' in caplog.text
    with pytest.raises(LabError):
        raise QuadratureError('tolerance', achieved_error=1.0)
