import pytest

from tmsl.machine import DETECT_A0, DETECT_A_INPUTS, tm_run
from tmsl.noisy import LocalChart
from tmsl.syndromes import (
    EnumerationGuardError, ErrorSyndrome, InvalidSyndromeError, count_syndromes, enumerate_syndromes,
    eval_syndrome, path_names,
)


def test_path_names():
    assert path_names(DETECT_A0, 1)[-2:] == ["Omega", "Xi"]
    assert len(path_names(DETECT_A0, 2)) == 6


def test_no_error_is_correct():
    for x in DETECT_A_INPUTS:
        assert eval_syndrome(x, ErrorSyndrome(), DETECT_A0) == tm_run(x, DETECT_A0, 2)


def test_weight_one_count():
    # 6 tuples: symbol 6 paths x 2 alts, state 8 x 1, direction 6 x 2
    assert count_syndromes(DETECT_A0, range(18), 1) == 1 + 6 * (12 + 8 + 12)


def test_enumeration_matches_count():
    squares = [10, 11]
    assert sum(1 for _ in enumerate_syndromes(DETECT_A0, squares, 2)) == count_syndromes(DETECT_A0, squares, 2)


def test_guard():
    with pytest.raises(EnumerationGuardError):
        next(enumerate_syndromes(DETECT_A0, C=3, limit=1000))


def test_invalid_syndromes():
    for flips in ({(99, 0): 1}, {(0, 9): 1}, {(0, 0): 0}, {(1, 0): 5}):
        with pytest.raises(InvalidSyndromeError):
            eval_syndrome("A", ErrorSyndrome.of(flips), DETECT_A0)


def test_weight_vector():
    chart = LocalChart(DETECT_A0)
    g = ErrorSyndrome.of({(10, 6): 0, (14, 0): 1, (14, 2): 1})
    w = g.weight(chart)
    assert w[17] == 1 and w[23] == 2 and sum(w) == 3


def test_omega_flip_on_a():
    # flipping (A,accept)'s next state where the second step copies it
    g = ErrorSyndrome.of({(10, 6): 0})
    assert eval_syndrome("A", g, DETECT_A0) == 0
