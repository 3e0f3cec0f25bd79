from fractions import Fraction

import numpy as np

from tmsl.machine import DETECT_A0
from tmsl.noisy import LocalChart, embed_code
from tmsl.propagation import eval_model
from tmsl.sampler import sample_model


def test_vertex_sampling_is_exact():
    freq, se = sample_model("BA", embed_code(DETECT_A0), DETECT_A0, 2, 1000, np.random.default_rng(0))
    assert freq.tolist() == [0.0, 1.0] and se.tolist() == [0.0, 0.0]


def test_sampler_agrees_with_exact():
    chart = LocalChart(DETECT_A0)
    code = chart.to_code([Fraction(1, 20)] * 30)
    exact = eval_model("B", code, DETECT_A0, 2)
    freq, se = sample_model("B", code, DETECT_A0, 2, 50_000, np.random.default_rng(1))
    assert abs(freq[1] - float(exact[1])) <= 4 * se[1]


def test_seeded_sampling_is_reproducible():
    chart = LocalChart(DETECT_A0)
    code = chart.to_code([Fraction(1, 20)] * 30)
    a = sample_model("AB", code, DETECT_A0, 2, 2000, np.random.default_rng(7))
    b = sample_model("AB", code, DETECT_A0, 2, 2000, np.random.default_rng(7))
    assert (a[0] == b[0]).all()
