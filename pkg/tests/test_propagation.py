import random
from fractions import Fraction

import numpy as np
import pytest

from tmsl.machine import DETECT_A0, DETECT_A_INPUTS, random_spec, tm_run
from tmsl.noisy import LocalChart, embed_code
from tmsl.polynomial import BudgetError
from tmsl.propagation import eval_model, eval_model_batch, propagate, propagate_inputs, unroll
from tmsl.syndromes import path_count


def test_path_counts_two_steps():
    dgm = unroll(DETECT_A0, 2, 2)
    counts = dgm.path_counts()
    assert counts == tuple(path_count(DETECT_A0, i % 3) for i in range(18))
    assert counts[:3] == (6, 8, 6)


def test_collapse_does_not_change_model():
    chart = LocalChart(DETECT_A0)
    code = chart.to_code([Fraction(1, 40 + i) for i in range(30)])
    a = eval_model("BA", code, DETECT_A0, 2, unroll(DETECT_A0, 2, 2, collapse=True))
    b = eval_model("BA", code, DETECT_A0, 2, unroll(DETECT_A0, 2, 2, collapse=False))
    assert a == b


def test_vertex_code_is_deterministic():
    code = embed_code(DETECT_A0)
    for x in DETECT_A_INPUTS:
        dist = eval_model(x, code, DETECT_A0, 2)
        assert dist[tm_run(x, DETECT_A0, 2)] == 1


def test_batch_matches_exact():
    chart = LocalChart(DETECT_A0)
    rng = np.random.default_rng(3)
    W = rng.integers(0, 30, (4, 30)) / 1000
    for x in ("A", "BA", "BB"):
        batch = eval_model_batch(x, W, chart, 2)
        for i in range(4):
            exact = eval_model(x, chart.to_code([Fraction(int(v * 1000), 1000) for v in W[i]]), DETECT_A0, 2)
            assert batch[i] == pytest.approx([float(exact[q]) for q in range(2)], abs=1e-12)


def test_untruncated_polynomials_reproduce_model():
    rng = random.Random(5)
    for _ in range(5):
        spec = random_spec(2, 2, rng)
        chart = LocalChart(spec)
        w = [Fraction(rng.randint(0, 20), 100) for _ in range(chart.dim)]
        code = chart.to_code(w)
        dgm = unroll(spec, 1, 2)
        prop = propagate(dgm, (1, 1), chart, k_max=None)
        values = list(w) + [1 - sum(w[k] for k in b) for b in chart.blocks]
        exact = eval_model((1, 1), code, spec, 1, dgm)
        for tau in range(spec.m):
            assert prop.poly(tau).evaluate(values) == exact[tau]


def test_block_homogeneity():
    # every monomial uses each square exactly once per computation path
    rng = random.Random(8)
    for _ in range(5):
        spec = random_spec(2, 2, rng)
        prop = propagate(unroll(spec, 1, 2), (1, 0), LocalChart(spec), k_max=None)
        for tau in prop.polys:
            assert prop.poly(tau).block_degrees(prop.chart.blocks) == prop.reads


def test_weight_one_counts_and_budget():
    prop = propagate_inputs(DETECT_A0, ["BA"], 2, k_max=1)["BA"]
    e = [0] * 30
    e[23] = 1
    assert prop.error_count(e) == 2
    e[23] = 2
    with pytest.raises(BudgetError):
        prop.error_count(e)


def test_threads_give_same_counts():
    a = propagate_inputs(DETECT_A0, DETECT_A_INPUTS, 2, k_max=1, threads=1)
    b = propagate_inputs(DETECT_A0, DETECT_A_INPUTS, 2, k_max=1, threads=3)
    for x in DETECT_A_INPUTS:
        assert a[x].polys == b[x].polys


def test_input_too_long():
    dgm = unroll(DETECT_A0, 1, 1)
    with pytest.raises(ValueError):
        propagate(dgm, "AB")
