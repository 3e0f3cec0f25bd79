from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from tmsl import linalg

small_int = st.integers(-4, 4)
matrices = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(small_int, min_size=n, max_size=n), min_size=n, max_size=n))
rect = st.tuples(st.integers(1, 4), st.integers(1, 5)).flatmap(
    lambda s: st.lists(st.lists(small_int, min_size=s[1], max_size=s[1]), min_size=s[0], max_size=s[0]))


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_charpoly_matches_sympy(A):
    lam = sp.Symbol("lam")
    want = sp.Poly(sp.Matrix(A).charpoly(lam).as_expr(), lam).all_coeffs()
    assert linalg.charpoly(A) == [Fraction(int(c)) for c in want]


@settings(max_examples=60, deadline=None)
@given(rect)
def test_rank_and_nullspace_match_sympy(A):
    M = sp.Matrix(A)
    assert linalg.rank(A) == M.rank()
    basis = linalg.nullspace(A)
    assert len(basis) == len(M.nullspace())
    for v in basis:
        assert all(sum(a * b for a, b in zip(row, v)) == 0 for row in A)


def test_nullspace_free_column_form():
    A = [[1, 0, 1, 0], [0, 1, 1, 2]]
    assert linalg.nullspace(A) == [[-1, -1, 1, 0], [0, -2, 0, 1]]


def test_factor_rational():
    p = linalg.poly_mul(linalg.poly_mul([1, 0, 0], [1, -3]), [1, -11, 27, -12])
    zeros, roots, residual = linalg.factor_rational(p)
    assert zeros == 2 and roots == [3] and residual == [1, -11, 27, -12]


def test_real_roots_certified():
    p = [1, -11, 27, -12]
    iv = linalg.real_roots(p)
    want = sorted(np.roots(p).real)
    assert len(iv) == 3
    for (lo, hi), r in zip(iv, want):
        assert hi - lo <= Fraction(1, 10**12)
        assert lo - Fraction(1, 10**9) <= Fraction(r) <= hi + Fraction(1, 10**9)
        assert linalg.poly_eval(p, lo) * linalg.poly_eval(p, hi) <= 0


def test_real_roots_repeated_and_rational():
    p = linalg.poly_mul([1, -1], linalg.poly_mul([1, -1], [1, 0, -2]))
    iv = linalg.real_roots(p)
    mids = [float((a + b) / 2) for a, b in iv]
    assert mids == pytest.approx([-2 ** 0.5, 1.0, 2 ** 0.5])


def test_poly_divmod():
    q, r = linalg.poly_divmod([1, 0, -1], [1, -1])
    assert q == [1, 1] and r == [0]
