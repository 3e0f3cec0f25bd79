"""Exact rational linear algebra and real root isolation.

Matrices are lists of rows of Fractions. Polynomials are coefficient lists,
highest degree first.
"""

from __future__ import annotations

import math
from fractions import Fraction


def to_fractions(A):
    return [[Fraction(v) for v in row] for row in A]


def matmul(A, B):
    Bt = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def transpose(A):
    return [list(r) for r in zip(*A)]


def rref(A):
    """Reduced row echelon form and pivot columns."""
    M = to_fractions(A)
    rows = len(M)
    cols = len(M[0]) if M else 0
    pivots = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        lead = M[r][c]
        M[r] = [v / lead for v in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return M, pivots


def rank(A):
    return len(rref(A)[1])


def nullspace(A):
    """Basis with one vector per free column, that column set to 1."""
    M, pivots = rref(A)
    cols = len(A[0]) if A else 0
    basis = []
    for free in (c for c in range(cols) if c not in pivots):
        v = [Fraction(0)] * cols
        v[free] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -M[r][free]
        basis.append(v)
    return basis


def charpoly(A):
    """det(lambda I - A) by the Faddeev-LeVerrier recursion."""
    n = len(A)
    A = to_fractions(A)
    coeffs = [Fraction(1)]
    M = [[Fraction(0)] * n for _ in range(n)]
    c = Fraction(1)
    for k in range(1, n + 1):
        M = matmul(A, M)
        for i in range(n):
            M[i][i] += c
        AM = matmul(A, M)
        c = -sum(AM[i][i] for i in range(n)) / k
        coeffs.append(c)
    return coeffs


def poly_trim(p):
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return p[i:]


def poly_eval(p, x):
    acc = 0
    for c in p:
        acc = acc * x + c
    return acc


def poly_divmod(p, d):
    p = [Fraction(c) for c in p]
    d = poly_trim([Fraction(c) for c in d])
    if len(p) < len(d):
        return [Fraction(0)], p
    q = []
    for i in range(len(p) - len(d) + 1):
        f = p[i] / d[0]
        q.append(f)
        for j, c in enumerate(d):
            p[i + j] -= f * c
    rem = poly_trim(p[len(p) - len(d) + 1:] or [Fraction(0)])
    return q, rem


def poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def poly_derivative(p):
    n = len(p) - 1
    return [c * (n - i) for i, c in enumerate(p[:-1])] or [0]


def _divisors(n):
    n = abs(n)
    return [d for d in range(1, n + 1) if n % d == 0]


def factor_rational(p):
    """Split a polynomial into (zero-root multiplicity, rational roots, residual factor).

    The residual is monic and has no rational roots.
    """
    p = poly_trim([Fraction(c) for c in p])
    zeros = 0
    while len(p) > 1 and p[-1] == 0:
        p = p[:-1]
        zeros += 1
    roots = []
    found = True
    while found and len(p) > 1:
        found = False
        scale = math.lcm(*(c.denominator for c in p))
        ints = [int(c * scale) for c in p]
        for num in _divisors(ints[-1]):
            for den in _divisors(ints[0]):
                for r in (Fraction(num, den), Fraction(-num, den)):
                    if poly_eval(p, r) == 0:
                        roots.append(r)
                        p, _ = poly_divmod(p, [1, -r])
                        found = True
                        break
                if found:
                    break
            if found:
                break
    lead = p[0]
    return zeros, sorted(roots), [c / lead for c in p]


def sturm_sequence(p):
    seq = [poly_trim([Fraction(c) for c in p])]
    seq.append(poly_trim(poly_derivative(seq[0])))
    while len(seq[-1]) > 1 or seq[-1][0] != 0:
        _, r = poly_divmod(seq[-2], seq[-1])
        r = [-c for c in r]
        if r == [0]:
            break
        seq.append(r)
        if len(r) == 1:
            break
    return seq


def _sign_changes(seq, x):
    signs = [s for s in (poly_eval(p, x) for p in seq) if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def poly_gcd(p, q):
    p, q = poly_trim([Fraction(c) for c in p]), poly_trim([Fraction(c) for c in q])
    while q != [0]:
        _, r = poly_divmod(p, q)
        p, q = q, r
    return [c / p[0] for c in p]


def squarefree(p):
    q, _ = poly_divmod(p, poly_gcd(p, poly_derivative(p)))
    return poly_trim(q)


def real_roots(p, tol=Fraction(1, 10**12)):
    """Certified isolating intervals (lo, hi] of width <= tol for the distinct real roots."""
    p = poly_trim([Fraction(c) for c in p])
    if len(p) == 1:
        return []
    p = squarefree(p)
    bound = 1 + max(abs(c / p[0]) for c in p[1:])
    seq = sturm_sequence(p)

    def count(lo, hi):
        return _sign_changes(seq, lo) - _sign_changes(seq, hi)

    out = []
    stack = [(-bound, bound)]
    while stack:
        lo, hi = stack.pop()
        c = count(lo, hi)
        if c == 0:
            continue
        if c == 1 and hi - lo <= tol:
            out.append((lo, hi))
            continue
        # split away from roots so Sturm counts at the split point stay valid
        for frac in (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(2, 5)):
            mid = lo + (hi - lo) * frac
            if poly_eval(p, mid) != 0:
                break
        stack.append((lo, mid))
        stack.append((mid, hi))
    return sorted(out)
