"""Local geometry of the potential H at a classical code.

H(w) = sum_x q(x) e(x, w)^2 with e the probability of a wrong final state.
Derivatives at the code are assembled from syndrome counts through the
S-coefficients; an independent route expands H directly from the f^tau
polynomials.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from . import linalg
from .noisy import smooth_mu
from .polynomial import BudgetError


@lru_cache(maxsize=None)
def _falling(n, r):
    return math.perm(n, r) if 0 <= r <= n else 0


def s_coefficient(k, s, n):
    """S^k_s for per-block multi-indices ``k``, ``s`` and reads per block ``n``."""
    total = 1
    for kb, sb, nb in zip(k, s, n):
        K, S = sum(kb), sum(sb)
        if any(b > a for a, b in zip(kb, sb)):
            raise ValueError("s must be componentwise <= k")
        if nb < K:
            return 0
        factor = (-1) ** (K - S) * _falling(nb - S, K - S)
        for a, b in zip(kb, sb):
            factor *= _falling(a, b)
        total *= factor
    return total


def split_blocks(v, blocks):
    return [tuple(v[j] for j in block) for block in blocks]


def sub_indices(k):
    """All s <= k componentwise, in lexicographic order."""
    return itertools.product(*(range(a + 1) for a in k))


class InfluenceTable:
    """Exact g_k(x) from propagated syndrome counts.

    ``props`` maps each input to its Propagation result; ``q`` maps inputs to
    probabilities.
    """

    def __init__(self, props, q):
        self.props = props
        self.q = {x: Fraction(p) for x, p in q.items()}
        first = next(iter(props.values()))
        self.chart = first.chart
        self.k_max = first.ring.k_max
        self.inputs = list(q)
        self._g = {}

    @property
    def dim(self):
        return self.chart.dim

    def A(self, s, x):
        return self.props[x].error_count(s)

    def g(self, k, x):
        k = tuple(k)
        if self.k_max is not None and sum(k) > self.k_max:
            raise BudgetError(f"|k| = {sum(k)} exceeds k_max = {self.k_max}")
        key = (k, x)
        if key not in self._g:
            self._g[key] = self._influence(k, x)
        return self._g[key]

    def _influence(self, k, x):
        prop = self.props[x]
        blocks = self.chart.blocks
        support = [i for i, v in enumerate(k) if v]
        kb = split_blocks(k, blocks)
        total = 0
        for sub in sub_indices(tuple(k[i] for i in support)):
            if not any(sub):
                continue
            s = [0] * len(k)
            for i, v in zip(support, sub):
                s[i] = v
            a = prop.error_count(s)
            if a:
                total += s_coefficient(kb, split_blocks(s, blocks), prop.reads) * a
        return total

    def expect(self, f):
        return sum(self.q[x] * f(x) for x in self.inputs)

    def weight_one_matrix(self):
        """P: rows are inputs, columns are chart coordinates."""
        d = self.dim
        rows = []
        for x in self.inputs:
            row = []
            for k in range(d):
                e = [0] * d
                e[k] = 1
                row.append(self.g(e, x))
            rows.append(row)
        return rows


def influence(x, k, table):
    return table.g(k, x)


def h_taylor(k, table):
    """Partial derivative of H at the code for multi-index k."""
    k = tuple(k)
    if sum(k) == 0:
        return Fraction(0)
    if table.k_max is not None and sum(k) - 1 > table.k_max:
        raise BudgetError(f"|k| = {sum(k)} needs counts of weight {sum(k) - 1} > k_max = {table.k_max}")
    support = [i for i, v in enumerate(k) if v]
    ks = tuple(k[i] for i in support)
    total = Fraction(0)
    for sub in sub_indices(ks):
        if not any(sub) or sub == ks:
            continue
        i = [0] * len(k)
        j = list(k)
        for idx, v in zip(support, sub):
            i[idx] = v
            j[idx] -= v
        c = math.prod(math.comb(a, b) for a, b in zip(ks, sub))
        total += c * table.expect(lambda x: table.g(i, x) * table.g(j, x))
    return total


def hessian(P, q):
    """2 P^T Q P with q a sequence of input probabilities in row order."""
    d = len(P[0])
    H = [[Fraction(0)] * d for _ in range(d)]
    for row, qx in zip(P, q):
        qx = Fraction(qx)
        nz = [(i, v) for i, v in enumerate(row) if v]
        for i, a in nz:
            for j, b in nz:
                H[i][j] += 2 * qx * a * b
    return H


def hessian_kernel(H):
    return linalg.nullspace(H)


def nonzero_block(H):
    """Indices of rows that are not identically zero, and the principal submatrix on them."""
    idx = [i for i, row in enumerate(H) if any(row)]
    return idx, [[H[i][j] for j in idx] for i in idx]


def matrix_content(M):
    """Positive rational c with M / c a primitive integer matrix."""
    vals = [Fraction(v) for row in M for v in row if v]
    if not vals:
        return Fraction(1)
    den = math.lcm(*(v.denominator for v in vals))
    num = math.gcd(*(int(v * den) for v in vals))
    return Fraction(num, den)


@dataclass
class Spectrum:
    charpoly: list
    zero_multiplicity: int
    rational_roots: list
    residual_factor: list
    residual_roots: list

    def eigenvalues(self):
        vals = [0.0] * self.zero_multiplicity + [float(r) for r in self.rational_roots]
        vals += [float((lo + hi) / 2) for lo, hi in self.residual_roots]
        return sorted(vals)


def spectrum(M, tol=Fraction(1, 10**12)):
    cp = linalg.charpoly(M)
    zeros, roots, residual = linalg.factor_rational(cp)
    return Spectrum(cp, zeros, roots, residual, linalg.real_roots(residual, tol))


@dataclass
class NewtonBound:
    distance: Fraction | None
    bound: Fraction | None
    degree: int | None
    dim: int
    certified_bound: Fraction | None
    min_support_degree: int | None = None
    weights: dict = field(default_factory=dict)

    @property
    def partial(self):
        return self.degree is not None


def _newton_lp(points):
    """min s with sum_k lam_k k_j <= s for all j, sum lam = 1, lam >= 0.

    Returns the primal weights and the dual weights on coordinates.
    """
    pts = np.asarray(points, dtype=float)
    m, d = pts.shape
    c = np.zeros(m + 1)
    c[-1] = 1.0
    A_ub = np.hstack([pts.T, -np.ones((d, 1))])
    A_eq = np.hstack([np.ones((1, m)), np.zeros((1, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(d), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * m + [(None, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"linear program failed: {res.message}")
    return res.x[:m], np.abs(res.ineqlin.marginals)


def _to_simplex(v, max_den=10**6):
    r = [max(Fraction(float(a)).limit_denominator(max_den), Fraction(0)) for a in v]
    total = sum(r)
    return [a / total for a in r]


def _certify(points, lam, y):
    """Exact optimum when rationalised primal and dual values coincide, else None."""
    lam, y = _to_simplex(lam), _to_simplex(y)
    d = len(points[0])
    primal = max(sum(l * p[j] for l, p in zip(lam, points)) for j in range(d))
    dual = min(sum(a * b for a, b in zip(y, p)) for p in points)
    return primal if primal == dual else None


def newton_bound(support, dim, degree=None):
    """Newton distance of conv(support) + orthant and the bound 1/l.

    ``degree`` is the degree up to which the support is known to be complete
    (None when it is complete). Every unknown point has degree above it, and a
    point of degree r contributes at least r / dim to the distance, which
    yields the certified bound dim / (least possible support degree).
    """
    points = sorted({tuple(p) for p in support})
    if not points:
        return NewtonBound(None, None, degree, dim, None)
    lam, y = _newton_lp(points)
    distance = _certify(points, lam, y)
    if distance is None:
        approx = float(max(np.asarray(points, dtype=float).T @ lam))
        distance = Fraction(approx).limit_denominator(10**6)
    min_deg = min(sum(p) for p in points)
    if degree is not None:
        min_deg = min(min_deg, degree + 1)
    weights = {p: float(l) for p, l in zip(points, lam) if l > 1e-9}
    return NewtonBound(distance, 1 / distance if distance else None, degree, dim,
                       Fraction(dim, min_deg), min_deg, weights)


def correction_bound(d, C):
    return Fraction(d, 2 * (C + 1))


def taylor_support(table, degree):
    """Multi-indices with nonzero derivative of H, up to total degree ``degree``."""
    d = table.dim
    out = []
    for r in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(d), r):
            k = [0] * d
            for i in combo:
                k[i] += 1
            if h_taylor(k, table) != 0:
                out.append(tuple(k))
    return out


def error_correction_order(table, C_max):
    """Largest C <= C_max such that no syndrome of weight 1..C changes an output."""
    if table.k_max is not None and C_max > table.k_max:
        raise BudgetError(f"C_max = {C_max} exceeds k_max = {table.k_max}")
    if C_max > 4:
        raise BudgetError("C_max above 4 is not supported")
    d = table.dim
    for c in range(1, C_max + 1):
        for combo in itertools.combinations_with_replacement(range(d), c):
            s = [0] * d
            for i in combo:
                s[i] += 1
            if any(table.A(s, x) for x in table.inputs):
                return c - 1
    return C_max


@dataclass
class BlockReport:
    components: list
    zero_off_diagonal: list = field(default_factory=list)
    nonzero_off_diagonal: list = field(default_factory=list)


def block_structure(H, partition=None):
    """Zero off-diagonal blocks for a partition and the components of the nonzero pattern."""
    d = len(H)
    parent = list(range(d))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(d):
        for j in range(i + 1, d):
            if H[i][j] != 0:
                parent[find(i)] = find(j)
    groups = defaultdict(list)
    for i in range(d):
        groups[find(i)].append(i)
    report = BlockReport(sorted(groups.values()))
    if partition:
        for a, b in itertools.combinations(range(len(partition)), 2):
            zero = all(H[i][j] == 0 for i in partition[a] for j in partition[b])
            (report.zero_off_diagonal if zero else report.nonzero_off_diagonal).append((a, b))
    return report


def error_probability_expansion(prop, degree):
    """Taylor polynomial of e(x, w) in w up to ``degree``, from f^tau with z_i = 1 - sum of block.

    Returns {exponent tuple over w: integer coefficient}.
    """
    chart = prop.chart
    d = chart.dim
    n_err = prop.ring.n_err
    blocks = chart.blocks
    out = defaultdict(int)
    cache = {}
    for tau, poly in prop.polys.items():
        if tau == prop.output:
            continue
        for exps, c in poly.items():
            s = exps[:n_err]
            deg = sum(s)
            if deg > degree:
                continue
            z = exps[n_err:]
            key = (z, degree - deg)
            if key not in cache:
                cache[key] = _expand_no_error(z, blocks, d, degree - deg)
            for e, v in cache[key].items():
                out[tuple(a + b for a, b in zip(s, e))] += c * v
    return {k: v for k, v in out.items() if v}


def _expand_no_error(z, blocks, d, budget):
    """prod_i (1 - sum_{j in block i} w_j)^{z_i}, truncated at total degree ``budget``."""
    acc = {(0,) * d: 1}
    for zi, block in zip(z, blocks):
        if zi == 0 or not block:
            continue
        factor = {}
        for r in range(min(zi, budget) + 1):
            for combo in itertools.combinations_with_replacement(block, r):
                e = [0] * d
                for j in combo:
                    e[j] += 1
                mult = math.factorial(r) // math.prod(math.factorial(v) for v in e if v)
                factor[tuple(e)] = factor.get(tuple(e), 0) + (-1) ** r * math.comb(zi, r) * mult
        nxt = defaultdict(int)
        for a, ca in acc.items():
            da = sum(a)
            for b, cb in factor.items():
                if da + sum(b) <= budget:
                    nxt[tuple(x + y for x, y in zip(a, b))] += ca * cb
        acc = {k: v for k, v in nxt.items() if v}
    return acc


def h_direct(props, q, degree):
    """Taylor coefficients of H up to ``degree`` by squaring the expanded error probabilities.

    Returns {k: derivative of H at the code}.
    """
    total = defaultdict(Fraction)
    for x, prop in props.items():
        e = error_probability_expansion(prop, degree)
        items = list(e.items())
        for a, ca in items:
            da = sum(a)
            for b, cb in items:
                if da + sum(b) <= degree:
                    total[tuple(u + v for u, v in zip(a, b))] += Fraction(q[x]) * ca * cb
    return {k: v * math.prod(math.factorial(a) for a in k) for k, v in total.items() if v}


def kl_two_outcome(p_wrong_model, mu):
    """KL(eps_mu(delta_correct) || eps_mu(1 - e, e)) for the two-outcome collapse."""
    q = smooth_mu((1.0, 0.0), mu)
    p = smooth_mu((1.0 - p_wrong_model, p_wrong_model), mu)
    return sum(a * math.log(a / b) for a, b in zip(q, p))


@dataclass
class ComparabilityReport:
    mu: float
    radius: float
    samples: int
    skipped: int
    ratio_min: float
    ratio_max: float
    target: float
    ratios: np.ndarray = field(repr=False, default=None)
    errors: np.ndarray = field(repr=False, default=None)

    @property
    def within_factor_two(self):
        return self.target / 2 <= self.ratio_min and self.ratio_max <= 2 * self.target


def comparability_target(mu):
    """Small-error limit of K_mu / H for the two-outcome collapse."""
    return 0.5 * (1 - mu) ** 2 * (1 + 2 / mu)


def comparability_check(spec, chart, mu, radius, samples, q=None, t=2, seed=0, inputs=None):
    """Ratios K_mu(w) / H(w) over w drawn uniformly from the box [0, radius]^d.

    Inputs default to the keys of ``q``; ``q`` defaults to uniform on ``inputs``.
    Samples with H(w) = 0 are skipped and counted.
    """
    from .propagation import eval_model_batch, unroll
    from .machine import tm_run

    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    if q is None:
        q = {x: 1 / len(inputs) for x in inputs}
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.0, radius, size=(samples, chart.dim))
    dgm = unroll(spec, t, max(len(spec.encode_input(x)) for x in q))
    H = np.zeros(samples)
    K = np.zeros(samples)
    lo, hi = mu / 2, 1 - mu / 2
    errs = []
    for x, qx in q.items():
        y = tm_run(x, spec, t)
        probs = eval_model_batch(x, W, chart, t, dgm)
        e = np.clip(1.0 - probs[:, y], 0.0, 1.0)
        errs.append(e)
        H += float(qx) * e ** 2
        p_right = (1 - mu) * (1 - e) + mu / 2
        p_wrong = (1 - mu) * e + mu / 2
        K += float(qx) * (hi * np.log(hi / p_right) + lo * np.log(lo / p_wrong))
    keep = H > 0
    ratios = K[keep] / H[keep]
    return ComparabilityReport(mu, radius, samples, int((~keep).sum()),
                               float(ratios.min()), float(ratios.max()),
                               comparability_target(mu), ratios, np.stack(errs, axis=1))
