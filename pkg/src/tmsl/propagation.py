"""Exact propagation of code uncertainty through the unrolled pseudo-UTM.

The dependency graph has one node per (cell, time) at which a cell is
rewritten. A node's distribution is the pushforward of the product of its
parents' distributions: parents are independent because every read of a
description square is a fresh sample. Tracking joint configurations instead
would correlate repeated reads and compute a different model.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .machine import LEFT, RIGHT, X, UtmState, description_tape, tm_run
from .noisy import LocalChart, base_value
from .polynomial import BudgetError, PolyRing

CONST, SQUARE, INPUT, FN = "const", "square", "input", "fn"


@dataclass(frozen=True)
class Node:
    label: tuple
    kind: str
    value: object = None
    parents: tuple = ()
    fn: object = None


# update functions; each reads only its parents' values

def _comp_symbol(key):
    return lambda w0: UtmState.COMP_STATE if w0 == key else UtmState.NOT_COMP_STATE


def _comp_state(key):
    def f(phi, q):
        return UtmState.COPY_SYMBOL if phi == UtmState.COMP_STATE and q == key else UtmState.NOT_COPY_SYMBOL
    return f


def _copy(when):
    return lambda phi, square, old: square if phi == when else old


_ADVANCE = {
    UtmState.COPY_SYMBOL: UtmState.COPY_STATE,
    UtmState.NOT_COPY_SYMBOL: UtmState.NOT_COPY_STATE,
    UtmState.COPY_STATE: UtmState.COPY_DIR,
    UtmState.NOT_COPY_STATE: UtmState.NOT_COPY_DIR,
}


def _advance(phi):
    return _ADVANCE[phi]


def _apply_staged(staged, old):
    return old if staged is X else staged


def _shift(d, left, centre, right):
    if d == LEFT:
        return left
    if d == RIGHT:
        return right
    return centre


def _identity(v):
    return v


class UnrolledDGM:
    """Dependency graph of the pseudo-UTM over ``t`` cycles.

    Description squares sigma'_a, q'_a, d_a are the symbolic leaves (one per
    square, shared by every read). Work cells at time 0 are input leaves.
    """

    def __init__(self, spec, t, input_len, collapse=True):
        if t < 0:
            raise ValueError("t must be nonnegative")
        self.spec, self.t, self.input_len, self.collapse = spec, t, input_len, collapse
        self.radius = max(input_len, 1) + t
        self.nodes = []
        self._build()

    def _add(self, node):
        self.nodes.append(node)
        return len(self.nodes) - 1

    def _build(self):
        spec, N, P, R = self.spec, self.spec.N, self.spec.period, self.radius
        descr = description_tape(spec)
        self.squares = [self._add(Node(("square", i), SQUARE, i)) for i in range(3 * N)]
        cur = {("work", i): self._add(Node(("work", i, 0), INPUT, i)) for i in range(-R, R + 1)}
        cur[("state",)] = self._add(Node(("state", 0), CONST, spec.init_state))
        for j in range(3):
            cur[("stage", j)] = self._add(Node(("stage", j, 0), CONST, X))
        cur[("utm",)] = self._add(Node(("utm", 0), CONST, UtmState.COMP_SYMBOL))
        blank = self._add(Node(("blank",), CONST, 0))

        for tau in range(self.t * P):
            mu = tau % P
            time = tau + 1
            upd = {}

            def fn(cell, f, *parents):
                upd[cell] = Node(cell + (time,), FN, parents=parents, fn=f)

            def const(cell, v):
                upd[cell] = Node(cell + (time,), CONST, v)

            phi = cur[("utm",)]
            if mu < 5 * N:
                a, r = divmod(mu, 5)
                sq = descr[mu + 1]
                if r == 0:
                    fn(("utm",), _comp_symbol(sq), cur[("work", 0)])
                elif r == 1:
                    fn(("utm",), _comp_state(sq), phi, cur[("state",)])
                elif r in (2, 3):
                    j = r - 2
                    when = (UtmState.COPY_SYMBOL, UtmState.COPY_STATE)[j]
                    fn(("stage", j), _copy(when), phi, self.squares[3 * a + j], cur[("stage", j)])
                    fn(("utm",), _advance, phi)
                else:
                    fn(("stage", 2), _copy(UtmState.COPY_DIR), phi, self.squares[3 * a + 2], cur[("stage", 2)])
                    const(("utm",), UtmState.COMP_SYMBOL)
            elif mu == 5 * N:
                const(("utm",), UtmState.UPDATE_SYMBOL)
            elif mu == 5 * N + 1:
                fn(("work", 0), _apply_staged, cur[("stage", 0)], cur[("work", 0)])
                const(("stage", 0), X)
                const(("utm",), UtmState.UPDATE_STATE)
            elif mu == 5 * N + 2:
                fn(("state",), _apply_staged, cur[("stage", 1)], cur[("state",)])
                const(("stage", 1), X)
                const(("utm",), UtmState.UPDATE_DIR)
            elif mu == 5 * N + 3:
                for i in range(-R, R + 1):
                    left = cur.get(("work", i - 1), blank)
                    right = cur.get(("work", i + 1), blank)
                    fn(("work", i), _shift, cur[("stage", 2)], left, cur[("work", i)], right)
                const(("stage", 2), X)
                const(("utm",), UtmState.RESET_DESCR)
            elif mu == P - 1:
                const(("utm",), UtmState.COMP_SYMBOL)

            if not self.collapse:
                for cell, nid in cur.items():
                    if cell not in upd:
                        upd[cell] = Node(cell + (time,), FN, parents=(nid,), fn=_identity)
            for cell, node in upd.items():
                cur[cell] = self._add(node)
        self.final = cur[("state",)]

    def ancestors(self, root=None):
        """Node ids reachable backwards from ``root`` (default: final state), in id order."""
        root = self.final if root is None else root
        seen = {root}
        stack = [root]
        while stack:
            for p in self.nodes[stack.pop()].parents:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return sorted(seen)

    def path_counts(self, root=None):
        """Number of directed paths from each description square to ``root``."""
        order = self.ancestors(root)
        counts = {}
        for nid in order:
            node = self.nodes[nid]
            if node.kind == SQUARE:
                c = [0] * len(self.squares)
                c[node.value] = 1
            else:
                c = [0] * len(self.squares)
                for p in node.parents:
                    c = [u + v for u, v in zip(c, counts[p])]
            counts[nid] = c
        return tuple(counts[self.final if root is None else root])


def unroll(spec, t, input_len, collapse=True):
    return UnrolledDGM(spec, t, input_len, collapse)


def _pushforward(dgm, x, leaf, one, total, mul):
    """Bottom-up evaluation of the final-state distribution."""
    R = dgm.radius
    tape = {i: 0 for i in range(-R, R + 1)}
    for i, s in enumerate(x):
        tape[i] = s
    dists = {}
    for nid in dgm.ancestors():
        node = dgm.nodes[nid]
        if node.kind == CONST:
            dists[nid] = {node.value: one}
        elif node.kind == INPUT:
            dists[nid] = {tape[node.value]: one}
        elif node.kind == SQUARE:
            dists[nid] = leaf(node.value)
        else:
            parent_dists = [dists[p] for p in node.parents]
            if len(parent_dists) == 1 and node.fn is _identity:
                dists[nid] = parent_dists[0]
                continue
            acc = {}
            for combo in itertools.product(*(d.items() for d in parent_dists)):
                v = node.fn(*(c[0] for c in combo))
                w = combo[0][1]
                for c in combo[1:]:
                    w = mul(w, c[1])
                acc.setdefault(v, []).append(w)
            dists[nid] = {v: total(ws) for v, ws in acc.items()}
    return dists[dgm.final]


class Propagation:
    """Result of symbolic propagation for one input: f^tau per final state."""

    def __init__(self, chart, ring, polys, reads, output):
        self.chart = chart
        self.ring = ring
        self.polys = polys
        self.reads = reads
        self.output = output

    def poly(self, tau):
        return self.polys.get(tau, self.ring.zero())

    def exponents(self, s):
        """Full exponent vector for error weight ``s`` using block homogeneity."""
        z = []
        for i, block in enumerate(self.chart.blocks):
            z.append(self.reads[i] - sum(s[k] for k in block))
        return tuple(s) + tuple(z)

    def count(self, s, tau):
        exps = self.exponents(s)
        if any(e < 0 for e in exps):
            return 0
        return self.poly(tau).coefficient(exps)

    def error_count(self, s):
        """A^s(x): weight-s syndromes producing a state other than the correct one."""
        if self.ring.k_max is not None and sum(s) > self.ring.k_max:
            raise BudgetError(f"|s| = {sum(s)} exceeds k_max = {self.ring.k_max}")
        return sum(self.count(s, tau) for tau in self.polys if tau != self.output)


def propagate(dgm, x, chart=None, k_max=2, max_terms=None):
    spec = dgm.spec
    chart = chart or LocalChart(spec)
    x = spec.encode_input(x)
    if len(x) > dgm.input_len:
        raise ValueError("input longer than the graph was unrolled for")
    if k_max is not None and k_max < 0:
        raise ValueError("k_max must be nonnegative")
    ring = PolyRing(chart.dim, chart.n_squares, k_max, max_terms)

    def leaf(i):
        b = base_value(spec, i)
        out = {b: ring.z(i)}
        for k in chart.blocks[i]:
            out[chart.coords[k].alt] = ring.w(k)
        return {v: p for v, p in out.items() if p}

    polys = _pushforward(dgm, x, leaf, ring.one(), ring.sum, lambda a, b: a * b)
    reads = dgm.path_counts()
    return Propagation(chart, ring, polys, reads, tm_run(x, spec, dgm.t))


def propagate_inputs(spec, inputs, t, k_max=2, threads=1, max_terms=None):
    """Propagate several inputs; returns {input: Propagation} in input order."""
    encoded = [spec.encode_input(x) for x in inputs]
    dgm = unroll(spec, t, max((len(x) for x in encoded), default=0))
    chart = LocalChart(spec)

    def job(x):
        return propagate(dgm, x, chart, k_max, max_terms)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(job, encoded))
    else:
        results = [job(x) for x in encoded]
    return dict(zip(inputs, results))


def eval_model(x, code, spec, t, dgm=None):
    """Distribution of the simulated state after t cycles under a noisy code."""
    x = spec.encode_input(x)
    dgm = dgm or unroll(spec, t, len(x))

    def leaf(i):
        return {v: p for v, p in enumerate(code.dists[i]) if p}

    one = Fraction(1) if all(isinstance(p, Fraction) for d in code.dists for p in d) else 1.0
    dist = _pushforward(dgm, x, leaf, one, sum, lambda a, b: a * b)
    return {q: dist.get(q, 0 * one) for q in range(spec.m)}


def syndrome_counts(prop, s):
    """Per-state counts A^s_tau."""
    if prop.ring.k_max is not None and sum(s) > prop.ring.k_max:
        raise BudgetError(f"|s| = {sum(s)} exceeds k_max = {prop.ring.k_max}")
    return {tau: prop.count(s, tau) for tau in range(prop.chart.spec.m)}


def eval_model_batch(x, W, chart, t, dgm=None):
    """Final-state probabilities for many chart points at once.

    ``W`` has shape (samples, d). Returns an array of shape (samples, m).
    The same pushforward runs with numpy vectors as weights.
    """
    import numpy as np

    spec = chart.spec
    x = spec.encode_input(x)
    dgm = dgm or unroll(spec, t, len(x))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape[1] != chart.dim:
        raise ValueError(f"expected {chart.dim} coordinates, got {W.shape[1]}")

    def leaf(i):
        block = chart.blocks[i]
        out = {base_value(spec, i): 1.0 - W[:, list(block)].sum(axis=1)}
        for k in block:
            out[chart.coords[k].alt] = W[:, k]
        return out

    one = np.ones(W.shape[0])
    dist = _pushforward(dgm, x, leaf, one, lambda ws: np.sum(ws, axis=0), np.multiply)
    return np.stack([dist.get(q, np.zeros(W.shape[0])) for q in range(spec.m)], axis=1)
