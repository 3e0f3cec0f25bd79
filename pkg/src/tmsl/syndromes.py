"""Named computation paths for two simulated steps, evaluated directly.

For t = 2 every use of a description square on the way to the final state is
one of a few named paths:

* symbol square of tuple a: one path per tuple j, feeding the symbol under
  the head that tuple j's key is compared with in the second step;
* direction square: the same, through the head move;
* state square: one path per tuple j feeding the state compared with tuple
  j's key, one direct copy when tuple a matches in the second step (index N),
  and one carry-through used when nothing matches (index N + 1).

This evaluator shares no code with the propagation engine and serves as its
brute-force oracle.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

from .machine import TapeWindow, default_half_width, tm_run
from .noisy import STATE, LocalChart, base_value, chart_order, square_size


class InvalidSyndromeError(ValueError):
    pass


class EnumerationGuardError(RuntimeError):
    pass


def path_count(spec, kind):
    return spec.N + 2 if kind == STATE else spec.N


def path_names(spec, kind):
    names = [f"{('G', 'L', 'T')[kind]}{j + 1}" for j in range(spec.N)]
    if kind == STATE:
        names += ["Omega", "Xi"]
    return names


@dataclass(frozen=True)
class ErrorSyndrome:
    """Sparse assignment: {(square, path): value} listing only non-base values."""

    flips: tuple = ()

    @classmethod
    def of(cls, mapping):
        return cls(tuple(sorted(mapping.items())))

    def value(self, spec, square, path):
        return dict(self.flips).get((square, path), base_value(spec, square))

    def validate(self, spec):
        for (square, path), v in self.flips:
            if not isinstance(square, int) or not 0 <= square < 3 * spec.N:
                raise InvalidSyndromeError(f"square {square!r} is not a writable description square")
            kind = square % 3
            if not 0 <= path < path_count(spec, kind):
                raise InvalidSyndromeError(f"path {path} out of range for square {square}")
            if not 0 <= v < square_size(spec, kind) or v == base_value(spec, square):
                raise InvalidSyndromeError(f"value {v} is not an alternative for square {square}")
        return self

    def weight(self, chart):
        w = [0] * chart.dim
        for (square, _), v in self.flips:
            w[chart.coord_of[(square, v)]] += 1
        return tuple(w)


def eval_syndrome(x, gamma, spec):
    """Final state after two simulated steps with the paths flagged by gamma altered."""
    gamma.validate(spec)
    x = spec.encode_input(x)
    N = spec.N
    flips = dict(gamma.flips)
    start = TapeWindow.from_input(x, default_half_width(x, 2))
    # the first step reads exactly one tuple
    a0 = spec.index(start.read(), spec.init_state)
    base = spec.transitions[a0]

    def value(kind, path):
        default = (base.write, base.next, base.move)[kind]
        return flips.get((3 * a0 + kind, path), default)

    seen_symbol = [start.write(value(0, j)).move(value(2, j)).read() for j in range(N)]
    seen_state = [value(1, j) for j in range(N)]
    carried = value(1, N + 1)
    staged = None
    for j in range(N):
        sigma, q = spec.key(j)
        if sigma == seen_symbol[j] and q == seen_state[j]:
            staged = flips.get((3 * j + STATE, N), spec.transitions[j].next)
    return carried if staged is None else staged


def weight_one_table(spec, k, inputs, chart=None):
    """Rows of final states, one column per path, for a single flip on coordinate k.

    Returns (path names, {x: [state per path]}, {x: error count}).
    """
    chart = chart or LocalChart(spec)
    c = chart.coords[k]
    square = c.square
    names = path_names(spec, c.kind)
    table, counts = {}, {}
    for x in inputs:
        correct = tm_run(x, spec, 2)
        row = [eval_syndrome(x, ErrorSyndrome.of({(square, p): c.alt}), spec) for p in range(len(names))]
        table[x] = row
        counts[x] = sum(q != correct for q in row)
    return names, table, counts


def _slots(spec, squares):
    out = []
    for square in squares:
        kind = square % 3
        b = base_value(spec, square)
        alts = [v for v in chart_order(spec, kind) if v != b]
        for p in range(path_count(spec, kind)):
            out.append((square, p, alts))
    return out


def count_syndromes(spec, squares, C):
    slots = _slots(spec, squares)
    total = 0
    for r in range(C + 1):
        for combo in itertools.combinations(slots, r):
            total += math.prod(len(s[2]) for s in combo)
    return total


def enumerate_syndromes(spec, squares=None, C=1, limit=10**6):
    squares = range(3 * spec.N) if squares is None else squares
    slots = _slots(spec, squares)
    # cheap upper bound before walking combinations
    bound = sum(math.comb(len(slots), r) * (max((len(s[2]) for s in slots), default=1) ** r) for r in range(C + 1))
    if bound > limit:
        raise EnumerationGuardError(f"up to {bound} syndromes exceeds limit {limit}")
    for r in range(C + 1):
        for combo in itertools.combinations(slots, r):
            for values in itertools.product(*(s[2] for s in combo)):
                yield ErrorSyndrome(tuple(((s[0], s[1]), v) for s, v in zip(combo, values)))


def aggregate_counts(spec, inputs, C, chart=None):
    """{x: {weight: {state: count}}} over every syndrome of weight at most C."""
    chart = chart or LocalChart(spec)
    out = {x: defaultdict(lambda: defaultdict(int)) for x in inputs}
    for gamma in enumerate_syndromes(spec, C=C):
        w = gamma.weight(chart)
        for x in inputs:
            out[x][w][eval_syndrome(x, gamma, spec)] += 1
    return out
