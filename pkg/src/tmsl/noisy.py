"""Noisy codes, the local chart at a classical code, and barycentric smoothing.

A noisy code assigns a distribution to each of the 3N writable description
squares (sigma'_a, q'_a, d_a). Square ``i`` belongs to tuple ``i // 3`` and
has type ``i % 3``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path

from .machine import MOVE_NAMES

SYMBOL, STATE, DIRECTION = 0, 1, 2
SQUARE_TYPES = ("symbol", "state", "direction")
# chart order of direction alternatives: Stay, Left, Right
DIRECTION_CHART_ORDER = (1, 0, 2)


class ChartError(ValueError):
    pass


def square_size(spec, kind):
    return (spec.n, spec.m, 3)[kind]


def base_value(spec, square):
    tr = spec.transitions[square // 3]
    return (tr.write, tr.next, tr.move)[square % 3]


def chart_order(spec, kind):
    if kind == DIRECTION:
        return DIRECTION_CHART_ORDER
    return tuple(range(square_size(spec, kind)))


def value_name(spec, kind, v):
    return (spec.alphabet, spec.states, MOVE_NAMES)[kind][v]


@dataclass(frozen=True)
class NoisyCode:
    """Per-square probability vectors, 3 squares per tuple in description order."""

    dists: tuple

    def square(self, a, kind):
        return self.dists[3 * a + kind]

    def symbol_dist(self, a):
        return self.dists[3 * a + SYMBOL]

    def state_dist(self, a):
        return self.dists[3 * a + STATE]

    def dir_dist(self, a):
        return self.dists[3 * a + DIRECTION]

    def validate(self, tol=0):
        for i, dist in enumerate(self.dists):
            if any(p < -tol or p > 1 + tol for p in dist):
                raise ChartError(f"square {i}: entry outside [0, 1]")
            if abs(sum(dist) - 1) > tol:
                raise ChartError(f"square {i}: distribution sums to {sum(dist)}")
        return self

    def nearest_vertex(self):
        """Index of the most likely value per square (ties go to the lowest value)."""
        return tuple(max(range(len(d)), key=lambda v: (d[v], -v)) for d in self.dists)

    def to_dict(self, spec):
        rows = []
        for a in range(len(self.dists) // 3):
            s, q = spec.key(a)
            rows.append({
                "read": spec.alphabet[s],
                "state": spec.states[q],
                "write": [str(p) for p in self.symbol_dist(a)],
                "next": [str(p) for p in self.state_dist(a)],
                "move": [str(p) for p in self.dir_dist(a)],
            })
        return {"alphabet": list(spec.alphabet), "states": list(spec.states), "transitions": rows}

    @classmethod
    def from_dict(cls, doc, spec):
        dists = []
        for row in doc["transitions"]:
            for kind, key in enumerate(("write", "next", "move")):
                dist = tuple(Fraction(p) for p in row[key])
                if len(dist) != square_size(spec, kind):
                    raise ChartError(f"wrong length for {key} in {row}")
                dists.append(dist)
        if len(dists) != 3 * spec.N:
            raise ChartError("wrong number of tuples")
        return cls(tuple(dists)).validate()

    def dump(self, path, spec):
        Path(path).write_text(json.dumps(self.to_dict(spec), indent=2, ensure_ascii=False) + "\n")


def embed_code(spec):
    dists = []
    for i in range(3 * spec.N):
        size = square_size(spec, i % 3)
        b = base_value(spec, i)
        dists.append(tuple(Fraction(int(v == b)) for v in range(size)))
    return NoisyCode(tuple(dists))


@dataclass(frozen=True)
class Coordinate:
    tuple_index: int
    kind: int
    base: int
    alt: int

    @property
    def square(self):
        return 3 * self.tuple_index + self.kind


class LocalChart:
    """Coordinates w_1..w_d at a classical code.

    Coordinates are 0-based internally; reports name them w1..wd.
    """

    def __init__(self, spec):
        self.spec = spec
        coords = []
        for i in range(3 * spec.N):
            b = base_value(spec, i)
            for v in chart_order(spec, i % 3):
                if v != b:
                    coords.append(Coordinate(i // 3, i % 3, b, v))
        self.coords = tuple(coords)

    @property
    def dim(self):
        return len(self.coords)

    @property
    def n_squares(self):
        return 3 * self.spec.N

    @cached_property
    def blocks(self):
        """Coordinate indices grouped by square."""
        out = [[] for _ in range(self.n_squares)]
        for k, c in enumerate(self.coords):
            out[c.square].append(k)
        return tuple(tuple(b) for b in out)

    @cached_property
    def coord_of(self):
        """(square, value) -> coordinate index, for non-base values."""
        return {(c.square, c.alt): k for k, c in enumerate(self.coords)}

    def describe(self, k):
        c = self.coords[k]
        s, q = self.spec.key(c.tuple_index)
        kind = c.kind
        return {
            "coordinate": k + 1,
            "tuple": f"({self.spec.alphabet[s]},{self.spec.states[q]})",
            "square": SQUARE_TYPES[kind],
            "base": value_name(self.spec, kind, c.base),
            "alternative": value_name(self.spec, kind, c.alt),
        }

    def label(self, k):
        info = self.describe(k)
        return f"w{k + 1} {info['tuple']} {info['square']} {info['base']}->{info['alternative']}"

    def to_code(self, w):
        if len(w) != self.dim:
            raise ChartError(f"expected {self.dim} coordinates, got {len(w)}")
        dists = []
        for i in range(self.n_squares):
            b = base_value(self.spec, i)
            size = square_size(self.spec, i % 3)
            block = self.blocks[i]
            total = sum(w[k] for k in block)
            if any(w[k] < 0 for k in block):
                raise ChartError(f"negative coordinate in square {i}")
            if total > 1:
                raise ChartError(f"block sum {total} > 1 in square {i}")
            dist = [0] * size
            dist[b] = 1 - total
            for k in block:
                dist[self.coords[k].alt] = w[k]
            dists.append(tuple(dist))
        return NoisyCode(tuple(dists))

    def from_code(self, code):
        return tuple(code.dists[c.square][c.alt] for c in self.coords)


def chart_dimension(n, m):
    return n * m * (n + m)


def chart_to_code(chart, w):
    return chart.to_code(w)


def smooth_mu(dist, mu):
    if not 0 < mu < 1:
        raise ValueError("mu must lie in (0, 1)")
    b = mu / len(dist)
    return tuple((1 - mu) * p + b for p in dist)
