"""Sparse integer polynomials in error variables w_k and no-error variables z_i.

Monomials are packed into a single int, one fixed-width field per variable,
so multiplying monomials is integer addition. Terms are bucketed by error
degree so truncated products skip over-budget pairs without unpacking.
"""

from __future__ import annotations

from collections import defaultdict

FIELD_BITS = 40
FIELD_MASK = (1 << FIELD_BITS) - 1


class BudgetError(ValueError):
    """Requested a coefficient above the truncation degree."""


class ResourceGuardError(RuntimeError):
    """A polynomial grew past the configured monomial limit."""


class PolyRing:
    """Variable layout: w_0..w_{d-1} then z_0..z_{nz-1}."""

    def __init__(self, n_err, n_z, k_max=None, max_terms=None):
        self.n_err = n_err
        self.n_z = n_z
        self.k_max = k_max
        self.max_terms = max_terms

    @property
    def n_vars(self):
        return self.n_err + self.n_z

    def pack(self, exps):
        key = 0
        for i, e in enumerate(exps):
            if e:
                key |= e << (FIELD_BITS * i)
        return key

    def unpack(self, key):
        out = []
        for _ in range(self.n_vars):
            out.append(key & FIELD_MASK)
            key >>= FIELD_BITS
        return tuple(out)

    def one(self):
        return TruncatedPolynomial(self, {0: {0: 1}})

    def zero(self):
        return TruncatedPolynomial(self, {})

    def w(self, k):
        return TruncatedPolynomial(self, {1: {1 << (FIELD_BITS * k): 1}}) if self._fits(1) else self.zero()

    def z(self, i):
        return TruncatedPolynomial(self, {0: {1 << (FIELD_BITS * (self.n_err + i)): 1}})

    def monomial(self, exps, coeff=1):
        deg = sum(exps[: self.n_err])
        if not self._fits(deg) or coeff == 0:
            return self.zero()
        return TruncatedPolynomial(self, {deg: {self.pack(exps): coeff}})

    def _fits(self, deg):
        return self.k_max is None or deg <= self.k_max

    def sum(self, polys):
        acc = defaultdict(lambda: defaultdict(int))
        for p in polys:
            for deg, terms in p.terms.items():
                bucket = acc[deg]
                for key, c in terms.items():
                    bucket[key] += c
        return TruncatedPolynomial(self, _clean(acc), check=True)


def _clean(acc):
    out = {}
    for deg, bucket in acc.items():
        terms = {k: c for k, c in bucket.items() if c}
        if terms:
            out[deg] = terms
    return out


class TruncatedPolynomial:
    __slots__ = ("ring", "terms")

    def __init__(self, ring, terms, check=False):
        self.ring = ring
        self.terms = terms
        if check and ring.max_terms is not None and len(self) > ring.max_terms:
            raise ResourceGuardError(f"polynomial has {len(self)} monomials, limit {ring.max_terms}")

    def __len__(self):
        return sum(len(t) for t in self.terms.values())

    def __bool__(self):
        return bool(self.terms)

    def is_one(self):
        return self.terms == {0: {0: 1}}

    def __add__(self, other):
        return self.ring.sum((self, other))

    def __mul__(self, other):
        if self.is_one():
            return other
        if other.is_one():
            return self
        k_max = self.ring.k_max
        acc = defaultdict(lambda: defaultdict(int))
        for da, ta in self.terms.items():
            for db, tb in other.terms.items():
                if k_max is not None and da + db > k_max:
                    continue
                bucket = acc[da + db]
                for ka, ca in ta.items():
                    for kb, cb in tb.items():
                        bucket[ka + kb] += ca * cb
        return TruncatedPolynomial(self.ring, _clean(acc), check=True)

    def __eq__(self, other):
        return isinstance(other, TruncatedPolynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset((k, c) for t in self.terms.values() for k, c in t.items()))

    def items(self):
        """(exponent tuple, coefficient) pairs."""
        for terms in self.terms.values():
            for key, c in terms.items():
                yield self.ring.unpack(key), c

    def coefficient(self, exps):
        deg = sum(exps[: self.ring.n_err])
        if not self.ring._fits(deg):
            raise BudgetError(f"error degree {deg} exceeds k_max={self.ring.k_max}")
        return self.terms.get(deg, {}).get(self.ring.pack(exps), 0)

    def max_error_degree(self):
        return max(self.terms, default=-1)

    def block_degrees(self, blocks):
        """Per-square total degree (z_i plus the square's w's); None if not homogeneous."""
        seen = None
        for exps, _ in self.items():
            degs = tuple(
                exps[self.ring.n_err + i] + sum(exps[k] for k in block) for i, block in enumerate(blocks)
            )
            if seen is None:
                seen = degs
            elif degs != seen:
                return None
        return seen

    def evaluate(self, values):
        """Substitute numbers for all variables, in ring order."""
        total = 0
        for exps, c in self.items():
            term = c
            for v, e in zip(values, exps):
                if e:
                    term *= v ** e
            total += term
        return total

    def to_text(self):
        lines = []
        n_err = self.ring.n_err
        for exps, c in self.items():
            factors = []
            for i, e in enumerate(exps):
                if e:
                    name = f"w{i + 1}" if i < n_err else f"z{i - n_err + 1}"
                    factors.append(f"{name}^{e}")
            lines.append(f"{c} * " + ("*".join(factors) if factors else "1"))
        return "\n".join(sorted(lines))

    def __repr__(self):
        return f"TruncatedPolynomial({len(self)} terms, max error degree {self.max_error_degree()})"
