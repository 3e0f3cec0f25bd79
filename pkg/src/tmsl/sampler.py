"""Monte Carlo oracle for the noisy model.

Cells are pulled on demand backwards in time. Each time a description square
is read, a fresh value is drawn, so repeated reads are independent. All
samples are drawn at once as numpy arrays. Subtrees that never touch a
description square are deterministic and memoised as plain ints.
"""

from __future__ import annotations

import numpy as np

from .machine import LEFT, RIGHT, UtmState

NONE = -1  # empty staging cell

_ADVANCE = {
    UtmState.COPY_SYMBOL: UtmState.COPY_STATE,
    UtmState.NOT_COPY_SYMBOL: UtmState.NOT_COPY_STATE,
    UtmState.COPY_STATE: UtmState.COPY_DIR,
    UtmState.NOT_COPY_STATE: UtmState.NOT_COPY_DIR,
}
_ADVANCE_TABLE = np.arange(len(UtmState))
for _k, _v in _ADVANCE.items():
    _ADVANCE_TABLE[_k] = _v
_COPY_WHEN = (UtmState.COPY_SYMBOL, UtmState.COPY_STATE, UtmState.COPY_DIR)


class DemandSampler:
    def __init__(self, spec, code, x, t, n_samples, rng):
        self.spec, self.t, self.n, self.rng = spec, t, n_samples, rng
        self.x = spec.encode_input(x)
        self.radius = max(len(self.x), 1) + t
        self.cdfs = [np.cumsum(np.asarray(d, dtype=float)) for d in code.dists]
        self.memo = {}

    def draw(self, square):
        u = self.rng.random(self.n)
        cdf = self.cdfs[square]
        return np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), len(cdf) - 1)

    def written(self, cell, mu):
        """Does the transition executed at timestep mu write this cell?"""
        N = self.spec.N
        kind = cell[0]
        if kind == "utm":
            return True
        if kind == "stage":
            j = cell[1]
            return (mu < 5 * N and mu % 5 == 2 + j) or mu == 5 * N + 1 + j
        if kind == "state":
            return mu == 5 * N + 2
        return (mu == 5 * N + 1 and cell[1] == 0) or mu == 5 * N + 3

    def pull(self, cell, tau):
        P = self.spec.period
        while tau > 0 and not self.written(cell, (tau - 1) % P):
            tau -= 1
        key = (cell, tau)
        if key in self.memo:
            return self.memo[key]
        value = self._compute(cell, tau)
        if not isinstance(value, np.ndarray):
            self.memo[key] = value
        return value

    def _initial(self, cell):
        kind = cell[0]
        if kind == "utm":
            return int(UtmState.COMP_SYMBOL)
        if kind == "stage":
            return NONE
        if kind == "state":
            return self.spec.init_state
        i = cell[1]
        return self.x[i] if 0 <= i < len(self.x) else 0

    def _compute(self, cell, tau):
        if tau == 0:
            return self._initial(cell)
        N = self.spec.N
        mu = (tau - 1) % self.spec.period
        prev = tau - 1
        kind = cell[0]
        if kind == "utm":
            if mu < 5 * N:
                a, r = divmod(mu, 5)
                sigma, q = self.spec.key(a)
                if r == 0:
                    w0 = self.pull(("work", 0), prev)
                    return _where(np.equal(w0, sigma), UtmState.COMP_STATE, UtmState.NOT_COMP_STATE)
                if r == 1:
                    phi = self.pull(("utm",), prev)
                    st = self.pull(("state",), prev)
                    match = np.logical_and(np.equal(phi, UtmState.COMP_STATE), np.equal(st, q))
                    return _where(match, UtmState.COPY_SYMBOL, UtmState.NOT_COPY_SYMBOL)
                if r in (2, 3):
                    phi = self.pull(("utm",), prev)
                    out = _ADVANCE_TABLE[phi]
                    return out if isinstance(out, np.ndarray) else int(out)
                return int(UtmState.COMP_SYMBOL)
            table = {
                5 * N: UtmState.UPDATE_SYMBOL,
                5 * N + 1: UtmState.UPDATE_STATE,
                5 * N + 2: UtmState.UPDATE_DIR,
                5 * N + 3: UtmState.RESET_DESCR,
                self.spec.period - 1: UtmState.COMP_SYMBOL,
            }
            return int(table.get(mu, UtmState.RESET_DESCR))
        if kind == "stage":
            j = cell[1]
            if mu >= 5 * N:
                return NONE
            a = mu // 5
            phi = self.pull(("utm",), prev)
            fresh = self.draw(3 * a + j)
            old = self.pull(cell, prev)
            return _where(np.equal(phi, _COPY_WHEN[j]), fresh, old)
        if kind == "state":
            staged = self.pull(("stage", 1), prev)
            old = self.pull(cell, prev)
            return _apply(staged, old)
        i = cell[1]
        if mu == 5 * N + 1:
            return _apply(self.pull(("stage", 0), prev), self.pull(cell, prev))
        d = self.pull(("stage", 2), prev)
        left = self._work(i - 1, prev)
        centre = self.pull(cell, prev)
        right = self._work(i + 1, prev)
        out = np.select([np.equal(d, LEFT), np.equal(d, RIGHT)], [left, right], centre)
        return out if out.ndim else int(out)

    def _work(self, i, tau):
        if abs(i) > self.radius:
            return 0
        return self.pull(("work", i), tau)

    def final_state(self):
        return np.broadcast_to(self.pull(("state",), self.t * self.spec.period), (self.n,))


def _where(cond, a, b):
    out = np.where(cond, a, b)
    return out if out.ndim else int(out)


def _apply(staged, old):
    return _where(np.equal(staged, NONE), old, staged)


def sample_model(x, code, spec, t, n_samples, rng):
    """Empirical distribution of the final state plus per-state standard errors."""
    states = DemandSampler(spec, code, x, t, n_samples, rng).final_state()
    freq = np.bincount(states, minlength=spec.m) / n_samples
    stderr = np.sqrt(freq * (1 - freq) / n_samples)
    return freq, stderr

