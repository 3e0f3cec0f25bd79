"""Deterministic Turing machines and the staged pseudo-UTM that simulates them.

Symbols are indices into the alphabet with 0 the blank. States are indices with
0 = reject and 1 = accept. Directions are LEFT < STAY < RIGHT.

The transition table is stored in description order: entry ``a`` is the
tuple for key ``(a // m, a % m)``, i.e. lexicographic in (symbol, state).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from pathlib import Path

LEFT, STAY, RIGHT = 0, 1, 2
MOVE_NAMES = ("L", "S", "R")
REJECT, ACCEPT = 0, 1

# marker for an empty staging cell
X = None


class WindowOverflowError(RuntimeError):
    pass


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class Transition:
    write: int
    next: int
    move: int


@dataclass(frozen=True)
class MachineSpec:
    alphabet: tuple
    states: tuple
    transitions: tuple
    init_state: int = REJECT

    def __post_init__(self):
        n, m = self.n, self.m
        if n < 1:
            raise SpecError("alphabet must contain at least the blank")
        if m < 2:
            raise SpecError("need at least the reject and accept states")
        if len(self.transitions) != n * m:
            raise SpecError(f"expected {n * m} transitions, got {len(self.transitions)}")
        for tr in self.transitions:
            if not (0 <= tr.write < n and 0 <= tr.next < m and tr.move in (LEFT, STAY, RIGHT)):
                raise SpecError(f"transition out of range: {tr}")
        if not 0 <= self.init_state < m:
            raise SpecError("init_state out of range")

    @property
    def n(self):
        return len(self.alphabet)

    @property
    def m(self):
        return len(self.states)

    @property
    def N(self):
        return self.n * self.m

    @property
    def period(self):
        return 10 * self.N + 6

    def key(self, a):
        """(symbol, state) read by description entry ``a``."""
        return divmod(a, self.m)

    def index(self, symbol, state):
        return symbol * self.m + state

    def delta(self, symbol, state):
        return self.transitions[self.index(symbol, state)]

    def encode_input(self, x):
        """Accept a string of one-character symbol names or a sequence of names/indices."""
        lookup = {name: i for i, name in enumerate(self.alphabet)}
        out = []
        for s in x:
            if isinstance(s, int):
                if not 0 <= s < self.n:
                    raise SpecError(f"symbol index {s} out of range")
                out.append(s)
            elif s in lookup:
                out.append(lookup[s])
            else:
                raise SpecError(f"unknown symbol {s!r}")
        return tuple(out)

    def decode_input(self, x):
        return "".join(self.alphabet[s] for s in x)

    def to_dict(self):
        rows = []
        for a, tr in enumerate(self.transitions):
            s, q = self.key(a)
            rows.append({
                "read": self.alphabet[s],
                "state": self.states[q],
                "write": self.alphabet[tr.write],
                "next": self.states[tr.next],
                "move": MOVE_NAMES[tr.move],
            })
        return {
            "alphabet": list(self.alphabet),
            "states": list(self.states),
            "init_state": self.states[self.init_state],
            "transitions": rows,
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            alphabet = tuple(doc["alphabet"])
            states = tuple(doc["states"])
            rows = doc["transitions"]
            init = doc.get("init_state", states[0])
        except (KeyError, TypeError, IndexError) as exc:
            raise SpecError(f"malformed machine document: {exc}") from exc
        if len(set(alphabet)) != len(alphabet) or len(set(states)) != len(states):
            raise SpecError("duplicate symbol or state names")
        sym = {name: i for i, name in enumerate(alphabet)}
        st = {name: i for i, name in enumerate(states)}
        table = {}
        for row in rows:
            try:
                k = (sym[row["read"]], st[row["state"]])
                tr = Transition(sym[row["write"]], st[row["next"]], MOVE_NAMES.index(row["move"]))
            except (KeyError, ValueError) as exc:
                raise SpecError(f"bad transition row {row}: {exc}") from exc
            if k in table:
                raise SpecError(f"duplicate transition for {row['read']!r}, {row['state']!r}")
            table[k] = tr
        m = len(states)
        missing = [(alphabet[s], states[q]) for s in range(len(alphabet)) for q in range(m) if (s, q) not in table]
        if missing:
            raise SpecError(f"missing transitions for {missing}")
        if init not in st:
            raise SpecError(f"unknown init_state {init!r}")
        transitions = tuple(table[divmod(a, m)] for a in range(len(alphabet) * m))
        return cls(alphabet, states, transitions, st[init])

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: {exc}") from exc
        return cls.from_dict(doc)

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n")


def machine_from_rows(alphabet, states, rows, init_state=REJECT):
    """Build a spec from ``(write, next, move)`` rows given in description order."""
    return MachineSpec(tuple(alphabet), tuple(states), tuple(Transition(*r) for r in rows), init_state)


def random_spec(n, m, rng):
    rows = [(rng.randrange(n), rng.randrange(m), rng.randrange(3)) for _ in range(n * m)]
    alphabet = ["_"] + [chr(ord("A") + i) for i in range(n - 1)]
    states = ["reject", "accept"] + [f"q{i}" for i in range(2, m)]
    return machine_from_rows(alphabet, states, rows, rng.randrange(m))


@dataclass(frozen=True)
class TapeWindow:
    """Finite window of a one-sided-unbounded tape; ``head`` indexes ``cells``."""

    cells: tuple
    head: int

    @classmethod
    def from_input(cls, x, half_width):
        if len(x) > half_width + 1:
            raise WindowOverflowError("input longer than window")
        cells = [0] * (2 * half_width + 1)
        for i, s in enumerate(x):
            cells[half_width + i] = s
        return cls(tuple(cells), half_width)

    @property
    def half_width(self):
        return (len(self.cells) - 1) // 2

    def read(self, offset=0):
        i = self.head + offset
        if not 0 <= i < len(self.cells):
            return 0
        return self.cells[i]

    def write(self, symbol):
        cells = list(self.cells)
        cells[self.head] = symbol
        return replace(self, cells=tuple(cells))

    def move(self, direction):
        head = self.head + direction - 1
        if not 0 <= head < len(self.cells):
            raise WindowOverflowError(f"head left the window at offset {head - self.half_width}")
        return replace(self, head=head)


def default_half_width(x, t):
    return max(len(x), 1) + t


def tm_step(tape, state, spec):
    tr = spec.delta(tape.read(), state)
    return tape.write(tr.write).move(tr.move), tr.next


def tm_trace(x, spec, t, half_width=None):
    x = spec.encode_input(x)
    tape = TapeWindow.from_input(x, half_width if half_width is not None else default_half_width(x, t))
    state = spec.init_state
    trace = [(tape, state)]
    for _ in range(t):
        tape, state = tm_step(tape, state, spec)
        trace.append((tape, state))
    return trace


def tm_run(x, spec, t):
    if t < 0:
        raise ValueError("t must be nonnegative")
    return tm_trace(x, spec, t)[-1][1]


class UtmState(enum.IntEnum):
    COMP_SYMBOL = 0
    COMP_STATE = 1
    COPY_SYMBOL = 2
    COPY_STATE = 3
    COPY_DIR = 4
    NOT_COMP_STATE = 5
    NOT_COPY_SYMBOL = 6
    NOT_COPY_STATE = 7
    NOT_COPY_DIR = 8
    UPDATE_SYMBOL = 9
    UPDATE_STATE = 10
    UPDATE_DIR = 11
    RESET_DESCR = 12


def description_tape(spec):
    """End markers around the 5N squares sigma_a, q_a, sigma'_a, q'_a, d_a."""
    tape = [X]
    for a, tr in enumerate(spec.transitions):
        s, q = spec.key(a)
        tape += [s, q, tr.write, tr.next, tr.move]
    tape.append(X)
    return tuple(tape)


def descr_head_position(mu, N):
    """Description head position at timestep mu; P-periodic by construction."""
    if mu <= 5 * N:
        return mu + 1
    if mu <= 5 * N + 4:
        return 5 * N + 1
    return 5 * N + 1 - (mu - (5 * N + 4))


@dataclass(frozen=True)
class UtmConfiguration:
    descr_head: int
    staging: tuple
    state: int
    work: TapeWindow
    utm_state: UtmState
    mu: int = 0
    cycle: int = 0

    @classmethod
    def initial(cls, x, spec, cycles, half_width=None):
        x = spec.encode_input(x)
        h = half_width if half_width is not None else default_half_width(x, cycles)
        return cls(1, (X, X, X), spec.init_state, TapeWindow.from_input(x, h), UtmState.COMP_SYMBOL)


_COPY_NEXT = {
    UtmState.COPY_SYMBOL: UtmState.COPY_STATE,
    UtmState.NOT_COPY_SYMBOL: UtmState.NOT_COPY_STATE,
    UtmState.COPY_STATE: UtmState.COPY_DIR,
    UtmState.NOT_COPY_STATE: UtmState.NOT_COPY_DIR,
}


def utm_step(cfg, spec, descr=None):
    """One transition of the staged pseudo-UTM.

    ``descr`` overrides the description tape (used to run noisy variants).
    """
    N, P = spec.N, spec.period
    tape = descr if descr is not None else description_tape(spec)
    mu = cfg.mu
    square = tape[cfg.descr_head]
    s0, s1, s2 = cfg.staging
    phi = cfg.utm_state
    state, work = cfg.state, cfg.work

    if mu < 5 * N:
        r = mu % 5
        if r == 0:
            phi = UtmState.COMP_STATE if work.read() == square else UtmState.NOT_COMP_STATE
        elif r == 1:
            match = phi == UtmState.COMP_STATE and state == square
            phi = UtmState.COPY_SYMBOL if match else UtmState.NOT_COPY_SYMBOL
        elif r == 2:
            if phi == UtmState.COPY_SYMBOL:
                s0 = square
            phi = _COPY_NEXT[phi]
        elif r == 3:
            if phi == UtmState.COPY_STATE:
                s1 = square
            phi = _COPY_NEXT[phi]
        else:
            if phi == UtmState.COPY_DIR:
                s2 = square
            phi = UtmState.COMP_SYMBOL
    elif mu == 5 * N:
        phi = UtmState.UPDATE_SYMBOL
    elif mu == 5 * N + 1:
        if s0 is not X:
            work = work.write(s0)
        s0, phi = X, UtmState.UPDATE_STATE
    elif mu == 5 * N + 2:
        if s1 is not X:
            state = s1
        s1, phi = X, UtmState.UPDATE_DIR
    elif mu == 5 * N + 3:
        work = work.move(STAY if s2 is X else s2)
        s2, phi = X, UtmState.RESET_DESCR
    elif mu == P - 1:
        phi = UtmState.COMP_SYMBOL

    mu += 1
    cycle = cfg.cycle
    if mu == P:
        mu, cycle = 0, cycle + 1
    return UtmConfiguration(descr_head_position(mu, N), (s0, s1, s2), state, work, phi, mu, cycle)


def utm_run_cycles(x, spec, t, descr=None):
    if t < 0:
        raise ValueError("t must be nonnegative")
    cfg = UtmConfiguration.initial(x, spec, t)
    for _ in range(t * spec.period):
        cfg = utm_step(cfg, spec, descr)
    return cfg.state


def _detect_a(rows):
    return machine_from_rows(["_", "A", "B"], ["reject", "accept"], rows)


# the two codes of the worked example; rows in description order
DETECT_A0 = _detect_a([
    (0, REJECT, STAY), (0, ACCEPT, STAY),
    (1, ACCEPT, STAY), (1, ACCEPT, STAY),
    (2, REJECT, RIGHT), (2, ACCEPT, STAY),
])
DETECT_A1 = _detect_a([
    (2, REJECT, RIGHT), (0, ACCEPT, LEFT),
    (0, ACCEPT, LEFT), (0, ACCEPT, LEFT),
    (0, REJECT, RIGHT), (0, ACCEPT, LEFT),
])
DETECT_A_INPUTS = ("A", "B", "AB", "BA", "AA", "BB")
