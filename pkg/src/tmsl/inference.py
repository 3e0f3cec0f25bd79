"""Datasets, likelihoods, posterior masses and free-energy slope fits.

Chart regions are boxes over a few coordinates; every other coordinate is
held at zero. Model probabilities come from the vectorised pushforward, then
the two-outcome collapse (right final state vs anything else), then
smoothing toward the barycenter.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .machine import tm_run
from .noisy import LocalChart, smooth_mu
from .propagation import eval_model, eval_model_batch, unroll

CHUNK = 1 << 14  # MC samples per RNG stream


class ProblemError(ValueError):
    pass


class LikelihoodError(ArithmeticError):
    pass


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class SynthesisProblem:
    inputs: tuple
    q: dict
    y: dict
    t: int = 2
    mu: float = 0.01

    def __post_init__(self):
        if set(self.q) != set(self.inputs) or set(self.y) != set(self.inputs):
            raise ProblemError("q and y must be defined exactly on the inputs")
        if any(Fraction(p) <= 0 for p in self.q.values()):
            raise ProblemError("q must be positive on every input")
        if sum(Fraction(p) for p in self.q.values()) != 1:
            raise ProblemError("q must sum to 1")
        if self.t < 0:
            raise ProblemError("t must be nonnegative")
        if not 0 <= self.mu < 1:
            raise ProblemError("mu must lie in [0, 1)")

    @classmethod
    def uniform(cls, spec, inputs, y, t=2, mu=0.01):
        """``y`` maps inputs to state names or indices."""
        inputs = tuple(inputs)
        q = {x: Fraction(1, len(inputs)) for x in inputs}
        ys = {x: _state_index(spec, v) for x, v in y.items()}
        return cls(inputs, q, ys, t, mu)

    @classmethod
    def from_dict(cls, doc, spec):
        try:
            inputs = tuple(doc["inputs"])
            q = {x: Fraction(doc["q"][x]) for x in inputs} if "q" in doc else {
                x: Fraction(1, len(inputs)) for x in inputs}
            y = {x: _state_index(spec, doc["y"][x]) for x in inputs}
            return cls(inputs, q, y, int(doc.get("t", 2)), float(doc.get("mu", 0.01)))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ProblemError(f"bad problem document: {exc}") from exc

    @classmethod
    def load(cls, path, spec):
        return cls.from_dict(json.loads(Path(path).read_text()), spec)

    def to_dict(self, spec):
        return {
            "inputs": list(self.inputs),
            "q": {x: str(self.q[x]) for x in self.inputs},
            "y": {x: spec.states[self.y[x]] for x in self.inputs},
            "t": self.t,
            "mu": self.mu,
        }


def _state_index(spec, v):
    if isinstance(v, int):
        if not 0 <= v < spec.m:
            raise ProblemError(f"state {v} out of range")
        return v
    if v not in spec.states:
        raise ProblemError(f"unknown state {v!r}")
    return spec.states.index(v)


@dataclass(frozen=True)
class Dataset:
    pairs: tuple
    seed: int | None = None
    label_noise: bool = False

    @property
    def n(self):
        return len(self.pairs)

    @classmethod
    def sample(cls, problem, n, seed, label_noise=False, m=2):
        """Draw x from q and y = y(x).

        With ``label_noise`` the label is drawn from the smoothed truth, so it
        is some other state with probability mu / 2.
        """
        rng = np.random.default_rng(seed)
        probs = np.array([float(problem.q[x]) for x in problem.inputs])
        idx = rng.choice(len(problem.inputs), size=n, p=probs)
        flip = rng.random(n) < problem.mu / 2 if label_noise else np.zeros(n, bool)
        pairs = []
        for i, f in zip(idx, flip):
            x = problem.inputs[i]
            y = problem.y[x]
            pairs.append((x, (y + 1) % m if f else y))
        return cls(tuple(pairs), seed, label_noise)

    def counts(self, problem):
        """{x: (right-label count, wrong-label count)}."""
        out = {x: [0, 0] for x in problem.inputs}
        for x, y in self.pairs:
            if x not in out:
                raise ProblemError(f"input {x!r} is outside the support")
            out[x][int(y != problem.y[x])] += 1
        return {x: tuple(v) for x, v in out.items()}

    def to_dict(self, spec):
        return {"seed": self.seed, "label_noise": self.label_noise,
                "pairs": [[x, spec.states[y]] for x, y in self.pairs]}

    @classmethod
    def from_dict(cls, doc, spec):
        pairs = tuple((p[0], _state_index(spec, p[1])) for p in doc["pairs"])
        return cls(pairs, doc.get("seed"), bool(doc.get("label_noise", False)))


def is_classical_solution(spec, problem):
    return all(tm_run(x, spec, problem.t) == problem.y[x] for x in problem.inputs)


def collapse_smooth(p_right, mu):
    """(right, wrong) probabilities after the two-outcome collapse and smoothing."""
    if mu == 0:
        return (p_right, 1 - p_right)
    return smooth_mu((p_right, 1 - p_right), mu)


def neg_log_likelihood(dataset, code, spec, problem):
    """L_n at a noisy code, computed exactly through the pushforward."""
    if dataset.n == 0:
        raise ProblemError("empty dataset")
    dgm = unroll(spec, problem.t, max(len(spec.encode_input(x)) for x in problem.inputs))
    total = 0.0
    for x, (right, wrong) in dataset.counts(problem).items():
        if not right and not wrong:
            continue
        p = eval_model(x, code, spec, problem.t, dgm)[problem.y[x]]
        pr, pw = collapse_smooth(float(p), problem.mu)
        for c, v in ((right, pr), (wrong, pw)):
            if c:
                if v <= 0:
                    raise LikelihoodError(f"zero probability for an observed label on {x!r}")
                total -= c * math.log(v)
    return total / dataset.n


def expected_loss(code, spec, problem):
    """L(w) for labels from the smoothed truth; with mu = 0 labels are exact."""
    dgm = unroll(spec, problem.t, max(len(spec.encode_input(x)) for x in problem.inputs))
    total = 0.0
    mu = problem.mu
    for x in problem.inputs:
        p = float(eval_model(x, code, spec, problem.t, dgm)[problem.y[x]])
        pr, pw = collapse_smooth(p, mu)
        tr, tw = (1 - mu / 2, mu / 2)
        for a, b in ((tr, pr), (tw, pw)):
            if a:
                if b <= 0:
                    return math.inf
                total -= float(problem.q[x]) * a * math.log(b)
    return total


@dataclass(frozen=True)
class Region:
    """Box {lo_k <= w_k <= hi_k} over chosen coordinates, zero elsewhere."""

    coords: tuple
    lo: tuple
    hi: tuple

    @classmethod
    def box(cls, bounds):
        """``bounds`` maps 0-based coordinate index to (lo, hi)."""
        items = sorted(bounds.items())
        return cls(tuple(k for k, _ in items), tuple(float(b[0]) for _, b in items),
                   tuple(float(b[1]) for _, b in items))

    def validate(self, chart):
        if not self.coords:
            raise RegionError("region has no coordinates")
        for k, a, b in zip(self.coords, self.lo, self.hi):
            if not 0 <= k < chart.dim:
                raise RegionError(f"coordinate {k + 1} outside 1..{chart.dim}")
            if not 0 <= a < b:
                raise RegionError(f"degenerate or negative interval for w{k + 1}")
        for block in chart.blocks:
            if sum(self.hi[self.coords.index(k)] for k in block if k in self.coords) > 1:
                raise RegionError("region leaves the parameter space")
        return self

    @property
    def log_volume(self):
        return sum(math.log(b - a) for a, b in zip(self.lo, self.hi))

    def draw(self, rng, size, dim):
        W = np.zeros((size, dim))
        for k, a, b in zip(self.coords, self.lo, self.hi):
            W[:, k] = rng.uniform(a, b, size)
        return W


class SliceModel:
    """Log-probabilities of right and wrong labels at MC samples of a region.

    Samples are drawn in fixed chunks with one RNG stream per chunk, so the
    result does not depend on the thread count.
    """

    def __init__(self, spec, problem, region, mc_samples, seed=0, threads=1, chart=None):
        self.spec, self.problem = spec, problem
        self.chart = chart or LocalChart(spec)
        self.region = region.validate(self.chart)
        if mc_samples <= 0:
            raise RegionError("need at least one sample")
        self.samples = mc_samples
        dgm = unroll(spec, problem.t, max(len(spec.encode_input(x)) for x in problem.inputs))
        sizes = [min(CHUNK, mc_samples - i) for i in range(0, mc_samples, CHUNK)]
        streams = np.random.SeedSequence(seed).spawn(len(sizes))

        def job(args):
            ss, size = args
            W = region.draw(np.random.default_rng(ss), size, self.chart.dim)
            return W, {x: eval_model_batch(x, W, self.chart, problem.t, dgm)[:, problem.y[x]]
                       for x in problem.inputs}

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                parts = list(pool.map(job, zip(streams, sizes)))
        else:
            parts = [job(a) for a in zip(streams, sizes)]
        self.W = np.concatenate([p[0] for p in parts])
        mu = problem.mu
        self.logp = {}
        for x in problem.inputs:
            right = np.clip(np.concatenate([p[1][x] for p in parts]), 0.0, 1.0)
            pr, pw = collapse_smooth(right, mu) if mu else (right, 1 - right)
            with np.errstate(divide="ignore"):
                self.logp[x] = (np.log(pr), np.log(pw))

    def n_loss(self, counts):
        """n L_n(w) at every sample for the given label counts."""
        out = np.zeros(self.samples)
        for x, (right, wrong) in counts.items():
            lr, lw = self.logp[x]
            if right:
                out -= right * lr
            if wrong:
                out -= wrong * lw
        return out

    def n_loss_at_zero(self, counts):
        mu = self.problem.mu
        pr, pw = collapse_smooth(1.0, mu) if mu else (1.0, 0.0)
        total = 0.0
        for right, wrong in counts.values():
            for c, v in ((right, pr), (wrong, pw)):
                if c:
                    if v <= 0:
                        return math.inf
                    total -= c * math.log(v)
        return total


@dataclass
class MassEstimate:
    log_mass: float
    stderr: float  # standard error of log_mass
    samples: int


def _log_mean_exp(a):
    """log of the sample mean of exp(a), with a delta-method standard error."""
    S = len(a)
    finite = np.isfinite(a)
    if not finite.any():
        return -math.inf, math.inf
    m = logsumexp(a[finite]) - math.log(S)
    r = np.exp(np.where(finite, a - m, -np.inf))
    se = float(np.std(r, ddof=1) / math.sqrt(S)) if S > 1 else math.inf
    return float(m), se


def posterior_mass(region, dataset, problem, spec, mc_samples, seed=0, threads=1, model=None):
    """Unnormalised posterior mass of a region under the uniform prior density 1.

    Returns log(vol * mean exp(-n L_n)) with its standard error. Z_n is not
    computed; ratios between regions are meaningful.
    """
    model = model or SliceModel(spec, problem, region, mc_samples, seed, threads)
    m, se = _log_mean_exp(-model.n_loss(dataset.counts(problem)))
    return MassEstimate(m + model.region.log_volume, se, model.samples)


@dataclass
class SlopeFit:
    slope: float
    ci: tuple
    intercept: float
    n_grid: tuple
    mean_free_energy: tuple
    stderr: tuple
    replicates: int
    r_squared: float
    rows: list = field(default_factory=list)

    def to_csv(self):
        lines = ["n,F_n_minus_nL_n_star,stderr"]
        for n, f, s in zip(self.n_grid, self.mean_free_energy, self.stderr):
            lines.append(f"{n},{f:.10g},{s:.10g}")
        return "\n".join(lines) + "\n"


def free_energy_slope(region, problem, spec, n_grid, mc_samples, replicates=50, seed=0,
                      threads=1, confidence=0.95, label_noise=True):
    """Fit F_n - n L_n(w*) = lambda log n + c by least squares.

    F_n is the free energy of the region under the uniform prior
    probability on it. Each replicate draws a fresh dataset per n; the
    fit uses every (log n, value) pair and reports a t-interval.
    """
    if len(n_grid) < 2:
        raise ValueError("need at least two sample sizes")
    model = SliceModel(spec, problem, region, mc_samples, seed, threads)
    ss = np.random.SeedSequence([seed, 1])
    seeds = ss.generate_state(replicates * len(n_grid))
    xs, ys, rows = [], [], []
    per_n = {n: [] for n in n_grid}
    i = 0
    for r in range(replicates):
        for n in n_grid:
            data = Dataset.sample(problem, n, int(seeds[i]), label_noise)
            i += 1
            counts = data.counts(problem)
            m, _ = _log_mean_exp(-model.n_loss(counts))
            value = -m - model.n_loss_at_zero(counts)
            if not math.isfinite(value):
                raise LikelihoodError("free energy is infinite; use mu > 0 or noiseless labels")
            xs.append(math.log(n))
            ys.append(value)
            per_n[n].append(value)
            rows.append((r, n, value))
    fit = stats.linregress(xs, ys)
    df = len(xs) - 2
    half = stats.t.ppf(0.5 + confidence / 2, df) * fit.stderr if df > 0 else math.inf
    means = tuple(float(np.mean(per_n[n])) for n in n_grid)
    ses = tuple(float(np.std(per_n[n], ddof=1) / math.sqrt(replicates)) if replicates > 1 else math.nan
                for n in n_grid)
    return SlopeFit(float(fit.slope), (float(fit.slope - half), float(fit.slope + half)),
                    float(fit.intercept), tuple(n_grid), means, ses, replicates,
                    float(fit.rvalue ** 2), rows)
