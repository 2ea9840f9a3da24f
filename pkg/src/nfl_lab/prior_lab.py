"""Expectations under the uniform prior over conditional label distributions.

Under this prior every P(Y=1 | X=x) is independently uniform on [0, 1]. The
module computes the expected off-training-set risk of a learner exactly (Beta
integrals with integer parameters) or by simulation, the gap between OTS and
IID risk, and the (epsilon, delta) analysis of classes whose members all sit
near chance level.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .bounds import SIGMA_SLACK, exact_expected_risk
from .core import Classifier, OTSMode, Sample, StochasticSituation, iid_risk, num_instances, ots_risk
from .sampling import check_enum_size, draw_sample, mean_and_stderr, trial_rng, trial_seed

EXACT_MAX_DIM = 3
EXACT_MAX_N = 4


@dataclass(frozen=True)
class UniformConditionalPrior:
    m: int

    def sample_conditionals(self, rng: np.random.Generator) -> np.ndarray:
        return rng.random(num_instances(self.m))


@dataclass(frozen=True)
class ParadoxParams:
    m: int
    n: int
    class_size: int
    epsilon: float
    delta: float

    @property
    def tolerance(self) -> float:
        """epsilon (1 + delta): how far from 1/2 best and worst risks may sit."""
        return self.epsilon * (1 + self.delta)


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float = 0.0
    trials: int = 0  # 0 for exact

    @property
    def exact(self) -> bool:
        return self.trials == 0


def _uniform_marginal(m: int) -> np.ndarray:
    return np.full(num_instances(m), 1.0 / num_instances(m))


def sample_situation_from_prior(prior: UniformConditionalPrior, d_x: Sequence[float] | None, seed: int) -> StochasticSituation:
    """Draw conditionals from the uniform prior; deterministic in ``seed``."""
    marginal = _uniform_marginal(prior.m) if d_x is None else np.asarray(d_x, dtype=float)
    rng = np.random.default_rng(seed)
    return StochasticSituation(marginal, prior.sample_conditionals(rng))


def beta_marginal_likelihood(ones: int, zeros: int) -> Fraction:
    """Integral of p^ones (1-p)^zeros over [0, 1], i.e. B(ones+1, zeros+1)."""
    return Fraction(math.factorial(ones) * math.factorial(zeros), math.factorial(ones + zeros + 1))


def _prior_weighted_samples(marginal: np.ndarray, m: int, n: int, ordered: bool):
    """Samples with their probability under (marginal, uniform prior)^n.

    Labels at a fixed instance are exchangeable under the prior, so the weight
    of an ordered sample is prod_i D_X(x_i) * prod_x B(c1_x + 1, c0_x + 1).
    """
    support = [x for x in range(marginal.size) if marginal[x] > 0]
    pairs = [(x, y) for x in support for y in (0, 1)]
    if ordered:
        check_enum_size(len(pairs) ** n, "exact prior expectation")
        combos = ((c, 1) for c in itertools.product(pairs, repeat=n))
    else:
        check_enum_size(math.comb(len(pairs) + n - 1, n), "exact prior expectation")
        combos = ((c, _orderings(c)) for c in itertools.combinations_with_replacement(pairs, n))
    for combo, mult in combos:
        counts = Counter(combo)
        beta = Fraction(1)
        for x in {x for x, _ in combo}:
            beta *= beta_marginal_likelihood(counts[(x, 1)], counts[(x, 0)])
        weight = mult * float(beta) * math.prod(float(marginal[x]) for x, _ in combo)
        yield Sample(combo, m), weight, counts


def _orderings(combo) -> int:
    out = math.factorial(len(combo))
    for c in Counter(combo).values():
        out //= math.factorial(c)
    return out


def posterior_expected_ots_error(f: Classifier, marginal: np.ndarray, counts: Counter, seen: set[int]) -> float:
    """Posterior expectation (under the uniform prior) of the instance-excluding
    OTS risk of f. The conditioning event does not depend on the labels, so the
    expectation of the ratio is the ratio with posterior-mean error rates."""
    unseen = [x for x in range(marginal.size) if x not in seen]
    mass = math.fsum(marginal[x] for x in unseen)
    if mass <= 0:
        raise ValueError("sample covers every instance of positive mass; OTS risk undefined")
    terms = []
    for x in unseen:
        ones, zeros = counts.get((x, 1), 0), counts.get((x, 0), 0)
        mean_p = (ones + 1) / (ones + zeros + 2)
        terms.append(marginal[x] * (1 - mean_p if f.table[x] == 1 else mean_p))
    return math.fsum(terms) / mass


def expected_ots_risk_under_uniform_prior(a: Callable[[Sample], Classifier], d_x: Sequence[float] | None, n: int,
                                          m: int | None = None, exact: bool = True, trials: int = 10000,
                                          seed: int = 0, ots_mode: OTSMode = OTSMode.INSTANCE) -> Estimate:
    """E over D_{Y|X} ~ U and S ~ D^n of the OTS risk of a(S).

    The exact mode enumerates instance and label sequences (m <= 3, n <= 4)
    and integrates the prior out in closed form; it supports instance-excluding
    OTS risk only. It needs n below the number of instances of positive mass
    so the OTS event is never empty.
    """
    if d_x is None:
        if m is None:
            raise ValueError("give a marginal or m")
        d_x = _uniform_marginal(m)
    marginal = np.asarray(d_x, dtype=float)
    StochasticSituation(marginal, np.zeros(marginal.size))  # validates the marginal
    m = marginal.size.bit_length() - 1
    if not exact:
        return _mc_prior_ots(a, marginal, n, trials, seed, ots_mode)
    if ots_mode is not OTSMode.INSTANCE:
        raise ValueError("exact prior expectation is available for instance-excluding OTS risk only")
    if m > EXACT_MAX_DIM or n > EXACT_MAX_N:
        raise ValueError(f"exact mode needs m <= {EXACT_MAX_DIM} and n <= {EXACT_MAX_N}")
    if n >= int(np.count_nonzero(marginal > 0)):
        raise ValueError("exact mode needs n below the number of instances with positive mass")
    ordered = not getattr(a, "order_invariant", False)
    terms, total = [], []
    for s, w, counts in _prior_weighted_samples(marginal, m, n, ordered):
        terms.append(w * posterior_expected_ots_error(a(s), marginal, counts, set(s.instances())))
        total.append(w)
    return Estimate(math.fsum(terms) / math.fsum(total))


def _mc_prior_ots(a, marginal, n, trials, seed, ots_mode) -> Estimate:
    prior = UniformConditionalPrior(marginal.size.bit_length() - 1)
    vals = []
    for t in range(trials):
        rng = trial_rng(seed, t)
        d = StochasticSituation(marginal, prior.sample_conditionals(rng))
        s = draw_sample(d, n, rng)
        o = ots_risk(a(s), d, s, ots_mode)
        if o is not None:
            vals.append(o)
    value, se = mean_and_stderr(vals)
    return Estimate(value, se, trials)


@dataclass(frozen=True)
class GapResult:
    gap: float
    stderr: float
    bound: float
    trials: int = 0

    @property
    def satisfied(self) -> bool:
        return self.gap <= self.bound + SIGMA_SLACK * self.stderr


def gap_bound(m: int, n: int) -> float:
    """n 2^-m: largest possible |E[OTS - IID]| under a uniform marginal."""
    return n * 2.0 ** (-m)


def iid_ots_gap(a: Callable[[Sample], Classifier], m: int, n: int, d: StochasticSituation | None = None,
                trials: int = 10000, seed: int = 0, exact: bool | None = None,
                ots_mode: OTSMode = OTSMode.PAIR) -> GapResult:
    """|E_S[L_{D\\S}(a(S)) - L_D(a(S))]| for a uniform marginal, paired with
    its bound n 2^-m. Without ``d`` only the analytic bound is returned."""
    bound = gap_bound(m, n)
    if d is None:
        return GapResult(float("nan"), 0.0, bound)
    if d.m != m:
        raise ValueError("situation dimension differs from m")
    if not np.allclose(d.marginal, 1.0 / d.marginal.size, rtol=0, atol=1e-15):
        raise ValueError("the gap bound is stated for uniform marginals")
    if n >= num_instances(m):
        raise ValueError("need n < 2^m so the OTS risk is always defined")
    if n == 0:
        return GapResult(0.0, 0.0, bound)
    if exact is None:
        exact = m <= EXACT_MAX_DIM and n <= EXACT_MAX_N
    if exact:
        r = exact_expected_risk(a, d, n, ots_mode)
        return GapResult(abs(r.ots - r.iid), 0.0, bound)
    diffs = []
    for t in range(trials):
        s = draw_sample(d, n, trial_rng(seed, t))
        f = a(s)
        diffs.append(ots_risk(f, d, s, ots_mode) - iid_risk(f, d))
    mean, se = mean_and_stderr(diffs)
    return GapResult(abs(mean), se, bound, trials)


def paradox_params(m: int, class_size: int, n: int) -> ParadoxParams:
    """epsilon = sqrt(ln|F| / (2n)) and delta = n 2^-m."""
    if class_size < 1 or n < 1:
        raise ValueError("need class_size >= 1 and n >= 1")
    return ParadoxParams(m, n, class_size, math.sqrt(math.log(class_size) / (2 * n)), n * 2.0 ** (-m))


def n_for_epsilon(class_size: int, epsilon: float) -> int:
    """Smallest n with sqrt(ln|F| / (2n)) <= epsilon."""
    return max(1, math.ceil(math.log(class_size) / (2 * epsilon**2)))


def random_class_tables(m: int, class_size: int, rng: np.random.Generator) -> np.ndarray:
    """``class_size`` distinct classifiers drawn uniformly without replacement,
    as a (class_size, 2^m) 0/1 table."""
    size = num_instances(m)
    if m <= 5:
        total = 1 << size
        if class_size > total:
            raise ValueError(f"only {total} classifiers exist for m={m}")
        idx = rng.choice(total, size=class_size, replace=False)
        shifts = np.arange(size - 1, -1, -1, dtype=np.uint64)
        return ((idx.astype(np.uint64)[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    while True:
        tables = rng.integers(0, 2, size=(class_size, size), dtype=np.uint8)
        if len({row.tobytes() for row in tables}) == class_size:
            return tables


@dataclass
class ParadoxReport:
    params: ParadoxParams
    trials: int
    seed: int
    rows: list[tuple] = field(repr=False)
    mean_min: float = 0.0
    se_min: float = 0.0
    mean_max: float = 0.0
    se_max: float = 0.0

    CSV_HEADER = ("trial", "seed", "min_risk", "max_risk", "epsilon", "delta", "bound_satisfied")

    def _within(self, mean: float, se: float) -> bool:
        return abs(mean - 0.5) <= self.params.tolerance + SIGMA_SLACK * se

    @property
    def min_satisfied(self) -> bool:
        return self._within(self.mean_min, self.se_min)

    @property
    def max_satisfied(self) -> bool:
        return self._within(self.mean_max, self.se_max)

    @property
    def satisfied(self) -> bool:
        return self.min_satisfied and self.max_satisfied

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_HEADER)
        writer.writerows(self.rows)
        return buf.getvalue()


def verify_paradox_resolution(m: int, class_size: int, n: int, trials: int, seed: int,
                              d_x: Sequence[float] | None = None) -> ParadoxReport:
    """Draw (F, D_{Y|X} ~ U) per trial and record the best and worst IID risk
    in F. Under the uniform prior both should average within epsilon (1 + delta)
    of 1/2."""
    if m > 12:
        raise ValueError("exact risk evaluation is limited to m <= 12")
    params = paradox_params(m, class_size, n)
    marginal = _uniform_marginal(m) if d_x is None else np.asarray(d_x, dtype=float)
    prior = UniformConditionalPrior(m)
    rows, mins, maxs = [], [], []
    for t in range(trials):
        ts = trial_seed(seed, t)
        rng = np.random.default_rng(ts)
        p = prior.sample_conditionals(rng)
        tables = random_class_tables(m, class_size, rng)
        err = np.where(tables == 1, 1.0 - p, p)
        risks = err @ marginal
        lo, hi = float(risks.min()), float(risks.max())
        ok = abs(lo - 0.5) <= params.tolerance and abs(hi - 0.5) <= params.tolerance
        rows.append((t, ts, repr(lo), repr(hi), repr(params.epsilon), repr(params.delta), int(ok)))
        mins.append(lo)
        maxs.append(hi)
    mean_min, se_min = mean_and_stderr(mins)
    mean_max, se_max = mean_and_stderr(maxs)
    return ParadoxReport(params, trials, seed, rows, mean_min, se_min, mean_max, se_max)
