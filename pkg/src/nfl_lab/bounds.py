"""Expected-risk bounds for ERM, anti-ERM and forward validation, an exact
enumeration oracle for tiny problems and a Monte-Carlo certification harness.

All logarithms are natural.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    Classifier,
    HypothesisClass,
    OTSMode,
    Sample,
    StochasticSituation,
    empirical_risk,
    iid_risk,
    ots_risk,
)
from .learners import anti_erm_learner, erm_learner, split_forward
from .sampling import draw_sample, enumerate_samples, mean_and_stderr, trial_rng

SIGMA_SLACK = 3.0
EXACT_MAX_DIM = 2
EXACT_MAX_N = 5


class Verdict(enum.Enum):
    SATISFIED = "SATISFIED"
    VIOLATED = "VIOLATED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class BoundCertificate:
    """An expected-risk gap (exact, or Monte-Carlo with standard error)
    compared against its analytic bound."""

    name: str
    n: int
    lhs_estimate: float
    lhs_stderr: float
    rhs_bound: float
    trials: int  # 0 for an exact computation

    @property
    def verdict(self) -> Verdict:
        # The two tests are complementary for finite numbers; a NaN estimate
        # lands in INCONCLUSIVE.
        slack = SIGMA_SLACK * self.lhs_stderr
        if self.lhs_estimate <= self.rhs_bound + slack:
            return Verdict.SATISFIED
        if self.lhs_estimate - slack > self.rhs_bound:
            return Verdict.VIOLATED
        return Verdict.INCONCLUSIVE

    @property
    def exact(self) -> bool:
        return self.trials == 0

    CSV_HEADER = ("name", "n", "lhs_estimate", "lhs_stderr", "rhs_bound", "trials", "verdict")

    def csv_row(self) -> tuple:
        return (self.name, self.n, repr(self.lhs_estimate), repr(self.lhs_stderr), repr(self.rhs_bound), self.trials, self.verdict.value)


@dataclass(frozen=True)
class ExpectedRisk:
    """Expected IID and OTS risk of one learner at sample size n.

    ``ots`` is conditional on the OTS risk being defined; ``ots_undefined_prob``
    is the probability of samples for which it is not.
    """

    learner: str
    n: int
    iid: float
    ots: float | None
    ots_undefined_prob: float = 0.0
    iid_stderr: float = 0.0
    ots_stderr: float = 0.0
    trials: int = 0


def erm_bound(class_size: float, n: int) -> float:
    """sqrt(ln|F| / (2n)): expected excess risk of ERM over the best member."""
    if class_size < 1 or n < 1:
        raise ValueError("need class_size >= 1 and n >= 1")
    return math.sqrt(math.log(class_size) / (2 * n))


def fv_bound(algo_count: float, n: int) -> float:
    """sqrt(ln m / n): forward validation's excess over the best learner."""
    if algo_count < 1 or n < 1:
        raise ValueError("need algo_count >= 1 and n >= 1")
    return math.sqrt(math.log(algo_count) / n)


def eta_objective(eta: float, class_size: float, n: int) -> float:
    """eta/8 + ln|F| / (eta n), the bound before optimising the MGF parameter."""
    return eta / 8 + math.log(class_size) / (eta * n)


def optimal_eta(class_size: float, n: int) -> float:
    """Minimiser sqrt(8 ln|F| / n) of :func:`eta_objective`."""
    if class_size < 2:
        raise ValueError("optimal eta needs class_size >= 2")
    if n < 1:
        raise ValueError("need n >= 1")
    return math.sqrt(8 * math.log(class_size) / n)


def _learner_name(a) -> str:
    return getattr(a, "name", None) or repr(a)


def exact_expected_risk(a: Callable[[Sample], Classifier], d: StochasticSituation, n: int,
                        mode: OTSMode = OTSMode.PAIR) -> ExpectedRisk:
    """E over S ~ d^n of the IID and OTS risk of a(S), by weighted
    enumeration of every sample."""
    ordered = not getattr(a, "order_invariant", False)
    iid_cache: dict[Classifier, float] = {}
    iid_terms, ots_terms, ots_weights, undefined = [], [], [], []
    for s, w in enumerate_samples(d, n, ordered=ordered):
        f = a(s)
        if f not in iid_cache:
            iid_cache[f] = iid_risk(f, d)
        iid_terms.append(w * iid_cache[f])
        o = ots_risk(f, d, s, mode)
        if o is None:
            undefined.append(w)
        else:
            ots_terms.append(w * o)
            ots_weights.append(w)
    defined = math.fsum(ots_weights)
    ots = math.fsum(ots_terms) / defined if defined > 0 else None
    return ExpectedRisk(_learner_name(a), n, math.fsum(iid_terms), ots, math.fsum(undefined))


def mc_expected_risk(a: Callable[[Sample], Classifier], d: StochasticSituation, n: int, trials: int, seed: int,
                     mode: OTSMode = OTSMode.PAIR) -> ExpectedRisk:
    """Monte-Carlo counterpart of :func:`exact_expected_risk`."""
    iid_vals, ots_vals = [], []
    for t in range(trials):
        s = draw_sample(d, n, trial_rng(seed, t))
        f = a(s)
        iid_vals.append(iid_risk(f, d))
        o = ots_risk(f, d, s, mode)
        if o is not None:
            ots_vals.append(o)
    iid, iid_se = mean_and_stderr(iid_vals)
    ots, ots_se = mean_and_stderr(ots_vals) if ots_vals else (None, 0.0)
    return ExpectedRisk(_learner_name(a), n, iid, ots, 1 - len(ots_vals) / trials, iid_se, ots_se, trials)


def _use_exact(d: StochasticSituation, n: int, exact: bool | None) -> bool:
    if exact is None:
        return d.m <= EXACT_MAX_DIM and n <= EXACT_MAX_N
    return exact


def _exact_mean(fn: Callable[[Classifier], float], a, d: StochasticSituation, n: int) -> float:
    """E over S ~ d^n of fn(a(S)). Summing per-sample gaps keeps a gap that is
    identically zero exactly zero."""
    ordered = not getattr(a, "order_invariant", False)
    return math.fsum(w * fn(a(s)) for s, w in enumerate_samples(d, n, ordered=ordered))


def _risks(F: HypothesisClass, d: StochasticSituation) -> np.ndarray:
    return np.array([iid_risk(f, d) for f in F])


def certify_erm_bound(d: StochasticSituation, F: HypothesisClass, n: int, trials: int = 2000, seed: int = 0,
                      exact: bool | None = None) -> BoundCertificate:
    """E[L_D(ERM(F,S))] - min_f L_D(f) against sqrt(ln|F|/(2n))."""
    best = float(_risks(F, d).min())
    learner = erm_learner(F)
    if _use_exact(d, n, exact):
        lhs, se, used = _exact_mean(lambda f: iid_risk(f, d) - best, learner, d, n), 0.0, 0
    else:
        vals = [iid_risk(learner(draw_sample(d, n, trial_rng(seed, t))), d) - best for t in range(trials)]
        (lhs, se), used = mean_and_stderr(vals), trials
    return BoundCertificate("erm", n, lhs, se, erm_bound(len(F), n), used)


def certify_anti_erm_bound(d: StochasticSituation, F: HypothesisClass, n: int, trials: int = 2000, seed: int = 0,
                           exact: bool | None = None) -> BoundCertificate:
    """max_f L_D(f) - E[L_D(antiERM(F,S))] against sqrt(ln|F|/(2n))."""
    worst = float(_risks(F, d).max())
    learner = anti_erm_learner(F)
    if _use_exact(d, n, exact):
        lhs, se, used = _exact_mean(lambda f: worst - iid_risk(f, d), learner, d, n), 0.0, 0
    else:
        vals = [worst - iid_risk(learner(draw_sample(d, n, trial_rng(seed, t))), d) for t in range(trials)]
        (lhs, se), used = mean_and_stderr(vals), trials
    return BoundCertificate("anti_erm", n, lhs, se, erm_bound(len(F), n), used)


@dataclass(frozen=True)
class ValidationTrial:
    """One forward-validation run: validation errors and IID risks of the
    classifiers trained on the first half, and the indices that forward and
    anti-forward validation select from them."""

    selected: int
    anti_selected: int
    validation_errors: tuple
    risks: tuple

    @property
    def selected_risk(self) -> float:
        return self.risks[self.selected]

    @property
    def anti_selected_risk(self) -> float:
        return self.risks[self.anti_selected]


def validation_trial(algos: Sequence[Callable[[Sample], Classifier]], s: Sample, d: StochasticSituation) -> ValidationTrial:
    if s.n <= 1:
        raise ValueError("forward validation needs n > 1")
    train, valid = split_forward(s)
    fitted = [a(train) for a in algos]
    errors = tuple(empirical_risk(f, valid) for f in fitted)
    best = min(range(len(errors)), key=lambda i: (errors[i], i))
    worst = min(range(len(errors)), key=lambda i: (-errors[i], i))
    return ValidationTrial(best, worst, errors, tuple(iid_risk(f, d) for f in fitted))


def fv_trials(algos, d: StochasticSituation, n: int, trials: int = 1000, seed: int = 0,
              exact: bool | None = None) -> tuple[list[ValidationTrial], np.ndarray]:
    """Validation records with their weights: every sample with its
    probability when exact, else ``trials`` draws with weight 1/trials."""
    if n <= 1:
        raise ValueError("forward validation needs n > 1")
    if _use_exact(d, n, exact):
        rows, weights = [], []
        for s, w in enumerate_samples(d, n, ordered=True):
            rows.append(validation_trial(algos, s, d))
            weights.append(w)
        return rows, np.array(weights)
    rows = [validation_trial(algos, draw_sample(d, n, trial_rng(seed, t)), d) for t in range(trials)]
    return rows, np.full(trials, 1.0 / trials)


def fv_certificates(rows: Sequence[ValidationTrial], weights: np.ndarray, n: int, exact: bool) -> dict[str, BoundCertificate]:
    """Certificates computed from one set of validation records.

    ``forward_validation``: E[risk of fv] - min_k E[risk of A_k(S_1)].
    ``anti_forward_validation``: max_k E[risk of A_k(S_1)] - E[risk of anti-fv].
    ``anti_fv_excess``: E[risk of anti-fv] - min_k E[risk of A_k(S_1)]; nothing
    bounds it, it is reported to show anti-validation drifting to the worst.
    """
    risk = np.array([r.risks for r in rows])
    fv = np.array([r.selected_risk for r in rows])
    afv = np.array([r.anti_selected_risk for r in rows])
    per_learner = weights @ risk
    best, worst = int(np.argmin(per_learner)), int(np.argmax(per_learner))
    bound = fv_bound(risk.shape[1], n)
    out = {}
    for name, diffs in (("forward_validation", fv - risk[:, best]),
                        ("anti_forward_validation", risk[:, worst] - afv),
                        ("anti_fv_excess", afv - risk[:, best])):
        if exact:
            out[name] = BoundCertificate(name, n, float(weights @ diffs), 0.0, bound, 0)
        else:
            mean, se = mean_and_stderr(diffs)
            out[name] = BoundCertificate(name, n, mean, se, bound, len(rows))
    return out


def certify_fv_bound(algos, d: StochasticSituation, n: int, trials: int = 1000, seed: int = 0,
                     exact: bool | None = None) -> BoundCertificate:
    """E[risk of forward validation] - min_k E[risk of A_k(S_1)] against
    sqrt(ln m / n)."""
    rows, weights = fv_trials(algos, d, n, trials, seed, exact)
    return fv_certificates(rows, weights, n, _use_exact(d, n, exact))["forward_validation"]


def certify_anti_fv_bound(algos, d: StochasticSituation, n: int, trials: int = 1000, seed: int = 0,
                          exact: bool | None = None) -> BoundCertificate:
    """max_k E[risk of A_k(S_1)] - E[risk of anti-forward validation]
    against sqrt(ln m / n)."""
    rows, weights = fv_trials(algos, d, n, trials, seed, exact)
    return fv_certificates(rows, weights, n, _use_exact(d, n, exact))["anti_forward_validation"]
