"""Exhaustive no-free-lunch checks on tiny finite problems.

Two settings are covered: sequential prediction of binary outcomes over a
horizon ``T`` (every predictor maps each history to a guess), and
non-stochastic classification, where the truth is one of the classifiers that
agree with the labels already seen.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .core import Classifier, num_instances

MAX_HORIZON = 4
MAX_SWEEP_DIM = 3

ErrorProfile = Counter  # error level (Fraction) -> number of situations


def num_histories(T: int) -> int:
    return (1 << T) - 1


def history_code(prefix: Sequence[int]) -> int:
    """Dense index of a history: all histories of length L come after the
    2^L - 1 shorter ones, ordered by their bits read as a binary number."""
    bits = 0
    for b in prefix:
        bits = (bits << 1) | b
    return (1 << len(prefix)) - 1 + bits


def history_string(code: int) -> str:
    length = (code + 1).bit_length() - 1
    bits = code - ((1 << length) - 1)
    return "".join("NT"[int(c)] for c in format(bits, f"0{length}b")) if length else ""


class Predictor:
    """Deterministic next-outcome rule on every history shorter than ``T``."""

    __slots__ = ("T", "rule")

    def __init__(self, rule: Sequence[int], T: int):
        rule = tuple(int(v) for v in rule)
        if len(rule) != num_histories(T):
            raise ValueError(f"rule must cover {num_histories(T)} histories, got {len(rule)}")
        if any(v not in (0, 1) for v in rule):
            raise ValueError("predictions must be 0 or 1")
        self.T = T
        self.rule = rule

    def predict(self, prefix: Sequence[int]) -> int:
        return self.rule[history_code(prefix)]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Predictor) and (self.T, self.rule) == (other.T, other.rule)

    def __hash__(self) -> int:
        return hash((self.T, self.rule))

    def __repr__(self) -> str:
        return f"Predictor(T={self.T}, rule={''.join(map(str, self.rule))})"


def _check_horizon(T: int) -> None:
    if not 1 <= T <= MAX_HORIZON:
        raise ValueError(f"horizon T={T} outside [1, {MAX_HORIZON}]")


def _predictor_table(T: int) -> np.ndarray:
    """All predictors as rows; predictor r predicts bit (H-1-j) of r at history j."""
    H = num_histories(T)
    r = np.arange(1 << H, dtype=np.int64)
    return ((r[:, None] >> np.arange(H - 1, -1, -1)) & 1).astype(np.uint8)


def enumerate_predictors(T: int) -> list[Predictor]:
    """All 2^(2^T - 1) predictors, in canonical rule-table order."""
    _check_horizon(T)
    return [Predictor(row, T) for row in _predictor_table(T).tolist()]


def _sequences(T: int) -> list[tuple[int, ...]]:
    return list(itertools.product((0, 1), repeat=T))


def _visit_codes(T: int) -> np.ndarray:
    """(2^T, T) history codes consulted along every outcome sequence."""
    return np.array([[history_code(seq[:t]) for t in range(T)] for seq in _sequences(T)], dtype=np.int64)


def sequence_errors(p: Predictor) -> list[int]:
    """Number of wrong predictions along each of the 2^T outcome sequences."""
    return [sum(p.predict(seq[:t]) != seq[t] for t in range(p.T)) for seq in _sequences(p.T)]


def predictor_error_profile(p: Predictor) -> ErrorProfile:
    return Counter(Fraction(e, p.T) for e in sequence_errors(p))


def expected_prediction_error(p: Predictor) -> Fraction:
    """Error averaged uniformly over all outcome sequences."""
    errors = sequence_errors(p)
    return Fraction(sum(errors), p.T * len(errors))


def all_error_profiles(T: int) -> np.ndarray:
    """Vectorised error counts: (num predictors, 2^T) matrix for horizon T."""
    _check_horizon(T)
    table = _predictor_table(T)
    codes = _visit_codes(T)
    outcomes = np.array(_sequences(T), dtype=np.uint8)
    preds = table[:, codes]  # (P, 2^T, T)
    return (preds != outcomes[None, :, :]).sum(axis=2)


def probabilistic_predictor_expected_error(q: Sequence[float] | Mapping[str, float], T: int) -> float:
    """Expected error of a predictor that forecasts P(next = T) = q(history).

    A single forecast ``p`` costs ``p`` when the outcome is N and ``1 - p``
    when it is T. ``q`` is a sequence indexed by history code, or a mapping from
    history strings over {T, N} (the empty string for the first day).
    """
    _check_horizon(T)
    if isinstance(q, Mapping):
        q = [q[history_string(c)] for c in range(num_histories(T))]
    q = [float(v) for v in q]
    if len(q) != num_histories(T):
        raise ValueError(f"q must cover {num_histories(T)} histories")
    if any(not 0.0 <= v <= 1.0 for v in q):
        raise ValueError("forecast probabilities must lie in [0, 1]")
    per_sequence = []
    for seq in _sequences(T):
        steps = (q[history_code(seq[:t])] if seq[t] == 0 else 1.0 - q[history_code(seq[:t])] for t in range(T))
        per_sequence.append(math.fsum(steps) / T)
    return math.fsum(per_sequence) / len(per_sequence)


def remaining_situations(labeling: Mapping[int, int], m: int) -> list[Classifier]:
    """All classifiers that agree with ``labeling`` on the seen instances,
    ordered by their labels on the unseen instances read as a binary number."""
    size = num_instances(m)
    if any(not 0 <= x < size for x in labeling):
        raise ValueError("seen instance out of range")
    unseen = [x for x in range(size) if x not in labeling]
    if not unseen:
        raise ValueError("seen instances exhaust the domain")
    base = np.zeros(size, dtype=np.uint8)
    for x, y in labeling.items():
        base[x] = y
    out = []
    for fill in itertools.product((0, 1), repeat=len(unseen)):
        table = base.copy()
        table[unseen] = fill
        out.append(Classifier(table))
    return out


def nonstochastic_nfl_check(labeling: Mapping[int, int], learner_outputs: Sequence[Classifier], m: int) -> list[ErrorProfile]:
    """Histogram of off-sample error of each output over all remaining truths."""
    truths = remaining_situations(labeling, m)
    if any(f.m != m for f in learner_outputs):
        raise ValueError(f"every learner output must have m={m}")
    if not learner_outputs:
        return []
    unseen = [x for x in range(num_instances(m)) if x not in labeling]
    outs = np.array([f.table[unseen] for f in learner_outputs])
    truth = np.array([t.table[unseen] for t in truths])
    wrong = (outs[:, None, :] != truth[None, :, :]).sum(axis=2)  # (outputs, truths)
    u = len(unseen)
    levels = [Fraction(k, u) for k in range(u + 1)]
    profiles = []
    for row in wrong:
        counts = np.bincount(row, minlength=u + 1)
        profiles.append(Counter({levels[k]: int(c) for k, c in enumerate(counts) if c}))
    return profiles


def profile_rows(profile: ErrorProfile) -> list[tuple[int, int, int]]:
    """CSV rows (error_level_num, error_level_den, count), sorted by level."""
    return [(lvl.numerator, lvl.denominator, profile[lvl]) for lvl in sorted(profile)]
