"""Exact enumeration and seeded Monte-Carlo drawing of i.i.d. samples from a
finite situation, plus per-trial seed derivation."""

from __future__ import annotations

import itertools
import math
import os
from collections import Counter
from typing import Iterator

import numpy as np

from .core import Sample, StochasticSituation

DEFAULT_MAX_ENUM = 10**7


def max_enum_terms() -> int:
    """Enumeration-term guard, overridable through ``NFL_LAB_MAX_ENUM``."""
    raw = os.environ.get("NFL_LAB_MAX_ENUM")
    return int(raw) if raw else DEFAULT_MAX_ENUM


def check_enum_size(terms: int, what: str = "enumeration") -> None:
    limit = max_enum_terms()
    if terms > limit:
        raise ValueError(f"{what} needs {terms} terms, above the guard of {limit} (set NFL_LAB_MAX_ENUM to raise it)")


def support_pairs(d: StochasticSituation) -> list[tuple[tuple[int, int], float]]:
    """(x, y) pairs with positive probability, in (x, y) order."""
    joint = d.pair_probabilities()
    return [((x, y), float(joint[x, y])) for x in range(joint.shape[0]) for y in (0, 1) if joint[x, y] > 0]


def enumerate_samples(d: StochasticSituation, n: int, ordered: bool = True) -> Iterator[tuple[Sample, float]]:
    """Every length-n sample with positive probability under d^n, with its
    probability.

    With ``ordered=False`` each multiset of pairs is yielded once, carrying the
    total probability of all its orderings; only valid for consumers that
    ignore sample order.
    """
    pairs = support_pairs(d)
    if ordered:
        check_enum_size(len(pairs) ** n)
        for combo in itertools.product(pairs, repeat=n):
            weight = math.prod(w for _, w in combo)
            yield Sample([z for z, _ in combo], d.m), weight
    else:
        check_enum_size(math.comb(len(pairs) + n - 1, n))
        for combo in itertools.combinations_with_replacement(pairs, n):
            counts = Counter(z for z, _ in combo)
            orderings = math.factorial(n)
            for c in counts.values():
                orderings //= math.factorial(c)
            weight = orderings * math.prod(w for _, w in combo)
            yield Sample([z for z, _ in combo], d.m), weight


def trial_seed(seed: int, trial: int) -> int:
    """Seed of one Monte-Carlo trial, derived from the master seed only."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    return int(ss.generate_state(1, np.uint64)[0])


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(trial_seed(seed, trial))


def draw_sample(d: StochasticSituation, n: int, rng: np.random.Generator) -> Sample:
    """Draw n i.i.d. pairs by inverse CDF over instances, then labels."""
    xs = draw_instances(d, n, rng)
    ys = (rng.random(n) < d.conditionals[xs]).astype(np.uint8)
    return Sample(zip(xs.tolist(), ys.tolist()), d.m)


def draw_instances(d: StochasticSituation, n: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(d.marginal)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right").clip(max=d.marginal.size - 1)


def mean_and_stderr(values) -> tuple[float, float]:
    """Sample mean and its standard error (sample sd / sqrt(trials))."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("no values")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))
