"""Learning algorithms as (model, data) -> classifier maps.

Tie-breaking is fixed everywhere: lowest index among equally good candidates,
label 0 among equally supported labels.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .core import Classifier, HypothesisClass, Sample, empirical_risk, instance_matrix, num_instances


class LearnerKind(enum.Enum):
    ERM = "erm"
    ANTI_ERM = "anti_erm"
    CONSTANT = "constant"
    KNN = "knn"
    BAYES = "bayes"
    FORWARD_VALIDATION = "forward_validation"
    ANTI_FORWARD_VALIDATION = "anti_forward_validation"
    M_FOLD_CV = "m_fold_cv"


@dataclass(frozen=True)
class BayesModel:
    """Finite set of candidate conditionals P(Y=1|X=x) with a prior over them."""

    candidates: tuple[np.ndarray, ...]
    prior: tuple[float, ...]

    def __init__(self, candidates: Sequence[Sequence[float]], prior: Sequence[float] | None = None):
        cands = tuple(np.array(c, dtype=float) for c in candidates)
        if not cands:
            raise ValueError("Bayes model needs at least one candidate")
        if len({c.size for c in cands}) != 1 or cands[0].size & (cands[0].size - 1):
            raise ValueError("candidates must share a power-of-two length")
        for c in cands:
            if np.any((c < 0) | (c > 1)):
                raise ValueError("candidate conditionals must lie in [0, 1]")
            c.setflags(write=False)
        if prior is None:
            prior = [1.0 / len(cands)] * len(cands)
        prior = tuple(float(w) for w in prior)
        if len(prior) != len(cands):
            raise ValueError("prior length does not match candidates")
        if any(w <= 0 for w in prior) or abs(math.fsum(prior) - 1.0) > 1e-12:
            raise ValueError("prior weights must be positive and sum to 1")
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "prior", prior)

    @property
    def m(self) -> int:
        return self.candidates[0].size.bit_length() - 1

    def __hash__(self) -> int:
        return hash((tuple(c.tobytes() for c in self.candidates), self.prior))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BayesModel) and hash(self) == hash(other)


def erm(F: HypothesisClass, s: Sample) -> Classifier:
    """Member of F with fewest training errors; earliest member on ties.
    An empty sample returns the first member."""
    return F[int(np.argmin(_error_counts(F, s)))]


def anti_erm(F: HypothesisClass, s: Sample) -> Classifier:
    """Member of F with most training errors; earliest member on ties."""
    return F[int(np.argmax(_error_counts(F, s)))]


def _error_counts(F: HypothesisClass, s: Sample) -> np.ndarray:
    if F.m != s.m:
        raise ValueError("hypothesis class and sample differ in m")
    return (F.matrix[:, s.xs] != s.ys[None, :]).sum(axis=1)


def knn(k: int, s: Sample) -> Classifier:
    """k-nearest-neighbour majority vote under Hamming distance.

    Equidistant neighbours are taken in sample order; a tied vote gives 0.
    """
    if s.n == 0:
        raise ValueError("k-NN needs a nonempty sample")
    if not 1 <= k <= s.n:
        raise ValueError(f"k={k} outside [1, {s.n}]")
    dist = _popcounts(s.m)[np.arange(num_instances(s.m))[:, None] ^ s.xs[None, :]]
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    ones = s.ys[nearest].sum(axis=1)
    return Classifier((2 * ones > k).astype(np.uint8))


@functools.lru_cache(maxsize=None)
def _popcounts(m: int) -> np.ndarray:
    """Number of set bits of every instance index, i.e. Hamming weight."""
    return instance_matrix(m).sum(axis=1)


def bayes_posterior(model: BayesModel, s: Sample) -> np.ndarray:
    """Posterior weights over the model's candidates, computed in log space."""
    if model.m != s.m:
        raise ValueError("Bayes model and sample differ in m")
    with np.errstate(divide="ignore"):
        logs = []
        for cand, w in zip(model.candidates, model.prior):
            p = cand[s.xs]
            lik = np.where(s.ys == 1, np.log(p), np.log1p(-p))
            logs.append(math.log(w) + float(lik.sum()))
    logs = np.array(logs)
    top = logs.max()
    if not np.isfinite(top):
        raise ValueError("sample has zero likelihood under every candidate (model misspecified)")
    weights = np.exp(logs - top)
    return weights / weights.sum()


def bayes(model: BayesModel, s: Sample) -> Classifier:
    """Label of highest posterior-predictive probability at every instance."""
    weights = bayes_posterior(model, s)
    predictive = np.sum([w * c for w, c in zip(weights, model.candidates)], axis=0)
    return Classifier((predictive > 0.5).astype(np.uint8))


def split_forward(s: Sample) -> tuple[Sample, Sample]:
    """First floor(n/2) points for training, the rest for validation."""
    half = s.n // 2
    return s[:half], s[half:]


def _validate(algos: Sequence["Learner"], s: Sample, pick: Callable) -> tuple[Classifier, int]:
    if not algos:
        raise ValueError("need at least one learner")
    if s.n <= 1:
        raise ValueError("forward validation needs n > 1")
    train, valid = split_forward(s)
    fitted = [a(train) for a in algos]
    errors = [empirical_risk(f, valid) for f in fitted]
    k = pick(errors)
    return fitted[k], k


def _argmin(values: Sequence) -> int:
    return min(range(len(values)), key=lambda i: (values[i], i))


def _argmax(values: Sequence) -> int:
    return min(range(len(values)), key=lambda i: (-values[i], i))


def forward_validation(algos: Sequence["Learner"], s: Sample) -> tuple[Classifier, int]:
    """Train every learner on the first half, keep the one with the least
    error on the second half. Returns the classifier and its index."""
    return _validate(algos, s, _argmin)


def anti_forward_validation(algos: Sequence["Learner"], s: Sample) -> tuple[Classifier, int]:
    return _validate(algos, s, _argmax)


def fold_bounds(n: int, M: int) -> list[tuple[int, int]]:
    """Contiguous folds of size floor(n/M), the remainder spread over the
    first folds."""
    base, extra = divmod(n, M)
    bounds, start = [], 0
    for i in range(M):
        stop = start + base + (1 if i < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def cv_errors(algos: Sequence["Learner"], s: Sample, M: int) -> list[Fraction]:
    """Mean validation error of each learner over the M folds."""
    if not 2 <= M <= s.n:
        raise ValueError(f"fold count M={M} outside [2, {s.n}]")
    out = []
    folds = fold_bounds(s.n, M)
    for a in algos:
        total = Fraction(0)
        for lo, hi in folds:
            f = a(s[:lo] + s[hi:])
            total += empirical_risk(f, s[lo:hi])
        out.append(total / M)
    return out


def m_fold_cv(algos: Sequence["Learner"], s: Sample, M: int) -> tuple[Classifier, int]:
    """M-fold cross-validation; the selected learner is retrained on all of s."""
    if not algos:
        raise ValueError("need at least one learner")
    k = _argmin(cv_errors(algos, s, M))
    return algos[k](s), k


@dataclass(frozen=True)
class Learner:
    """A learning algorithm bound to its model, callable on a sample."""

    kind: LearnerKind
    model: Any
    name: str = field(default="", compare=False)
    folds: int = 2

    def __post_init__(self):
        kind, model = self.kind, self.model
        if kind in (LearnerKind.ERM, LearnerKind.ANTI_ERM) and not isinstance(model, HypothesisClass):
            raise TypeError(f"{kind.value} needs a HypothesisClass")
        if kind is LearnerKind.CONSTANT and model not in (0, 1):
            raise ValueError("constant learner needs label 0 or 1")
        if kind is LearnerKind.KNN and (not isinstance(model, int) or model < 1):
            raise ValueError("k-NN needs a positive integer k")
        if kind is LearnerKind.BAYES and not isinstance(model, BayesModel):
            raise TypeError("bayes needs a BayesModel")
        if kind in _META:
            object.__setattr__(self, "model", tuple(model))
            if not self.model or not all(callable(a) for a in self.model):
                raise TypeError(f"{kind.value} needs a nonempty list of learners")
        if not self.name:
            object.__setattr__(self, "name", _default_name(self))

    def __call__(self, s: Sample) -> Classifier:
        return self.fit(s)

    def fit(self, s: Sample) -> Classifier:
        kind = self.kind
        if kind is LearnerKind.ERM:
            return erm(self.model, s)
        if kind is LearnerKind.ANTI_ERM:
            return anti_erm(self.model, s)
        if kind is LearnerKind.CONSTANT:
            return Classifier.constant(self.model, s.m)
        if kind is LearnerKind.KNN:
            return knn(self.model, s)
        if kind is LearnerKind.BAYES:
            return bayes(self.model, s)
        return self.select(s)[0]

    def select(self, s: Sample) -> tuple[Classifier, int]:
        """Classifier and selected index, for the validation kinds."""
        if self.kind is LearnerKind.FORWARD_VALIDATION:
            return forward_validation(self.model, s)
        if self.kind is LearnerKind.ANTI_FORWARD_VALIDATION:
            return anti_forward_validation(self.model, s)
        if self.kind is LearnerKind.M_FOLD_CV:
            return m_fold_cv(self.model, s, self.folds)
        raise TypeError(f"{self.kind.value} is not a selection learner")

    @property
    def order_invariant(self) -> bool:
        """True if the output never depends on the order of the sample."""
        return self.kind in (LearnerKind.ERM, LearnerKind.ANTI_ERM, LearnerKind.CONSTANT, LearnerKind.BAYES)


_META = (LearnerKind.FORWARD_VALIDATION, LearnerKind.ANTI_FORWARD_VALIDATION, LearnerKind.M_FOLD_CV)


def _default_name(learner: Learner) -> str:
    kind, model = learner.kind, learner.model
    if kind in (LearnerKind.ERM, LearnerKind.ANTI_ERM):
        return f"{kind.value}[|F|={len(model)}]"
    if kind is LearnerKind.CONSTANT:
        return f"constant-{model}"
    if kind is LearnerKind.KNN:
        return f"{model}-nn"
    if kind is LearnerKind.BAYES:
        return f"bayes[{len(model.candidates)}]"
    inner = ",".join(getattr(a, "name", repr(a)) for a in model)
    return f"{kind.value}({inner})"


def erm_learner(F: HypothesisClass, name: str = "") -> Learner:
    return Learner(LearnerKind.ERM, F, name)


def anti_erm_learner(F: HypothesisClass, name: str = "") -> Learner:
    return Learner(LearnerKind.ANTI_ERM, F, name)


def constant_learner(label: int) -> Learner:
    return Learner(LearnerKind.CONSTANT, label)


def knn_learner(k: int) -> Learner:
    return Learner(LearnerKind.KNN, k)


def bayes_learner(model: BayesModel, name: str = "") -> Learner:
    return Learner(LearnerKind.BAYES, model, name)


def forward_validation_learner(algos: Sequence[Learner], name: str = "") -> Learner:
    return Learner(LearnerKind.FORWARD_VALIDATION, tuple(algos), name)


def anti_forward_validation_learner(algos: Sequence[Learner], name: str = "") -> Learner:
    return Learner(LearnerKind.ANTI_FORWARD_VALIDATION, tuple(algos), name)


def m_fold_cv_learner(algos: Sequence[Learner], M: int, name: str = "") -> Learner:
    return Learner(LearnerKind.M_FOLD_CV, tuple(algos), name, folds=M)


class MajorityLearner:
    """Data-only learner outputting the sample's majority label (ties to 0)."""

    name = "majority"
    order_invariant = True

    def __call__(self, s: Sample) -> Classifier:
        return Classifier.constant(int(2 * int(s.ys.sum()) > s.n), s.m)

    def __repr__(self) -> str:
        return "MajorityLearner()"
