"""Domain types for binary classification on the finite cube {0,1}^m and the
exact risk functionals used throughout the package.

Instances are represented by their integer index in lexicographic order, so the
instance with bits ``b_1 ... b_m`` has index ``int("b_1...b_m", 2)``. Labels are
0/1, rendered N/T in reports.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 20
LABEL_NAMES = {0: "N", 1: "T"}


class OTSMode(enum.Enum):
    """Which training points an off-training-set risk discounts."""

    PAIR = "pair"  # exclude the exact (x, y) pairs of the sample
    INSTANCE = "instance"  # exclude every x that occurs in the sample


def _check_dim(m: int) -> None:
    if not 0 <= m <= MAX_DIM:
        raise ValueError(f"dimension m={m} outside [0, {MAX_DIM}]")


def num_instances(m: int) -> int:
    _check_dim(m)
    return 1 << m


def instance_bits(index: int, m: int) -> str:
    """Bit string of the instance with the given lexicographic index."""
    if not 0 <= index < num_instances(m):
        raise ValueError(f"instance index {index} out of range for m={m}")
    return format(index, f"0{m}b") if m else ""


def instance_index(bits: str | Sequence[int]) -> int:
    """Lexicographic index of a bit vector given as a string or int sequence."""
    if isinstance(bits, str):
        if bits.strip("01"):
            raise ValueError(f"not a bit string: {bits!r}")
        return int(bits, 2) if bits else 0
    value = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bit {b!r} is not 0 or 1")
        value = (value << 1) | int(b)
    return value


def instance_matrix(m: int) -> np.ndarray:
    """All instances as a (2^m, m) 0/1 matrix, rows in lexicographic order."""
    idx = np.arange(num_instances(m))
    shifts = np.arange(m - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Classifier:
    """Total labeling of {0,1}^m, stored as a dense table in instance order."""

    __slots__ = ("m", "table", "_key")

    def __init__(self, table: Iterable[int] | np.ndarray, m: int | None = None):
        arr = np.array(table, dtype=np.uint8).ravel()
        size = arr.size
        if size == 0 or size & (size - 1):
            raise ValueError(f"table length {size} is not a power of two")
        dim = size.bit_length() - 1
        if m is not None and m != dim:
            raise ValueError(f"table length {size} does not match m={m}")
        _check_dim(dim)
        if np.any(arr > 1):
            raise ValueError("classifier labels must be 0 or 1")
        self.m = dim
        self.table = _readonly(arr)
        self._key = arr.tobytes()

    @classmethod
    def constant(cls, label: int, m: int) -> "Classifier":
        return cls(np.full(num_instances(m), label, dtype=np.uint8))

    @classmethod
    def from_string(cls, text: str) -> "Classifier":
        """Parse the canonical 0/1 string (one character per instance)."""
        text = text.strip()
        if text.strip("01"):
            raise ValueError(f"not a classifier string: {text!r}")
        return cls([int(c) for c in text])

    @classmethod
    def from_index(cls, index: int, m: int) -> "Classifier":
        """The index-th classifier in canonical (lexicographic string) order."""
        size = num_instances(m)
        if not 0 <= index < (1 << size):
            raise ValueError(f"classifier index {index} out of range for m={m}")
        return cls.from_string(format(index, f"0{size}b"))

    def to_string(self) -> str:
        return "".join("01"[v] for v in self.table)

    def index(self) -> int:
        return int(self.to_string(), 2)

    def complement(self) -> "Classifier":
        return Classifier(1 - self.table)

    def __call__(self, x: int) -> int:
        return int(self.table[x])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Classifier):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Classifier({self.to_string()!r})"


def all_classifiers(m: int) -> list[Classifier]:
    """Every classifier on {0,1}^m in canonical order (m <= 4)."""
    if m > 4:
        raise ValueError("enumerating all classifiers is limited to m <= 4")
    return [Classifier.from_index(i, m) for i in range(1 << num_instances(m))]


class Sample:
    """Ordered training sample of (instance index, label) pairs."""

    __slots__ = ("m", "pairs", "xs", "ys")

    def __init__(self, pairs: Iterable[tuple[int, int]], m: int):
        size = num_instances(m)
        pairs = tuple((int(x), int(y)) for x, y in pairs)
        for x, y in pairs:
            if not 0 <= x < size:
                raise ValueError(f"instance {x} out of range for m={m}")
            if y not in (0, 1):
                raise ValueError(f"label {y} is not 0 or 1")
        self.m = m
        self.pairs = pairs
        self.xs = _readonly(np.array([x for x, _ in pairs], dtype=np.int64))
        self.ys = _readonly(np.array([y for _, y in pairs], dtype=np.uint8))

    @classmethod
    def from_bits(cls, pairs: Iterable[tuple[str, int]], m: int) -> "Sample":
        return cls(((instance_index(b), y) for b, y in pairs), m)

    @property
    def n(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, item: slice) -> "Sample":
        if not isinstance(item, slice):
            raise TypeError("Sample supports slicing only")
        return Sample(self.pairs[item], self.m)

    def __add__(self, other: "Sample") -> "Sample":
        if other.m != self.m:
            raise ValueError("cannot concatenate samples of different m")
        return Sample(self.pairs + other.pairs, self.m)

    def instances(self) -> frozenset[int]:
        return frozenset(x for x, _ in self.pairs)

    def flipped(self) -> "Sample":
        return Sample(((x, 1 - y) for x, y in self.pairs), self.m)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return self.m == other.m and self.pairs == other.pairs

    def __hash__(self) -> int:
        return hash((self.m, self.pairs))

    def __repr__(self) -> str:
        body = ", ".join(f"({instance_bits(x, self.m)},{y})" for x, y in self.pairs)
        return f"Sample([{body}], m={self.m})"


class StochasticSituation:
    """A distribution over (instance, label): marginal over instances plus
    P(Y=1 | X=x) for every instance."""

    __slots__ = ("m", "marginal", "conditionals")

    def __init__(self, marginal: Sequence[float] | np.ndarray, conditionals: Sequence[float] | np.ndarray):
        marginal = np.array(marginal, dtype=float).ravel()
        conditionals = np.array(conditionals, dtype=float).ravel()
        if marginal.shape != conditionals.shape:
            raise ValueError("marginal and conditionals differ in length")
        size = marginal.size
        if size == 0 or size & (size - 1):
            raise ValueError(f"length {size} is not a power of two")
        self.m = size.bit_length() - 1
        _check_dim(self.m)
        if np.any(marginal < 0) or abs(math.fsum(marginal) - 1.0) > 1e-12:
            raise ValueError("marginal must be nonnegative and sum to 1")
        if np.any((conditionals < 0) | (conditionals > 1)):
            raise ValueError("conditionals must lie in [0, 1]")
        self.marginal = _readonly(marginal)
        self.conditionals = _readonly(conditionals)

    @classmethod
    def uniform(cls, conditionals: Sequence[float] | np.ndarray) -> "StochasticSituation":
        conditionals = np.asarray(conditionals, dtype=float)
        return cls(np.full(conditionals.size, 1.0 / conditionals.size), conditionals)

    @classmethod
    def deterministic(cls, truth: Classifier, marginal: Sequence[float] | None = None) -> "StochasticSituation":
        if marginal is None:
            marginal = np.full(num_instances(truth.m), 1.0 / num_instances(truth.m))
        return cls(marginal, truth.table.astype(float))

    def is_deterministic(self) -> bool:
        return bool(np.all((self.conditionals == 0) | (self.conditionals == 1)))

    def to_classifier(self) -> Classifier:
        if not self.is_deterministic():
            raise ValueError("situation has non-degenerate conditionals")
        return Classifier(self.conditionals.astype(np.uint8))

    def pair_probabilities(self) -> np.ndarray:
        """(2^m, 2) array of P(X=x, Y=y)."""
        p1 = self.marginal * self.conditionals
        return np.stack([self.marginal - p1, p1], axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["instance_bits", "marginal", "p_conditional"])
        for x in range(self.marginal.size):
            writer.writerow([instance_bits(x, self.m), repr(float(self.marginal[x])), repr(float(self.conditionals[x]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "StochasticSituation":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty situation CSV")
        m = len(rows[0]["instance_bits"])
        marginal = np.zeros(len(rows))
        cond = np.zeros(len(rows))
        if len(rows) != num_instances(m):
            raise ValueError("situation CSV must list every instance")
        for row in rows:
            x = instance_index(row["instance_bits"])
            marginal[x] = float(row["marginal"])
            cond[x] = float(row["p_conditional"])
        return cls(marginal, cond)

    def __repr__(self) -> str:
        return f"StochasticSituation(m={self.m})"


class HypothesisClass:
    """Finite, ordered, duplicate-free set of classifiers on a common domain.
    Member order is the tie-breaking order of the learners."""

    __slots__ = ("members", "matrix")

    def __init__(self, members: Iterable[Classifier]):
        members = tuple(members)
        if not members:
            raise ValueError("hypothesis class must be nonempty")
        if len({f.m for f in members}) != 1:
            raise ValueError("hypothesis class members must share m")
        if len(set(members)) != len(members):
            raise ValueError("hypothesis class contains duplicates")
        self.members = members
        self.matrix = _readonly(np.stack([f.table for f in members]))

    @property
    def m(self) -> int:
        return self.members[0].m

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i: int) -> Classifier:
        return self.members[i]

    def __repr__(self) -> str:
        return f"HypothesisClass({[f.to_string() for f in self.members]})"


class RiskReport:
    """IID, OTS and empirical risk of one classifier; ``ots_risk`` is None when
    the off-training-set event has probability zero."""

    __slots__ = ("iid_risk", "ots_risk", "empirical_risk")

    def __init__(self, iid_risk: float, ots_risk: float | None, empirical_risk: Fraction | None):
        for value in (iid_risk, ots_risk, empirical_risk):
            if value is not None and not 0 <= value <= 1:
                raise ValueError(f"risk {value} outside [0, 1]")
        self.iid_risk = iid_risk
        self.ots_risk = ots_risk
        self.empirical_risk = empirical_risk

    def __repr__(self) -> str:
        return f"RiskReport(iid={self.iid_risk!r}, ots={self.ots_risk!r}, emp={self.empirical_risk!s})"


def _check_same_dim(f: Classifier, d: StochasticSituation) -> None:
    if f.m != d.m:
        raise ValueError(f"classifier has m={f.m} but situation has m={d.m}")


def pointwise_error(f: Classifier, d: StochasticSituation) -> np.ndarray:
    """P(f(x) != Y | X=x) for every instance."""
    p = d.conditionals
    return np.where(f.table == 1, 1.0 - p, p)


def iid_risk(f: Classifier, d: StochasticSituation) -> float:
    """Probability under ``d`` that ``f`` mislabels a fresh example."""
    _check_same_dim(f, d)
    return min(1.0, math.fsum(d.marginal * pointwise_error(f, d)))


def ots_risk(f: Classifier, d: StochasticSituation, s: Sample, mode: OTSMode = OTSMode.PAIR) -> float | None:
    """Misclassification probability conditional on the test example not
    appearing in ``s``. Returns None if that event has probability zero."""
    _check_same_dim(f, d)
    if s.m != d.m:
        raise ValueError("sample and situation differ in m")
    if s.n == 0:
        return iid_risk(f, d)
    joint = d.pair_probabilities()
    keep = np.ones_like(joint, dtype=bool)
    if mode is OTSMode.PAIR:
        keep[s.xs, s.ys] = False
    else:
        keep[s.xs, :] = False
    kept = joint[keep]
    denom = math.fsum(kept)
    if denom <= 0.0:
        return None
    wrong = np.zeros_like(joint, dtype=bool)
    wrong[np.arange(joint.shape[0]), 1 - f.table] = True
    numer = math.fsum(joint[keep & wrong])
    return min(1.0, numer / denom)


def empirical_risk(f: Classifier, s: Sample) -> Fraction:
    """Exact fraction of sample points that ``f`` mislabels."""
    if s.n == 0:
        raise ValueError("empirical risk of an empty sample is undefined")
    if f.m != s.m:
        raise ValueError("classifier and sample differ in m")
    errors = int(np.count_nonzero(f.table[s.xs] != s.ys))
    return Fraction(errors, s.n)


def generalization_error_nonstochastic(f: Classifier, truth: Classifier, seen: Iterable[int]) -> Fraction:
    """Fraction of unseen instances on which ``f`` disagrees with ``truth``."""
    if f.m != truth.m:
        raise ValueError("classifiers differ in m")
    seen = set(seen)
    unseen = [x for x in range(num_instances(f.m)) if x not in seen]
    if not unseen:
        raise ValueError("seen set covers the whole domain")
    wrong = sum(1 for x in unseen if f.table[x] != truth.table[x])
    return Fraction(wrong, len(unseen))


def risk_report(f: Classifier, d: StochasticSituation, s: Sample, mode: OTSMode = OTSMode.PAIR) -> RiskReport:
    return RiskReport(iid_risk(f, d), ots_risk(f, d, s, mode), empirical_risk(f, s) if s.n else None)
