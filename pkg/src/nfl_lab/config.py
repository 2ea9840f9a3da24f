"""Declarative experiment configuration (TOML) and builders for the objects it
describes: hypothesis classes, learners and situations.

Example::

    m = 2
    n = 2

    [classes.pair]
    members = ["0000", "1111"]

    [classes.random4]
    random = 4          # size; drawn with the run seed

    [[learners]]
    kind = "erm"
    class = "pair"

    [[learners]]
    kind = "forward_validation"
    learners = [{ kind = "knn", k = 1 }, { kind = "knn", k = 3 }]

    [situation]
    conditionals = [0.9, 0.1, 0.5, 0.7]   # or: prior_seed = 7, or: csv = "d.csv"
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import Classifier, HypothesisClass, StochasticSituation, all_classifiers, num_instances
from .learners import BayesModel, Learner, LearnerKind, MajorityLearner
from .prior_lab import UniformConditionalPrior, random_class_tables


class ConfigError(ValueError):
    pass


def load_config(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def build_class(spec: Mapping[str, Any], m: int, seed: int | None) -> HypothesisClass:
    if "members" in spec:
        return HypothesisClass(Classifier.from_string(s) for s in spec["members"])
    if spec.get("all"):
        return HypothesisClass(all_classifiers(m))
    if "constants" in spec:
        return HypothesisClass(Classifier.constant(int(v), m) for v in spec["constants"])
    if "random" in spec:
        rng = np.random.default_rng(spec.get("seed", seed))
        return HypothesisClass(Classifier(row) for row in random_class_tables(m, int(spec["random"]), rng))
    raise ConfigError(f"class spec needs members, all, constants or random: {dict(spec)}")


def build_classes(cfg: Mapping[str, Any], m: int, seed: int | None) -> dict[str, HypothesisClass]:
    return {name: build_class(spec, m, seed) for name, spec in sorted(cfg.get("classes", {}).items())}


def build_learner(spec: Mapping[str, Any], classes: Mapping[str, HypothesisClass], m: int):
    kind = spec.get("kind")
    name = spec.get("name", "")
    if kind == "majority":
        return MajorityLearner()
    try:
        lk = LearnerKind(kind)
    except ValueError:
        raise ConfigError(f"unknown learner kind {kind!r}") from None
    if lk in (LearnerKind.ERM, LearnerKind.ANTI_ERM):
        cname = spec.get("class")
        if cname not in classes:
            raise ConfigError(f"learner refers to undefined class {cname!r}")
        return Learner(lk, classes[cname], name or f"{lk.value}[{cname}]")
    if lk is LearnerKind.CONSTANT:
        return Learner(lk, int(spec["label"]), name)
    if lk is LearnerKind.KNN:
        return Learner(lk, int(spec["k"]), name)
    if lk is LearnerKind.BAYES:
        cands = [_expand(c, m) for c in spec["candidates"]]
        return Learner(lk, BayesModel(cands, spec.get("prior")), name)
    inner = [build_learner(s, classes, m) for s in spec.get("learners", [])]
    return Learner(lk, tuple(inner), name, folds=int(spec.get("folds", 2)))


def _expand(values, m: int) -> list[float]:
    """A scalar means the same value at every instance."""
    if isinstance(values, (int, float)):
        return [float(values)] * num_instances(m)
    return [float(v) for v in values]


def build_learners(cfg: Mapping[str, Any], classes: Mapping[str, HypothesisClass], m: int) -> list:
    return [build_learner(spec, classes, m) for spec in cfg.get("learners", [])]


def build_situation(spec: Mapping[str, Any] | None, m: int, base_dir: Path | None = None) -> StochasticSituation:
    spec = spec or {}
    if "csv" in spec:
        path = Path(spec["csv"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        d = StochasticSituation.from_csv(path.read_text())
        if d.m != m:
            raise ConfigError(f"situation file has m={d.m}, config has m={m}")
        return d
    size = num_instances(m)
    marginal = _expand(spec["marginal"], m) if "marginal" in spec else [1.0 / size] * size
    if "conditionals" in spec:
        cond = _expand(spec["conditionals"], m)
    elif "truth" in spec:
        cond = [float(c) for c in spec["truth"]]
    else:
        rng = np.random.default_rng(int(spec.get("prior_seed", 0)))
        cond = UniformConditionalPrior(m).sample_conditionals(rng)
    return StochasticSituation(marginal, cond)
