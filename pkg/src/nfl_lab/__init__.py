"""Finite-domain verification laboratory for the no-free-lunch theorems of
supervised learning and the learning-theoretic bounds that coexist with them."""

from .core import (
    Classifier,
    HypothesisClass,
    OTSMode,
    RiskReport,
    Sample,
    StochasticSituation,
    empirical_risk,
    generalization_error_nonstochastic,
    iid_risk,
    ots_risk,
)
from .learners import BayesModel, Learner, LearnerKind

__version__ = "0.1.0"

__all__ = [
    "BayesModel",
    "Classifier",
    "HypothesisClass",
    "Learner",
    "LearnerKind",
    "OTSMode",
    "RiskReport",
    "Sample",
    "StochasticSituation",
    "empirical_risk",
    "generalization_error_nonstochastic",
    "iid_risk",
    "ots_risk",
]
