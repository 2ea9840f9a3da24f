import numpy as np
import pytest
from hypothesis import settings

from nfl_lab.core import Classifier, HypothesisClass, StochasticSituation, instance_index

# The three-bit example: six instances seen, every one labelled N (0).
SIX_SEEN = ["000", "001", "010", "100", "011", "101"]
SIX_SEEN_LABELING = {instance_index(b): 0 for b in SIX_SEEN}

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_situation(rng, m, deterministic=False):
    size = 2**m
    marginal = rng.dirichlet(np.ones(size))
    cond = rng.integers(0, 2, size).astype(float) if deterministic else rng.random(size)
    return StochasticSituation(marginal, cond)


def random_class(rng, m, size):
    idx = rng.choice(2 ** (2**m), size=size, replace=False)
    return HypothesisClass(Classifier.from_index(int(i), m) for i in idx)
