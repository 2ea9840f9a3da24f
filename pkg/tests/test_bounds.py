import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize, stats

from conftest import random_class, random_situation
from nfl_lab.bounds import (
    BoundCertificate,
    Verdict,
    certify_anti_erm_bound,
    certify_anti_fv_bound,
    certify_erm_bound,
    certify_fv_bound,
    erm_bound,
    eta_objective,
    exact_expected_risk,
    fv_bound,
    fv_certificates,
    fv_trials,
    mc_expected_risk,
    optimal_eta,
)
from nfl_lab.core import Classifier, HypothesisClass, OTSMode, Sample, StochasticSituation, iid_risk, ots_risk
from nfl_lab.learners import (
    MajorityLearner,
    anti_erm_learner,
    constant_learner,
    erm_learner,
    forward_validation_learner,
    knn_learner,
)
from nfl_lab.sampling import enumerate_samples, trial_seed

C = Classifier.from_string
CONSTANTS_1 = HypothesisClass([C("00"), C("11")])


def brute_expected(a, d, n, mode=OTSMode.PAIR):
    """Oracle: loop over every ordered (x, y) sequence with its probability."""
    iid = ots = ots_mass = 0.0
    for pairs in itertools.product(range(2**d.m), (0, 1), repeat=n):
        seq = list(zip(pairs[::2], pairs[1::2]))
        w = 1.0
        for x, y in seq:
            w *= d.marginal[x] * (d.conditionals[x] if y else 1 - d.conditionals[x])
        if w == 0:
            continue
        s = Sample(seq, d.m)
        f = a(s)
        iid += w * iid_risk(f, d)
        o = ots_risk(f, d, s, mode)
        if o is not None:
            ots += w * o
            ots_mass += w
    return iid, (ots / ots_mass if ots_mass else None)


def erm_pair_risks(n, p=0.9):
    """Exact expected risks of ERM and anti-ERM over {constant-0, constant-1}
    when every label is 1 with probability p. K ~ Bin(n, p) counts ones.
    ERM keeps constant-0 on ties (first member); so does anti-ERM."""
    k = np.arange(n + 1)
    pmf = stats.binom.pmf(k, n, p)
    r0, r1 = p, 1 - p  # risks of constant-0 and constant-1
    erm_r = float(np.sum(pmf * np.where(2 * k > n, r1, r0)))
    anti_r = float(np.sum(pmf * np.where(2 * k >= n, r0, r1)))
    return erm_r, anti_r


# --- analytic bounds -------------------------------------------------------------

def test_erm_bound_examples():
    assert erm_bound(1, 10) == 0
    assert erm_bound(2, 200) == pytest.approx(0.04163, abs=1e-5)
    assert erm_bound(1024, 50) == pytest.approx(math.sqrt(math.log(1024) / 100), rel=1e-15)
    assert erm_bound(1024, 50) == pytest.approx(0.2633, abs=1e-4)


def test_fv_bound_examples():
    assert fv_bound(1, 10) == 0
    assert fv_bound(4, 100) == pytest.approx(0.1177, abs=1e-4)
    assert fv_bound(2**20, 10**4) == pytest.approx(0.0372, abs=1e-4)


def test_optimal_eta_examples():
    eta = optimal_eta(2, 200)
    assert eta == pytest.approx(math.sqrt(8 * math.log(2) / 200), rel=1e-15)
    assert eta == pytest.approx(0.1665, abs=1e-4)
    assert eta_objective(eta, 2, 200) == pytest.approx(erm_bound(2, 200), abs=1e-15)
    for other in (eta * 1.1, eta / 1.1):
        assert eta_objective(other, 2, 200) > eta_objective(eta, 2, 200)
    e2 = math.exp(2)
    assert optimal_eta(e2, 8) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert eta_objective(math.sqrt(2), e2, 8) == pytest.approx(0.3536, abs=1e-4)


def test_optimal_eta_rejects_degenerate_class():
    with pytest.raises(ValueError):
        optimal_eta(1, 10)


@pytest.mark.parametrize("size, n", [(2, 10), (16, 200), (1000, 37), (2**20, 10**5)])
def test_optimal_eta_matches_numerical_minimiser(size, n):
    res = optimize.minimize_scalar(lambda e: eta_objective(e, size, n), bounds=(1e-6, 100), method="bounded",
                                   options={"xatol": 1e-12})
    assert res.x == pytest.approx(optimal_eta(size, n), rel=1e-5)
    assert res.fun == pytest.approx(erm_bound(size, n), rel=1e-9)


@given(st.floats(2, 1e9), st.integers(1, 10**7))
def test_eta_identity(size, n):
    assert abs(eta_objective(optimal_eta(size, n), size, n) - erm_bound(size, n)) <= 1e-12


@given(st.integers(2, 10**6), st.integers(1, 10**6))
def test_bounds_monotone(size, n):
    assert erm_bound(size, n + 1) < erm_bound(size, n)
    assert erm_bound(size + 1, n) > erm_bound(size, n)
    assert fv_bound(size, n + 1) < fv_bound(size, n)
    assert fv_bound(size + 1, n) > fv_bound(size, n)


# --- certificate verdicts ----------------------------------------------------------

@pytest.mark.parametrize("lhs, se, rhs, verdict", [
    (0.1, 0.0, 0.1, Verdict.SATISFIED),
    (0.13, 0.01, 0.1, Verdict.SATISFIED),
    (0.131, 0.01, 0.1, Verdict.VIOLATED),
    (0.2, 0.0, 0.1, Verdict.VIOLATED),
    (0.2, 0.05, 0.1, Verdict.SATISFIED),
    (0.2, 0.03, 0.1, Verdict.VIOLATED),
    (float("nan"), 0.01, 0.1, Verdict.INCONCLUSIVE),
])
def test_verdict_rules(lhs, se, rhs, verdict):
    assert BoundCertificate("x", 1, lhs, se, rhs, 10).verdict is verdict


@given(st.floats(-1, 2), st.floats(0, 1), st.floats(0, 2))
def test_verdict_matches_three_sigma_definition(lhs, se, rhs):
    v = BoundCertificate("x", 1, lhs, se, rhs, 10).verdict
    assert (v is Verdict.SATISFIED) == (lhs <= rhs + 3 * se)
    if v is Verdict.VIOLATED:
        assert lhs - 3 * se > rhs


def test_certificate_csv_row():
    c = BoundCertificate("erm", 3, 0.25, 0.0, 0.5, 0)
    assert c.csv_row() == ("erm", 3, "0.25", "0.0", "0.5", 0, "SATISFIED")
    assert c.exact and len(c.csv_row()) == len(BoundCertificate.CSV_HEADER)


# --- exact oracle ----------------------------------------------------------------------

def test_enumeration_weights_sum_to_one(rng):
    d = random_situation(rng, 2)
    for ordered in (True, False):
        assert math.fsum(w for _, w in enumerate_samples(d, 3, ordered)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("trial", range(6))
def test_exact_oracle_matches_brute_loop(trial):
    rng = np.random.default_rng(100 + trial)
    m = 1 + trial % 2
    d = random_situation(rng, m, deterministic=trial == 5)
    F = random_class(rng, m, 3)
    n = 1 + trial % 3
    for a in (erm_learner(F), anti_erm_learner(F), knn_learner(1), MajorityLearner(), constant_learner(1),
              forward_validation_learner([constant_learner(0), knn_learner(1)]) if n > 1 else constant_learner(0)):
        for mode in OTSMode:
            r = exact_expected_risk(a, d, n, mode)
            iid, ots = brute_expected(a, d, n, mode)
            assert r.iid == pytest.approx(iid, abs=1e-12)
            if ots is None:
                assert r.ots is None
            else:
                assert r.ots == pytest.approx(ots, abs=1e-12)


def test_constant_learner_risk_independent_of_n():
    d = StochasticSituation.uniform([0.9, 0.2, 0.4, 0.7])
    want = iid_risk(Classifier.constant(1, 2), d)
    for n in range(1, 5):
        assert exact_expected_risk(constant_learner(1), d, n).iid == pytest.approx(want, abs=1e-12)


def test_realizable_erm_risk_shrinks_with_n():
    truth = C("0110")
    F = HypothesisClass([C("0000"), truth, C("1111"), C("1001")])
    d = StochasticSituation.deterministic(truth)
    risks = [exact_expected_risk(erm_learner(F), d, n).iid for n in range(1, 6)]
    assert all(b <= a for a, b in zip(risks, risks[1:]))
    assert risks[-1] < risks[0]


def test_erm_three_point_binomial_example():
    d = StochasticSituation.uniform([0.9, 0.9])
    r = exact_expected_risk(erm_learner(CONSTANTS_1), d, 3)
    want, _ = erm_pair_risks(3)
    assert r.iid == pytest.approx(want, abs=1e-12)
    assert r.iid == pytest.approx(0.1 * 0.972 + 0.9 * 0.028, abs=1e-12)
    assert r.iid - 0.1 <= erm_bound(2, 3)
    assert erm_bound(2, 3) == pytest.approx(0.3399, abs=1e-4)


def test_exact_guard_refuses_large_enumeration(monkeypatch):
    d = StochasticSituation.uniform([0.5] * 4)
    monkeypatch.setenv("NFL_LAB_MAX_ENUM", "100")
    with pytest.raises(ValueError, match="NFL_LAB_MAX_ENUM"):
        exact_expected_risk(knn_learner(1), d, 3)
    monkeypatch.setenv("NFL_LAB_MAX_ENUM", "10000")
    assert exact_expected_risk(knn_learner(1), d, 3).iid >= 0


# --- Monte Carlo ------------------------------------------------------------------------

def test_trial_seeds_depend_only_on_master_and_index():
    assert trial_seed(5, 3) == trial_seed(5, 3)
    assert len({trial_seed(5, t) for t in range(1000)}) == 1000
    assert trial_seed(5, 3) != trial_seed(6, 3)


def test_mc_estimates_are_prefix_stable():
    d = StochasticSituation.uniform([0.9, 0.2, 0.4, 0.7])
    a = knn_learner(1)
    short = mc_expected_risk(a, d, 3, 200, seed=4)
    again = mc_expected_risk(a, d, 3, 200, seed=4)
    assert short == again


@pytest.mark.parametrize("trial", range(4))
def test_mc_agrees_with_oracle(trial):
    rng = np.random.default_rng(200 + trial)
    d = random_situation(rng, 2)
    a = [erm_learner(random_class(rng, 2, 4)), knn_learner(1), anti_erm_learner(random_class(rng, 2, 3)),
         MajorityLearner()][trial]
    exact = exact_expected_risk(a, d, 3).iid
    mc = mc_expected_risk(a, d, 3, 10_000, seed=trial)
    assert abs(mc.iid - exact) <= 4 * mc.iid_stderr


# --- ERM / anti-ERM certificates ---------------------------------------------------------

def test_singleton_class_certificates_are_zero():
    d = StochasticSituation.uniform([0.9, 0.2, 0.4, 0.7])
    F = HypothesisClass([C("1010")])
    for cert in (certify_erm_bound(d, F, 3), certify_anti_erm_bound(d, F, 3)):
        assert cert.lhs_estimate == pytest.approx(0, abs=1e-15) and cert.rhs_bound == 0
        assert cert.verdict is Verdict.SATISFIED


def test_exact_certificates_small_sweep(rng):
    for _ in range(20):
        m = int(rng.integers(1, 3))
        d = random_situation(rng, m)
        F = random_class(rng, m, int(rng.integers(1, 5)))
        n = int(rng.integers(1, 5))
        for cert in (certify_erm_bound(d, F, n), certify_anti_erm_bound(d, F, n)):
            assert cert.exact and cert.lhs_stderr == 0
            assert cert.verdict is Verdict.SATISFIED


def test_mc_erm_certificate_m6():
    rng = np.random.default_rng(6)
    d = random_situation(rng, 6)
    F = HypothesisClass(Classifier(row) for row in rng.integers(0, 2, size=(32, 64)))
    cert = certify_erm_bound(d, F, 100, trials=500, seed=1)
    assert cert.trials == 500 and cert.verdict is Verdict.SATISFIED


@pytest.mark.parametrize("n", [50, 100, 200, 500])
def test_separation_binomial_oracle(n):
    erm_r, anti_r = erm_pair_risks(n)
    assert anti_r - erm_r >= 0.8 - 2 * erm_bound(2, n)
    assert erm_r <= 0.1 + erm_bound(2, n)
    assert anti_r >= 0.9 - erm_bound(2, n)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_package_oracle_matches_binomial_for_pair_class(n):
    d = StochasticSituation.uniform([0.9, 0.9])
    erm_r, anti_r = erm_pair_risks(n)
    assert exact_expected_risk(erm_learner(CONSTANTS_1), d, n).iid == pytest.approx(erm_r, abs=1e-12)
    assert exact_expected_risk(anti_erm_learner(CONSTANTS_1), d, n).iid == pytest.approx(anti_r, abs=1e-12)


# --- forward validation -------------------------------------------------------------------

def test_fv_single_algorithm_lhs_zero():
    d = StochasticSituation.uniform([0.8, 0.3])
    cert = certify_fv_bound([knn_learner(1)], d, 4)
    assert cert.lhs_estimate == pytest.approx(0, abs=1e-15) and cert.verdict is Verdict.SATISFIED


def test_fv_exact_two_constants():
    d = StochasticSituation.uniform([0.7, 0.4])
    algos = [constant_learner(0), constant_learner(1)]
    cert = certify_fv_bound(algos, d, 4)
    assert cert.exact and cert.verdict is Verdict.SATISFIED
    # Oracle: validation on the last two points picks constant-1 iff it has
    # strictly more ones than zeros there; P(Y=1) = 0.55 at every draw.
    q = 0.55
    p_pick1 = q * q
    fv_risk = p_pick1 * (1 - q) + (1 - p_pick1) * q
    assert cert.lhs_estimate == pytest.approx(fv_risk - (1 - q), abs=1e-12)
    anti = certify_anti_fv_bound(algos, d, 4)
    assert anti.exact and anti.verdict is Verdict.SATISFIED


def test_fv_rejects_n_one():
    d = StochasticSituation.uniform([0.7, 0.4])
    with pytest.raises(ValueError):
        certify_fv_bound([constant_learner(0)], d, 1)


def test_fv_records_select_extremes(rng):
    d = random_situation(rng, 3)
    algos = [knn_learner(1), knn_learner(3), constant_learner(1)]
    rows, weights = fv_trials(algos, d, 12, trials=100, seed=3, exact=False)
    assert weights.sum() == pytest.approx(1.0)
    for r in rows:
        assert r.validation_errors[r.selected] == min(r.validation_errors)
        assert r.validation_errors[r.anti_selected] == max(r.validation_errors)
    certs = fv_certificates(rows, weights, 12, exact=False)
    assert set(certs) == {"forward_validation", "anti_forward_validation", "anti_fv_excess"}
