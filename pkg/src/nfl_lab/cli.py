"""Command-line experiment runner.

Every subcommand writes ``report.csv``, ``summary.txt`` and ``plot.svg`` into
``--out``. The exit status is 1 if any invariant check fails or any bound
certificate is VIOLATED, 0 otherwise. Identical configuration and seed give
byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from collections import Counter
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bounds as bnd
from . import enumeration as enum_
from . import prior_lab
from .config import ConfigError, build_classes, build_learners, build_situation, load_config
from .core import Classifier, LABEL_NAMES, all_classifiers, instance_bits, instance_index, num_instances
from .learners import knn_learner, m_fold_cv
from .sampling import draw_sample, trial_rng, trial_seed
from .svg import Chart, Series, bar_chart

FIGURE2_SEEN = ["000", "001", "010", "100", "011", "101"]
FIGURE2_FHAT = "00000001"
CONSERVATION_TOL = 1e-9


class RunResult:
    """Collected outputs of one subcommand run."""

    def __init__(self):
        self.report_rows: list[Sequence[Any]] = []
        self.header: Sequence[str] = ()
        self.summary: list[str] = []
        self.svg = ""
        self.extra: dict[str, str] = {}
        self.ok = True

    def check(self, condition: bool, message: str) -> None:
        self.summary.append(f"[{'PASS' if condition else 'FAIL'}] {message}")
        self.ok = self.ok and bool(condition)

    def write(self, out: Path) -> None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(_csv(self.header, self.report_rows))
        verdict = "ALL CHECKS PASSED" if self.ok else "SOME CHECKS FAILED"
        (out / "summary.txt").write_text("\n".join(self.summary + [verdict]) + "\n")
        (out / "plot.svg").write_text(self.svg)
        for name, text in self.extra.items():
            (out / name).write_text(text)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt_profile(profile: Counter) -> str:
    return "{" + ", ".join(f"{lvl}:{profile[lvl]}" for lvl in sorted(profile)) + "}"


def run_predict_tree(T: int) -> RunResult:
    res = RunResult()
    counts = enum_.all_error_profiles(T)  # (predictors, sequences)
    levels = [Fraction(k, T) for k in range(T + 1)]
    res.header = ["predictor", "rule"] + [f"count_err_{k}_{T}" for k in range(T + 1)] + ["mean_error_num", "mean_error_den"]
    H = enum_.num_histories(T)
    reference = None
    universal = True
    mean_half = True
    for r, row in enumerate(counts):
        hist = np.bincount(row, minlength=T + 1).tolist()
        reference = reference or hist
        universal &= hist == reference
        mean = Fraction(int(row.sum()), T * row.size)
        mean_half &= mean == Fraction(1, 2)
        res.report_rows.append([r, format(r, f"0{H}b"), *hist, mean.numerator, mean.denominator])
    res.summary.append(f"horizon T={T}: {len(counts)} predictors, {counts.shape[1]} outcome sequences")
    res.summary.append("common profile: " + ", ".join(f"{lvl}:{c}" for lvl, c in zip(levels, reference)))
    res.check(universal, "every predictor has the same error profile")
    res.check(mean_half, "every predictor has expected error exactly 1/2")
    res.svg = bar_chart(f"Error profile of every predictor, T={T}", "error level", "outcome sequences",
                        [str(lvl) for lvl in levels], [float(c) for c in reference])
    return res


def run_classify_enum(m: int, seen: Sequence[str], labels: Sequence[int], f_hat: str | None) -> RunResult:
    if m > enum_.MAX_SWEEP_DIM:
        raise ConfigError(f"classify-enum sweeps all learner outputs and is limited to m <= {enum_.MAX_SWEEP_DIM}")
    res = RunResult()
    labeling = {instance_index(b): int(y) for b, y in zip(seen, labels)}
    if len(labeling) != len(seen):
        raise ConfigError("seen instances must be distinct")
    truths = enum_.remaining_situations(labeling, m)
    unseen = [x for x in range(num_instances(m)) if x not in labeling]
    fhat = Classifier.from_string(f_hat) if f_hat else Classifier(
        [labeling.get(x, 0) for x in range(num_instances(m))])
    res.header = [f"x{i + 1}" for i in range(m)] + ["part", "f_hat"] + [f"f*_{j + 1}" for j in range(len(truths))]
    for part, xs in (("seen", [instance_index(b) for b in seen]), ("unseen", unseen)):
        for x in xs:
            res.report_rows.append([*instance_bits(x, m), part, LABEL_NAMES[fhat(x)], *(LABEL_NAMES[t(x)] for t in truths)])
    outputs = all_classifiers(m)
    profiles = enum_.nonstochastic_nfl_check(labeling, outputs, m)
    rows = []
    for f, prof in zip(outputs, profiles):
        for num, den, count in enum_.profile_rows(prof):
            rows.append([f.to_string(), num, den, count])
    res.extra["profiles.csv"] = _csv(["learner_output", "error_level_num", "error_level_den", "count"], rows)
    fhat_profile = enum_.nonstochastic_nfl_check(labeling, [fhat], m)[0]
    res.summary.append(f"m={m}, {len(seen)} seen, {len(unseen)} unseen, {len(truths)} remaining situations")
    res.summary.append(f"f_hat profile: {_fmt_profile(fhat_profile)}")
    res.check(len(truths) == 2 ** len(unseen), "remaining situations number 2^(#unseen)")
    res.check(all(p == profiles[0] for p in profiles), f"all {len(outputs)} learner outputs share one generalization-error profile")
    levels = sorted(fhat_profile)
    res.svg = bar_chart("Off-sample error over remaining situations", "error level", "situations",
                        [str(lvl) for lvl in levels], [float(fhat_profile[lvl]) for lvl in levels])
    return res


def default_conservation_config() -> dict[str, Any]:
    return {
        "m": 2,
        "n": 2,
        "classes": {
            "pair": {"members": ["0000", "1111"]},
            "quad": {"members": ["0011", "0101", "1001", "1110"]},
        },
        "learners": [
            {"kind": "erm", "class": "pair"},
            {"kind": "erm", "class": "quad"},
            {"kind": "anti_erm", "class": "pair"},
            {"kind": "anti_erm", "class": "quad"},
            {"kind": "constant", "label": 0},
            {"kind": "constant", "label": 1},
            {"kind": "knn", "k": 1},
            {"kind": "bayes", "candidates": [0.2, 0.7]},
        ],
    }


def run_conservation(cfg: dict, exact: bool, trials: int, seed: int | None) -> RunResult:
    res = RunResult()
    m, n = int(cfg["m"]), int(cfg["n"])
    classes = build_classes(cfg, m, seed)
    learners = build_learners(cfg, classes, m)
    marginal = cfg.get("marginal")
    res.header = ["learner", "expected_ots_risk", "stderr", "trials", "ok"]
    names, values, errs = [], [], []
    for a in learners:
        est = prior_lab.expected_ots_risk_under_uniform_prior(a, marginal, n, m=m, exact=exact, trials=trials,
                                                              seed=seed or 0)
        tol = CONSERVATION_TOL if est.exact else bnd.SIGMA_SLACK * est.stderr
        ok = abs(est.value - 0.5) <= tol
        res.report_rows.append([a.name, repr(est.value), repr(est.stderr), est.trials, int(ok)])
        res.check(ok, f"{a.name}: expected OTS risk {est.value:.12f} vs 1/2 (tolerance {tol:.3g})")
        names.append(a.name)
        values.append(est.value)
        errs.append(bnd.SIGMA_SLACK * est.stderr)
    chart = Chart(f"Expected OTS risk under the uniform prior (m={m}, n={n})", "learner #", "expected OTS risk")
    xs = list(range(len(values)))
    chart.add(Series("1/2", xs, [0.5] * len(xs)))
    chart.add(Series("learners", xs, values, errs, style="points"))
    res.svg = chart.render()
    return res


def default_gap_config() -> dict[str, Any]:
    return {
        "m": 3,
        "n": 4,
        "situation": {"prior_seed": 11},
        "classes": {"pair": {"constants": [0, 1]}, "rand": {"random": 6, "seed": 5}},
        "learners": [
            {"kind": "erm", "class": "rand"},
            {"kind": "anti_erm", "class": "rand"},
            {"kind": "constant", "label": 1},
            {"kind": "knn", "k": 1},
            {"kind": "bayes", "candidates": [0.25, 0.75]},
        ],
        "analytic": [[40, 1000000]],
    }


def run_gap(cfg: dict, exact: bool | None, trials: int, seed: int | None, base_dir: Path | None) -> RunResult:
    res = RunResult()
    m, n = int(cfg["m"]), int(cfg["n"])
    d = build_situation(cfg.get("situation"), m, base_dir)
    classes = build_classes(cfg, m, seed)
    learners = build_learners(cfg, classes, m)
    res.header = ["learner", "m", "n", "gap", "stderr", "bound", "satisfied"]
    for a in learners:
        g = prior_lab.iid_ots_gap(a, m, n, d, trials=trials, seed=seed or 0, exact=exact)
        res.report_rows.append([a.name, m, n, repr(g.gap), repr(g.stderr), repr(g.bound), int(g.satisfied)])
        res.check(g.satisfied, f"{a.name}: |E[OTS - IID]| = {g.gap:.6g} <= n 2^-m = {g.bound:.6g}")
    for am, an in cfg.get("analytic", []):
        b = prior_lab.gap_bound(int(am), int(an))
        res.report_rows.append(["analytic", am, an, "", "", repr(b), ""])
        res.summary.append(f"analytic bound at m={am}, n={an}: {b:.6g}")
    ns = list(range(0, n + 1))
    chart = Chart(f"IID-OTS gap bound n 2^-m (m={m})", "n", "gap")
    chart.add(Series("bound", ns, [prior_lab.gap_bound(m, k) for k in ns]))
    chart.add(Series("learners", [n] * len(learners), [float(r[3]) for r in res.report_rows[: len(learners)]],
                     style="points"))
    res.svg = chart.render()
    return res


def default_bounds_config() -> dict[str, Any]:
    return {
        "m": 2,
        "ns": [1, 2, 3, 4],
        "situation": {"conditionals": [0.9, 0.2, 0.6, 0.35]},
        "classes": {"F": {"members": ["0000", "1001", "1100", "0110"]}},
        "class": "F",
        "certificates": ["erm", "anti_erm"],
    }


def run_bounds(cfg: dict, exact: bool | None, trials: int, seed: int | None, base_dir: Path | None) -> RunResult:
    res = RunResult()
    m = int(cfg["m"])
    d = build_situation(cfg.get("situation"), m, base_dir)
    classes = build_classes(cfg, m, seed)
    learners = build_learners(cfg, classes, m)
    F = classes.get(cfg.get("class", "F"))
    ns = [int(v) for v in cfg.get("ns", [cfg.get("n", 10)])]
    kinds = cfg.get("certificates", ["erm", "anti_erm"])
    if F is None and ("erm" in kinds or "anti_erm" in kinds):
        raise ConfigError("bounds config needs a hypothesis class for erm/anti_erm certificates")
    certs = []
    for n in ns:
        for kind in kinds:
            if kind == "erm":
                c = bnd.certify_erm_bound(d, F, n, trials, seed or 0, exact)
            elif kind == "anti_erm":
                c = bnd.certify_anti_erm_bound(d, F, n, trials, seed or 0, exact)
            elif kind == "fv":
                c = bnd.certify_fv_bound(learners, d, n, trials, seed or 0, exact)
            elif kind == "anti_fv":
                c = bnd.certify_anti_fv_bound(learners, d, n, trials, seed or 0, exact)
            else:
                raise ConfigError(f"unknown certificate kind {kind!r}")
            certs.append(c)
    res.header = list(bnd.BoundCertificate.CSV_HEADER)
    res.report_rows = [c.csv_row() for c in certs]
    for c in certs:
        if c.verdict is bnd.Verdict.INCONCLUSIVE:
            res.summary.append(f"[WARN] {c.name} n={c.n}: INCONCLUSIVE")
        else:
            res.check(c.verdict is bnd.Verdict.SATISFIED,
                      f"{c.name} n={c.n}: lhs {c.lhs_estimate:.6g} (se {c.lhs_stderr:.2g}) vs bound {c.rhs_bound:.6g}")
    chart = Chart("Expected-risk gap vs analytic bound", "n", "gap")
    for kind in kinds:
        sel = [c for c in certs if c.name.startswith(kind if kind != "fv" else "forward")]
        if not sel:
            continue
        chart.add(Series(f"{kind} bound", [c.n for c in sel], [c.rhs_bound for c in sel]))
        chart.add(Series(f"{kind} gap", [c.n for c in sel], [c.lhs_estimate for c in sel],
                         [bnd.SIGMA_SLACK * c.lhs_stderr for c in sel], style="points"))
    res.svg = chart.render()
    return res


def default_paradox_config() -> dict[str, Any]:
    return {"m": 10, "class_size": 4, "epsilon": 0.05}


def run_paradox(cfg: dict, trials: int, seed: int | None) -> RunResult:
    res = RunResult()
    m, size = int(cfg["m"]), int(cfg["class_size"])
    n = int(cfg["n"]) if "n" in cfg else prior_lab.n_for_epsilon(size, float(cfg["epsilon"]))
    params = prior_lab.paradox_params(m, size, n)
    res.extra["params.csv"] = _csv(["quantity", "value"], [
        ["m", m], ["n", n], ["class_size", size],
        ["epsilon", repr(params.epsilon)], ["delta", repr(params.delta)], ["tolerance", repr(params.tolerance)],
    ])
    res.summary.append(f"m={m}, |F|={size}, n={n}: epsilon={params.epsilon:.6g}, delta={params.delta:.6g}")
    res.header = list(prior_lab.ParadoxReport.CSV_HEADER)
    if m > 12 or trials == 0:
        res.summary.append("analytic parameters only (no simulation at this m)")
        res.svg = bar_chart("Paradox parameters", "quantity", "value", ["epsilon", "delta"],
                            [params.epsilon, params.delta])
        return res
    report = prior_lab.verify_paradox_resolution(m, size, n, trials, seed)
    res.report_rows = report.rows
    res.summary.append(f"best-in-class risk: mean {report.mean_min:.6f} (se {report.se_min:.2g})")
    res.summary.append(f"worst-in-class risk: mean {report.mean_max:.6f} (se {report.se_max:.2g})")
    res.check(report.min_satisfied, f"best-in-class mean within epsilon(1+delta)+3se = {params.tolerance:.4g} of 1/2")
    res.check(report.max_satisfied, f"worst-in-class mean within epsilon(1+delta)+3se = {params.tolerance:.4g} of 1/2")
    chart = Chart(f"Best and worst risk in F under the uniform prior (m={m}, |F|={size})", "trial", "IID risk")
    shown = min(trials, 200)
    xs = list(range(shown))
    chart.add(Series("min risk", xs, [float(r[2]) for r in report.rows[:shown]], style="points"))
    chart.add(Series("max risk", xs, [float(r[3]) for r in report.rows[:shown]], style="points"))
    chart.add(Series("1/2 - tol", [0, shown - 1], [0.5 - params.tolerance] * 2))
    chart.add(Series("1/2 + tol", [0, shown - 1], [0.5 + params.tolerance] * 2))
    res.svg = chart.render()
    return res


def majority_of_leading_bits(m: int, bits: int = 3, noise: float = 0.1) -> list[float]:
    """P(Y=1|x): majority vote of the first ``bits`` features, flipped with
    probability ``noise``."""
    out = []
    for x in range(num_instances(m)):
        ones = instance_bits(x, m)[:bits].count("1")
        out.append(1 - noise if 2 * ones > bits else noise)
    return out


def default_cv_config() -> dict[str, Any]:
    return {"m": 8, "n": 200, "ks": [1, 3, 5], "folds": 4,
            "situation": {"conditionals": majority_of_leading_bits(8)}}


def run_cv_demo(cfg: dict, trials: int, seed: int, base_dir: Path | None) -> RunResult:
    res = RunResult()
    m, n = int(cfg["m"]), int(cfg["n"])
    d = build_situation(cfg.get("situation"), m, base_dir)
    ks = [int(k) for k in cfg.get("ks", [1, 3, 5])]
    algos = [knn_learner(k) for k in ks]
    rows, weights = bnd.fv_trials(algos, d, n, trials, seed, exact=False)
    res.header = ["trial", "seed", "fv_index", "fv_k", "fv_risk", "anti_index", "anti_k", "anti_risk"]
    anti_ok = True
    for t, r in enumerate(rows):
        anti_ok &= r.validation_errors[r.anti_selected] == max(r.validation_errors)
        res.report_rows.append([t, trial_seed(seed, t), r.selected, ks[r.selected], repr(r.selected_risk),
                                r.anti_selected, ks[r.anti_selected], repr(r.anti_selected_risk)])
    certs = bnd.fv_certificates(rows, weights, n, exact=False)
    per_k = weights @ np.array([r.risks for r in rows])
    res.summary.append("E[risk of k-NN on first half]: " + ", ".join(f"k={k}: {v:.4f}" for k, v in zip(ks, per_k)))
    for c in certs.values():
        res.summary.append(f"{c.name}: lhs {c.lhs_estimate:.5f} (se {c.lhs_stderr:.2g}), bound {c.rhs_bound:.5f}")
    fv, afv = certs["forward_validation"], certs["anti_forward_validation"]
    res.check(fv.verdict is not bnd.Verdict.VIOLATED, f"forward-validation certificate {fv.verdict.value}")
    res.check(afv.verdict is not bnd.Verdict.VIOLATED, f"anti-forward-validation mirror certificate {afv.verdict.value}")
    res.check(anti_ok, "anti forward validation picks the largest validation error in every trial")
    folds = int(cfg.get("folds", 0))
    if folds:
        shown = min(trials, 50)
        picks = Counter(m_fold_cv(algos, draw_sample(d, n, trial_rng(seed, t)), folds)[1] for t in range(shown))
        res.summary.append(f"{folds}-fold CV selections over {shown} trials: " +
                           ", ".join(f"k={ks[i]}: {picks[i]}" for i in range(len(ks))))
    chart = Chart(f"k-NN with forward validation (m={m}, n={n})", "k", "expected IID risk")
    chart.add(Series("E[risk] of k-NN(S1)", ks, list(map(float, per_k)), style="points"))
    fv_mean = float(weights @ np.array([r.selected_risk for r in rows]))
    anti_mean = float(weights @ np.array([r.anti_selected_risk for r in rows]))
    chart.add(Series("forward validation", [min(ks), max(ks)], [fv_mean, fv_mean]))
    chart.add(Series("anti forward validation", [min(ks), max(ks)], [anti_mean, anti_mean]))
    res.svg = chart.render()
    return res


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nfl-lab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, trials_default):
        sp.add_argument("--config", type=Path, help="TOML config file (defaults are used when omitted)")
        sp.add_argument("--seed", type=int, help="master seed; required whenever Monte Carlo is used")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
        sp.add_argument("--trials", type=int, default=trials_default, help=f"Monte-Carlo trials (default: {trials_default})")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--exact", dest="exact", action="store_const", const=True, help="force exact enumeration")
        g.add_argument("--mc", dest="exact", action="store_const", const=False, help="force Monte Carlo")

    sp = sub.add_parser("predict-tree", help="prediction NFL over all predictors of horizon T (default T=3)")
    common(sp, 0)
    sp.add_argument("--T", type=int, default=None, help="horizon, at most 4 (default 3)")
    sp = sub.add_parser("classify-enum", help="non-stochastic classification NFL (default: the 3-bit, six-seen table)")
    common(sp, 0)
    sp = sub.add_parser("conservation", help="expected OTS risk under the uniform prior for a learner sweep (default m=2, n=2)")
    common(sp, 10000)
    sp = sub.add_parser("gap", help="IID-OTS gap against n 2^-m (default m=3, n=4, five learners)")
    common(sp, 10000)
    sp = sub.add_parser("bounds", help="ERM / anti-ERM / forward-validation bound certificates")
    common(sp, 2000)
    sp = sub.add_parser("paradox", help="(epsilon, delta) analysis (default m=10, |F|=4, epsilon=0.05)")
    common(sp, 10000)
    sp = sub.add_parser("cv-demo", help="k-NN selection by forward validation (default m=8, n=200, k in 1,3,5)")
    common(sp, 1000)
    return p


def _require_seed(args, needed: bool) -> int | None:
    if needed and args.seed is None:
        raise ConfigError(f"{args.command} uses Monte Carlo here; pass --seed")
    return args.seed


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        base_dir = args.config.parent if args.config else None
        cmd = args.command
        if cmd == "predict-tree":
            T = args.T if args.T is not None else int(cfg.get("T", 3))
            res = run_predict_tree(T)
        elif cmd == "classify-enum":
            m = int(cfg.get("m", 3))
            seen = cfg.get("seen", FIGURE2_SEEN)
            labels = cfg.get("labels", [0] * len(seen))
            res = run_classify_enum(m, seen, labels, cfg.get("f_hat", FIGURE2_FHAT if not cfg else None))
        elif cmd == "conservation":
            cfg = cfg or default_conservation_config()
            exact = args.exact is not False
            res = run_conservation(cfg, exact, args.trials, _require_seed(args, not exact))
        elif cmd == "gap":
            cfg = cfg or default_gap_config()
            m, n = int(cfg["m"]), int(cfg["n"])
            mc = args.exact is False or (args.exact is None and not (m <= prior_lab.EXACT_MAX_DIM and n <= prior_lab.EXACT_MAX_N))
            res = run_gap(cfg, args.exact, args.trials, _require_seed(args, mc), base_dir)
        elif cmd == "bounds":
            cfg = cfg or default_bounds_config()
            m = int(cfg["m"])
            ns = [int(v) for v in cfg.get("ns", [cfg.get("n", 10)])]
            mc = args.exact is False or (args.exact is None and not (m <= bnd.EXACT_MAX_DIM and max(ns) <= bnd.EXACT_MAX_N))
            res = run_bounds(cfg, args.exact, args.trials, _require_seed(args, mc), base_dir)
        elif cmd == "paradox":
            cfg = cfg or default_paradox_config()
            simulate = int(cfg["m"]) <= 12 and args.trials > 0
            res = run_paradox(cfg, args.trials, _require_seed(args, simulate))
        else:
            cfg = cfg or default_cv_config()
            res = run_cv_demo(cfg, args.trials, _require_seed(args, True), base_dir)
    except (ConfigError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    res.write(args.out)
    print("\n".join(res.summary))
    return 0 if res.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
