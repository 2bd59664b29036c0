"""Acceptance gate A1-A11.

Each criterion is a function returning ``(passed, detail)``; the pytest
wrappers print one ``A<k> PASS|FAIL  <detail>`` line per criterion (visible
with ``pytest -v``; also ``python tests/test_acceptance.py``).

A11 needs a real clinical cohort and only runs when ``ICFRANK_COHORT_MANIFEST``
points at a manifest; see README.
"""

import filecmp
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

sys.path.insert(0, str(Path(__file__).parent))

from icfrank.analyze import v_sweep
from icfrank.cli import main as cli_main
from icfrank.config import RunConfig
from icfrank.decompose import build_mask, decompose
from icfrank.featurize import outlier_stats, parse_feature_name
from icfrank.pipeline import decompose_cohort, featurize_cohort
from icfrank.select import Scaler, stability_rank, svm_rfe, train_linear_svm
from icfrank.synth import FULL_LENGTH, gen_cohort

from oracles import random_svm_instance, truncated_normal_upper_mean


def a1_reconstruction():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        x = 0.8 + 0.05 * rng.standard_normal(10_000) + 0.02 * np.cumsum(rng.standard_normal(10_000)) / 100
        d = decompose(x, window=50, num_modes=2)
        worst = max(worst, np.abs(d.reconstruct() - x).max() / np.abs(x).max())
    dt = time.perf_counter() - t0
    return worst <= 1e-9 and dt < 30, f"max rel err {worst:.2e} (<=1e-9), {dt:.1f}s (<30s)"


def a2_constant():
    worst_mode, worst_res = 0.0, 0.0
    for c in (0.8, 1.0, 3.7):
        x = np.full(5000, c)
        d = decompose(x, window=50, num_modes=2)
        worst_mode = max(worst_mode, max(np.abs(f).max() for f in d.modes))
        worst_res = max(worst_res, np.abs(d.residual - x).max() / c)
    ok = worst_mode <= 1e-12 and worst_res <= 1e-14
    return ok, f"max |F_i| {worst_mode:.1e} (<=1e-12), R-X rel {worst_res:.1e}"


def a3_mask():
    omega = np.linspace(0, np.pi, 4001)
    details = []
    ok = True
    for N in (1, 2, 10, 50, 100):
        a = build_mask(N).coefficients
        s = abs(a.sum() - 1)
        sym = np.array_equal(a, a[::-1])
        nonneg = bool(np.all(a >= 0))
        resp = build_mask(N).response(omega).min()
        ok &= s <= 1e-12 and sym and nonneg and resp >= -1e-12
        details.append(f"N={N}:|sum-1|={s:.0e},min A={resp:.1e}")
    return ok, "; ".join(details)


def a4_two_tone():
    t = np.arange(10_000)
    fast = np.sin(2 * np.pi * t / 10)
    slow = np.sin(2 * np.pi * t / 500)
    d = decompose(fast + slow, window=50, num_modes=2)
    c1 = np.corrcoef(d.modes[0], fast)[0, 1]
    c2 = np.corrcoef(d.modes[1] + d.residual, slow)[0, 1]
    return c1 > 0.95 and c2 > 0.95, f"corr(F1,fast)={c1:.4f}, corr(F2+R,slow)={c2:.4f} (>0.95)"


def a5_gaussian_tail():
    t0 = time.perf_counter()
    x = np.random.default_rng(5).standard_normal(1_000_000)
    st = outlier_stats(x)
    frac = np.mean(x > x.mean() + 2 * x.std())
    dt = time.perf_counter() - t0
    ref = truncated_normal_upper_mean(2.0)
    ok = abs(frac - 0.0228) <= 0.0015 and abs(st.m_p2 - 2.373) <= 0.01 and dt < 10
    return ok, f"fraction {frac:.5f} (0.0228+-0.0015), m_p2 {st.m_p2:.4f} (closed form {ref:.4f}), {dt:.2f}s"


def a6_svm_oracle():
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(50):
        X, y, C, w, b = random_svm_instance(rng)
        m = train_linear_svm(X, y, C=C)
        nw, nm = np.linalg.norm(w), np.linalg.norm(m.weights)
        err = max(np.abs(m.weights / nm - w / nw).max(), abs(m.bias / nm - b / nw))
        worst = max(worst, err)
    return worst <= 1e-3, f"max deviation {worst:.2e} over 50 instances (<=1e-3)"


def a7_rfe_recovery():
    t0 = time.perf_counter()
    hits = 0
    for run in range(100):
        rng = np.random.default_rng(7000 + run)
        y = np.where(np.arange(100) < 50, 1.0, -1.0)
        rng.shuffle(y)
        X = rng.standard_normal((100, 51))
        planted = run % 51
        X[:, planted] = y
        Z = Scaler.fit(X).transform(X)
        order = svm_rfe(Z, y, C=1.0, seed=run)
        hits += order[-1] == planted
    dt = time.perf_counter() - t0
    return hits >= 95 and dt < 120, f"planted survivor in {hits}/100 runs (>=95), {dt:.1f}s (<120s)"


def _synthetic_cohort():
    t0 = time.perf_counter()
    cohort = gen_cohort(72, 43, seed=2024, length=FULL_LENGTH)
    config = RunConfig()
    decomps = decompose_cohort(cohort, config)
    return cohort, decomps, config, time.perf_counter() - t0


def _is_upper_tail_f12(name):
    f = parse_feature_name(name)
    return f.threshold == 2 and f.component in (1, 2)


def a8_end_to_end(state):
    t0 = time.perf_counter()
    cohort, decomps, config, t_decompose = state
    matrix = featurize_cohort(cohort, config, decomps)
    result = stability_rank(matrix, splits=100, train_counts=(50, 30), seed=8)
    hit = np.mean([any(_is_upper_tail_f12(matrix.names[k]) for k in s) for s in result.top_sets])
    dt = time.perf_counter() - t0 + t_decompose
    ok = result.mean_accuracy >= 0.9 and hit >= 0.8 and dt < 600
    return ok, (f"mean accuracy {result.mean_accuracy:.4f} (>=0.90), +2 F1/F2 feature in top-10 "
                f"of {hit:.0%} of repeats (>=80%), {dt:.0f}s end to end (<600s)")


def a9_v_sweep(state):
    cohort, decomps, config, _ = state
    curve = v_sweep(decomps, cohort.labels, 1, K=config.subseries)
    r = curve.r_values
    # r is computed with CHF = 1; the upper-tail std is larger in healthy
    # subjects so r < 0 throughout. The trend is about correlation strength,
    # i.e. r with the healthy class as the positive label (= -r = |r| here).
    same_sign = bool(np.all(r < 0) or np.all(r > 0))
    rho = spearmanr(curve.x_values, np.abs(r))[0]
    return same_sign and rho >= 0.9, (f"Spearman(v,|r|)={rho:.3f} (>=0.9), r from {r[0]:+.3f} "
                                      f"at v=0 to {r[-1]:+.3f} at v=2, one sign: {same_sign}")


def a10_determinism(tmp):
    fast = ["--window", "5", "--max-iter", "40", "--subseries", "10", "--seed", "13"]
    runs = []
    for k in range(2):
        out = Path(tmp) / f"run{k}"
        steps = [
            ["synth", "--healthy", "8", "--chf", "6", "--length", "2000", "--out", str(out / "cohort")],
            ["decompose", str(out / "cohort/manifest.csv"), "--out", str(out / "dec")],
            ["featurize", str(out / "cohort/manifest.csv"), "--out", str(out / "features.csv"),
             "--emit-config"],
            ["rank", str(out / "features.csv"), "--out", str(out / "rank"), "--splits", "5",
             "--train-healthy", "5", "--train-chf", "4"],
            ["correlate", str(out / "cohort/manifest.csv"), "--out", str(out / "corr"),
             "--v-points", "5"],
            ["classify", str(out / "rank/model.txt"), str(out / "cohort/manifest.csv"),
             "--out", str(out / "pred.csv")],
        ]
        for argv in steps:
            if cli_main(argv + fast) != 0:
                return False, f"command {argv[0]} failed"
        runs.append(out)
    files = sorted(p.relative_to(runs[0]) for p in runs[0].rglob("*") if p.is_file())
    other = sorted(p.relative_to(runs[1]) for p in runs[1].rglob("*") if p.is_file())
    same = files == other and all(
        filecmp.cmp(runs[0] / f, runs[1] / f, shallow=False) for f in files)
    return same, f"{len(files)} output files of 6 commands byte-identical: {same}"


def a11_clinical(manifest):
    from icfrank.ingest import read_manifest

    cohort = read_manifest(manifest)
    config = RunConfig()
    matrix = featurize_cohort(cohort, config)
    result = stability_rank(matrix, splits=config.splits, seed=config.seed)
    n_test = result.n_test
    low = sum(n for e, n in result.error_histogram.items() if e <= 1) / result.splits
    top = result.top(10)
    tail = sum(_is_upper_tail_f12(n) and parse_feature_name(n).statistic == "sigma" for n in top)
    return low >= 0.6 and tail >= 5, (f"{low:.0%} of repeats with <=1 of {n_test} test errors "
                                      f"(>=60%); {tail}/10 top features are +2 sigma of F1/F2")


# ---------------------------------------------------------------- pytest


@pytest.fixture(scope="module")
def synthetic_state():
    return _synthetic_cohort()


def _report(capsys, label, result):
    ok, detail = result
    with capsys.disabled():
        print(f"\n{label} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_A1_reconstruction_identity(capsys):
    _report(capsys, "A1", a1_reconstruction())


def test_A2_constant_input(capsys):
    _report(capsys, "A2", a2_constant())


def test_A3_mask_contract(capsys):
    _report(capsys, "A3", a3_mask())


def test_A4_two_tone_separation(capsys):
    _report(capsys, "A4", a4_two_tone())


def test_A5_gaussian_tail_reference(capsys):
    _report(capsys, "A5", a5_gaussian_tail())


def test_A6_svm_oracle_equivalence(capsys):
    _report(capsys, "A6", a6_svm_oracle())


def test_A7_rfe_planted_feature(capsys):
    _report(capsys, "A7", a7_rfe_recovery())


@pytest.mark.slow
def test_A8_end_to_end_synthetic(capsys, synthetic_state):
    _report(capsys, "A8", a8_end_to_end(synthetic_state))


@pytest.mark.slow
def test_A9_v_sweep_trend(capsys, synthetic_state):
    _report(capsys, "A9", a9_v_sweep(synthetic_state))


def test_A10_cli_determinism(capsys, tmp_path):
    _report(capsys, "A10", a10_determinism(tmp_path))


@pytest.mark.skipif(not os.environ.get("ICFRANK_COHORT_MANIFEST"),
                    reason="A11 needs ICFRANK_COHORT_MANIFEST (clinical cohort, not redistributable)")
def test_A11_clinical_cohort(capsys):
    _report(capsys, "A11", a11_clinical(os.environ["ICFRANK_COHORT_MANIFEST"]))


if __name__ == "__main__":
    import tempfile

    state = _synthetic_cohort()
    checks = [("A1", a1_reconstruction), ("A2", a2_constant), ("A3", a3_mask), ("A4", a4_two_tone),
              ("A5", a5_gaussian_tail), ("A6", a6_svm_oracle), ("A7", a7_rfe_recovery),
              ("A8", lambda: a8_end_to_end(state)), ("A9", lambda: a9_v_sweep(state))]
    with tempfile.TemporaryDirectory() as tmp:
        checks.append(("A10", lambda: a10_determinism(tmp)))
        failed = 0
        for label, fn in checks:
            ok, detail = fn()
            failed += not ok
            print(f"{label} {'PASS' if ok else 'FAIL'}  {detail}")
    if os.environ.get("ICFRANK_COHORT_MANIFEST"):
        ok, detail = a11_clinical(os.environ["ICFRANK_COHORT_MANIFEST"])
        print(f"A11 {'PASS' if ok else 'FAIL'}  {detail}")
    else:
        print("A11 SKIP  set ICFRANK_COHORT_MANIFEST to run on a clinical cohort")
    sys.exit(1 if failed else 0)
