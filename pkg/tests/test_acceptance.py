"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines go straight to the terminal) or as a script:

    python tests/test_acceptance.py
"""
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from oracles import accuracy_at_zero, pair_count_auc, random_dataset  # noqa: E402

from pa_patch import (LinearModel, PaConfig, SgdConfig, build_rff, build_summaries,  # noqa: E402
                      estimate_auc, gamma_grid, harness, pa_update, roc_auc, transform)
from pa_patch.io import (load_dataset, load_model, load_summaries, save_dataset, save_model,  # noqa: E402
                         save_summaries)
from pa_patch.model import Dataset  # noqa: E402
from pa_patch.rff import rbf_kernel  # noqa: E402

TRIALS = 200
N_FLIPS = 200
K = 256


class Outcome:
    def __init__(self, number, name, ok, detail, seconds, budget):
        self.number, self.name, self.ok = number, name, bool(ok)
        self.detail, self.seconds, self.budget = detail, seconds, budget

    @property
    def passed(self):
        return self.ok and (self.budget is None or self.seconds < self.budget)

    def line(self):
        budget = f" < {self.budget:g} s" if self.budget is not None else ""
        return (f"[criterion {self.number:2d}] {'PASS' if self.passed else 'FAIL'}  {self.name}: "
                f"{self.detail} ({self.seconds:.2f} s{budget})")


def _timed(func):
    t0 = time.perf_counter()
    result = func()
    return result, time.perf_counter() - t0


# --------------------------------------------------------------------------
# shared default-corpus runs
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def corpus():
    train, test, hard = harness.generate(harness.SyntheticSpec())
    return train, test, hard, harness.base_model(train)


@lru_cache(maxsize=None)
def adaptive_runs():
    train, test, hard, model = corpus()

    def go():
        pa = harness.eval_adaptive(model, hard, test, TRIALS, PaConfig(), None, 0)
        sgd = harness.eval_adaptive(model, hard, test, TRIALS, SgdConfig(), None, 0)
        return pa, sgd

    return _timed(go)


# --------------------------------------------------------------------------
# criteria
# --------------------------------------------------------------------------

def criterion_1():
    rng = np.random.default_rng(1)

    def go():
        W = rng.normal(size=(20_000, 8)) * rng.uniform(0.1, 10, size=(20_000, 1))
        X = rng.normal(size=(20_000, 8)) * rng.uniform(0.1, 10, size=(20_000, 1))
        Y = np.where(rng.random(20_000) < 0.5, 1, -1)
        violated = np.flatnonzero(Y * np.einsum("ij,ij->i", W, X) < 1.0)[:10_000]
        assert violated.size == 10_000
        worst = 0.0
        for i in violated:
            new, _ = pa_update(LinearModel(W[i]), (X[i], int(Y[i])))
            worst = max(worst, abs(Y[i] * (new.weights @ X[i]) - 1.0))
        return worst

    worst, dt = _timed(go)
    return Outcome(1, "full correction", worst <= 1e-9, f"max |y w'.x - 1| = {worst:.2e} <= 1e-9", dt, 1.0)


def criterion_2():
    rng = np.random.default_rng(2)

    def go():
        worst = -np.inf
        n = 0
        while n < 1000:
            d = int(rng.integers(2, 10))
            w, x = rng.normal(size=d), rng.normal(size=d)
            y = 1 if rng.random() < 0.5 else -1
            if y * (w @ x) >= 1.0:
                continue
            new, _ = pa_update(LinearModel(w), (x, y))
            best = np.linalg.norm(new.weights - w)
            # other points on the constraint set: w' plus directions orthogonal to x
            v = rng.normal(size=(50, d)) * rng.uniform(1e-6, 10, size=(50, 1))
            v -= np.outer(v @ x / (x @ x), x)
            others = np.linalg.norm(new.weights + v - w, axis=1)
            worst = max(worst, best - others.min())
            n += 1
        return worst

    worst, dt = _timed(go)
    return Outcome(2, "minimality", worst <= 1e-9,
                   f"max(|w'-w| - min sampled |w''-w|) = {worst:.2e} <= 1e-9", dt, 5.0)


def criterion_3():
    rng = np.random.default_rng(3)

    def go():
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(2, 51))
            scores = np.round(rng.normal(size=n), int(rng.integers(0, 3)))  # plenty of ties
            labels = np.where(rng.random(n) < 0.5, 1, -1)
            labels[0], labels[-1] = 1, -1
            worst = max(worst, abs(roc_auc(scores, labels) - pair_count_auc(scores, labels)))
        return worst

    worst, dt = _timed(go)
    return Outcome(3, "AUC oracle", worst <= 1e-12, f"max |trapezoid - pair count| = {worst:.2e} <= 1e-12",
                   dt, 5.0)


def criterion_4():
    rng = np.random.default_rng(4)

    def go():
        mismatches = 0
        for _ in range(100):
            data = random_dataset(rng, int(rng.integers(2, 60)), int(rng.integers(1, 6)))
            summaries = build_summaries(data, len(data), seed=int(rng.integers(1 << 30)))
            w = rng.normal(size=data.dim)
            mismatches += estimate_auc(w, summaries) != accuracy_at_zero(w, data.X, data.y)
        return mismatches

    bad, dt = _timed(go)
    return Outcome(4, "singleton summaries", bad == 0, f"{bad}/100 datasets differ from accuracy at 0", dt, 5.0)


def criterion_5():
    (pa, sgd), dt = adaptive_runs()
    p, s = pa.error_stats(), sgd.error_stats()
    ok = p["mean"] <= 6 and p["max"] < s["min"]
    return Outcome(5, "adaptive gap", ok,
                   f"PA mean {p['mean']:.3f} (<= 6), PA max {p['max']} < SGD min {s['min']} "
                   f"(SGD mean {s['mean']:.2f}), {TRIALS} trials", dt, 120.0)


def criterion_6():
    (pa, _), dt = adaptive_runs()
    before, after = pa.baseline.fpr, pa.final("fpr")
    return Outcome(6, "FPR reduction", after <= before / 5,
                   f"test FPR at original theta {before:.6f} -> {after:.6f} (<= {before / 5:.6f})", dt, 120.0)


def criterion_7():
    train, test, _, model = corpus()

    def go():
        summaries = build_summaries(train, K, 0)
        return harness.impact_calibration(model, train, test, summaries, N_FLIPS, 0)

    res, dt = _timed(go)
    r = res.pearson_r
    slope, intercept = res.fit()
    return Outcome(7, "impact calibration", r >= 0.8,
                   f"Pearson r = {r:.4f} >= 0.8 over {N_FLIPS} flips, K={K} "
                   f"(fit slope {slope:.3f}, intercept {intercept:.4f})", dt, 120.0)


def criterion_8():
    train, test, hard, _ = corpus()
    (pa, _), _ = adaptive_runs()
    rc, dt = _timed(lambda: harness.recalibrate(pa, train, test, hard, 0.001))
    ok = rc.test_fpr.mean() <= 0.001 and rc.test_fpr.max() <= 0.001 and rc.all_hard_benign
    return Outcome(8, "recalibration", ok,
                   f"test FPR mean {rc.test_fpr.mean():.6f} / worst trial {rc.test_fpr.max():.6f} (<= 0.001), "
                   f"hard FPs benign in {np.count_nonzero(rc.hard_benign == rc.n_hard)}/{len(rc.hard_benign)} "
                   f"trials", dt, 30.0)


def criterion_9():
    rng = np.random.default_rng(9)
    d = 8
    X, X2 = rng.normal(size=(1000, d)) * 0.5, rng.normal(size=(1000, d)) * 0.5

    def go():
        errors = {}
        for gamma in gamma_grid():
            rmap = build_rff(d, 2048, gamma, seed=0)
            approx = np.sum(transform(rmap, X) * transform(rmap, X2), axis=1)
            errors[gamma] = float(np.mean(np.abs(approx - rbf_kernel(X, X2, gamma))))
        return errors

    errors, dt = _timed(go)
    worst = max(errors.values())
    return Outcome(9, "RFF fidelity", worst <= 0.05,
                   f"worst mean |z.z' - k| = {worst:.4f} <= 0.05 over gamma grid, D=2048", dt, 10.0)


def criterion_10(tmp_dir):
    rng = np.random.default_rng(10)

    def go():
        bad = 0
        X = rng.normal(size=(1000, 6)) * 10.0 ** rng.integers(-5, 6, size=(1000, 6))
        model = LinearModel(rng.normal(size=6) / 7.0, threshold=float(rng.normal() / 3))
        save_model(f"{tmp_dir}/m.txt", model)
        bad += not np.array_equal(load_model(f"{tmp_dir}/m.txt").scores(X), model.scores(X))
        data = Dataset(X, np.where(rng.random(1000) < 0.5, 1, -1))
        summaries = build_summaries(data, 16, 0)
        save_summaries(f"{tmp_dir}/s.txt", summaries)
        back = load_summaries(f"{tmp_dir}/s.txt")
        bad += not np.array_equal(back.centers @ model.weights, summaries.centers @ model.weights)
        bad += estimate_auc(model.weights, back) != estimate_auc(model.weights, summaries)
        save_dataset(f"{tmp_dir}/d.csv", data)
        again = load_dataset(f"{tmp_dir}/d.csv")
        bad += not np.array_equal(model.scores(again.X), model.scores(X))
        bad += not np.array_equal(again.y, data.y)
        return bad

    bad, dt = _timed(go)
    return Outcome(10, "persistence", bad == 0, f"{bad} mismatching artifacts (model/summaries/dataset)",
                   dt, 5.0)


def criterion_11():
    (pa, _), dt = adaptive_runs()
    base = pa.baseline.auc
    worst = float(np.max(np.abs(pa.trajectories["auc"][:, -1] - base)))
    mean = abs(pa.final("auc") - base)
    return Outcome(11, "global stability", worst <= 0.05,
                   f"|post-patch AUC - {base:.4f}|: mean {mean:.4f}, worst trial {worst:.4f} (<= 0.05)",
                   dt, None)


# --------------------------------------------------------------------------
# pytest wiring
# --------------------------------------------------------------------------

def _check(outcome, capsys):
    with capsys.disabled():
        print("\n" + outcome.line())
    assert outcome.passed, outcome.line()


@pytest.mark.parametrize("number", [1, 2, 3, 4, 5, 6, 7, 8, 9, 11])
def test_criterion(number, capsys):
    _check(globals()[f"criterion_{number}"](), capsys)


def test_criterion_10(tmp_path, capsys):
    _check(criterion_10(tmp_path), capsys)


def main():
    import tempfile

    outcomes = []
    with tempfile.TemporaryDirectory() as tmp:
        for n in range(1, 12):
            out = criterion_10(tmp) if n == 10 else globals()[f"criterion_{n}"]()
            print(out.line(), flush=True)
            outcomes.append(out)
    failed = [o.number for o in outcomes if not o.passed]
    print(f"{len(outcomes) - len(failed)}/{len(outcomes)} criteria passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
