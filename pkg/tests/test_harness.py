import numpy as np
import pytest

from oracles import pair_count_auc
from pa_patch import (Dataset, LinearModel, PaConfig, RejectedInputError, SgdConfig, build_summaries,
                      roc_auc)
from pa_patch import harness
from pa_patch.harness import SyntheticSpec

SMALL = SyntheticSpec(n_train=3000, n_test=1500, n_hard=20, seed=3)


@pytest.fixture(scope="module")
def small():
    train, test, hard = harness.generate(SMALL)
    return train, test, hard, harness.base_model(train)


def test_generate_deterministic():
    a, b = harness.generate(SMALL), harness.generate(SMALL)
    for x, y in zip(a, b):
        assert np.array_equal(x.X, y.X) and np.array_equal(x.y, y.y)


def test_generate_shapes_and_labels(small):
    train, test, hard, _ = small
    assert len(train) == 3000 and len(test) == 1500 and len(hard) == 20
    assert np.all(hard.y == -1)
    assert np.all(train.X[:, 0] == SMALL.bias_value)


def test_default_class_fractions():
    spec = SyntheticSpec()
    train, test, hard = harness.generate(spec)
    for data in (train, test):
        assert abs(data.n_neg / len(data) - spec.benign_frac) <= 0.01
    assert len(hard) == 58


def test_spec_validation():
    with pytest.raises(RejectedInputError):
        SyntheticSpec(dim=2)
    with pytest.raises(RejectedInputError):
        SyntheticSpec(benign_frac=1.0)


def test_reference_weights_auc():
    spec = SyntheticSpec()
    _, test, _ = harness.generate(spec)
    assert roc_auc(test.X @ harness.reference_weights(spec), test.y) >= 0.95


def test_eval_fixed_zero_model(small):
    _, test, _, _ = small
    rep = harness.eval_fixed(LinearModel.zeros(test.dim), test)
    assert rep.auc == 0.5
    assert rep.accuracy == test.n_pos / len(test)  # everything alerts at the tie
    assert rep.tpr == 1.0 and rep.fpr == 1.0


def test_eval_fixed_fields_in_range(small):
    _, test, _, m = small
    rep = harness.eval_fixed(m, test)
    for name in ("accuracy", "auc", "pauc_norm", "tpr", "fpr"):
        assert 0.0 <= getattr(rep, name) <= 1.0


def test_adaptive_deterministic(small):
    train, test, hard, m = small
    a = harness.eval_adaptive(m, hard, test, 5, PaConfig(), None, 11)
    b = harness.eval_adaptive(m, hard, test, 5, PaConfig(), None, 11)
    assert np.array_equal(a.errors, b.errors) and np.array_equal(a.final_weights, b.final_weights)
    assert np.array_equal(a.orders, b.orders)
    assert not np.array_equal(a.orders[0], a.orders[1])


def test_adaptive_report_shapes(small):
    train, test, hard, m = small
    s = build_summaries(train, 32, 0)
    rep = harness.eval_adaptive(m, hard, test, 4, SgdConfig(), s, 0)
    assert rep.trials == 4
    for name in harness.METRICS + ("impact",):
        assert rep.trajectories[name].shape == (4, len(hard))
    stats = rep.error_stats()
    assert stats["min"] <= stats["mean"] <= stats["max"]


def test_corrected_fp_never_errs_again(small):
    """Re-presenting corrected hard FPs: PA pinned them at margin 1."""
    _, test, hard, m = small
    assert m.threshold >= 0
    twice = Dataset(np.vstack([hard.X, hard.X]), np.r_[hard.y, hard.y])
    rep = harness.eval_adaptive(m, twice, test, 10, PaConfig(), None, 0)
    assert np.all(rep.reverted == 0)
    single = harness.eval_adaptive(m, hard, test, 10, PaConfig(), None, 0)
    assert rep.errors.max() <= len(hard) and single.errors.min() >= 1


def test_adaptive_rejects(small):
    _, test, hard, m = small
    with pytest.raises(RejectedInputError):
        harness.eval_adaptive(m, hard, test, 0)
    with pytest.raises(RejectedInputError):
        harness.eval_adaptive(m, test, test, 1)


def test_impact_calibration_toy(two_clusters):
    model = LinearModel(np.array([1.0, 0.0]))
    train = Dataset(np.array([[1.0, 0.0]]), np.array([1]))
    X = np.vstack([np.tile([1.0, 0.0], (10, 1)), np.tile([-1.0, 0.0], (30, 1))])
    y = np.r_[np.full(8, 1), np.full(2, -1), np.full(3, 1), np.full(27, -1)]
    test = Dataset(X, y)
    res = harness.impact_calibration(model, train, test, two_clusters, 1, 0)
    assert res.estimated[0] == pytest.approx(-0.75, abs=1e-15)
    patched = np.array([-1.0, 0.0])
    brute = pair_count_auc(X @ patched, y) - pair_count_auc(X @ model.weights, y)
    assert res.actual[0] == pytest.approx(brute, abs=1e-12)


def test_impact_calibration_empty(small):
    train, test, _, m = small
    res = harness.impact_calibration(m, train, test, build_summaries(train, 8, 0), 0)
    assert res.pairs == []
    with pytest.raises(RejectedInputError):
        harness.impact_calibration(m, train, test, None, len(train) + 1)


def test_recalibrate(small):
    train, test, hard, m = small
    rep = harness.eval_adaptive(m, hard, test, 3, PaConfig(), None, 0)
    rc = harness.recalibrate(rep, train, test, hard)
    assert rc.thresholds.shape == (3,) and rc.n_hard == len(hard)
    benign = train.benign().X
    for w, t in zip(rep.final_weights, rc.thresholds):
        assert np.count_nonzero(benign @ w >= t) <= int(0.001 * len(benign) + 1e-9)


def test_default_corpus_fpr_trajectory_non_increasing():
    train, test, hard = harness.generate()
    m = harness.base_model(train)
    pa = harness.eval_adaptive(m, hard, test, 200, PaConfig(), None, 0)
    sgd = harness.eval_adaptive(m, hard, test, 200, SgdConfig(), None, 0)
    assert pa.errors.mean() < sgd.errors.mean() and pa.errors.max() < sgd.errors.min()
    assert np.all(np.diff(pa.mean_trajectory("fpr")) <= 0)
