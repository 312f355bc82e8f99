import numpy as np
import pytest

from oracles import accuracy_at_zero, random_dataset
from pa_patch import (Dataset, LinearModel, PaConfig, RejectedInputError, SummarySet, Verdict,
                      build_summaries, estimate_auc, estimate_impact, gate_patch)
from pa_patch.impact import kmeans


def test_estimate_auc_two_clusters(two_clusters):
    assert estimate_auc(np.array([1.0, 0.0]), two_clusters) == 0.875


def test_zero_weights_give_malicious_mass(two_clusters):
    assert estimate_auc(np.zeros(2), two_clusters) == pytest.approx((10 * 0.8 + 30 * 0.1) / 40)


def test_estimate_auc_accepts_model(two_clusters, toy_model):
    assert estimate_auc(toy_model, two_clusters) == 0.875


def test_estimate_auc_rejects(two_clusters):
    with pytest.raises(RejectedInputError):
        estimate_auc(np.zeros(3), two_clusters)
    with pytest.raises(RejectedInputError):
        estimate_auc(np.zeros(2), SummarySet(np.zeros((0, 2)), [], []))


def test_impact_worked_example(two_clusters, toy_model):
    impact, rec = estimate_impact(toy_model, (np.array([1.0, 0.0]), -1), PaConfig(), two_clusters)
    assert rec.tau == 2.0 and rec.margin_before == -1.0
    assert impact == pytest.approx(-0.75, abs=1e-15)
    assert gate_patch(impact, 0.05) is Verdict.AUDIT


def test_passive_impact_is_zero(two_clusters, toy_model):
    impact, rec = estimate_impact(toy_model, (np.array([2.0, 0.0]), 1), PaConfig(), two_clusters)
    assert impact == 0.0 and rec.verdict is Verdict.PASSIVE


@pytest.mark.parametrize("impact, verdict", [(-0.75, Verdict.AUDIT), (0.01, Verdict.APPLIED),
                                             (-0.05, Verdict.APPLIED), (-0.0500001, Verdict.AUDIT)])
def test_gate(impact, verdict):
    assert gate_patch(impact, 0.05) is verdict


def test_gate_rejects_negative_drop():
    with pytest.raises(RejectedInputError):
        gate_patch(0.0, -0.1)


def test_singletons():
    X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    s = build_summaries(Dataset(X, np.array([1, -1, -1, 1])), k=4, seed=0)
    assert s.k == 4 and np.all(s.sizes == 1)
    assert set(s.fractions.tolist()) <= {0.0, 1.0}


def test_two_blobs():
    X = np.vstack([np.zeros((10, 2)), np.full((10, 2), 10.0)])
    y = np.r_[np.full(10, -1), np.full(10, 1)]
    s = build_summaries(Dataset(X, y), k=2, seed=0)
    order = np.argsort(s.centers[:, 0])
    assert np.array_equal(s.centers[order], [[0.0, 0.0], [10.0, 10.0]])
    assert s.sizes[order].tolist() == [10, 10]
    assert s.fractions[order].tolist() == [0.0, 1.0]


def test_build_summaries_rejects():
    data = Dataset(np.eye(3), np.array([1, -1, 1]))
    for k in (0, 4, 1.5):
        with pytest.raises(RejectedInputError):
            build_summaries(data, k=k)


def test_summaries_deterministic_and_conserve_mass(rng):
    data = random_dataset(rng, 500, 4)
    a, b = build_summaries(data, 16, seed=5), build_summaries(data, 16, seed=5)
    assert np.array_equal(a.centers, b.centers) and np.array_equal(a.sizes, b.sizes)
    assert a.total == 500
    assert np.sum(a.sizes * a.fractions) == pytest.approx(data.n_pos)


def test_kmeans_centers_are_member_means(rng):
    X = rng.normal(size=(300, 3))
    centers, labels = kmeans(X, 7, seed=2)
    for j in range(7):
        assert np.allclose(centers[j], X[labels == j].mean(axis=0))
    d = ((X[:, None, :] - centers[None]) ** 2).sum(-1)
    assert np.array_equal(labels, d.argmin(1))


def test_duplicates_drop_empty_clusters():
    X = np.vstack([np.zeros((5, 2)), np.ones((5, 2))])
    s = build_summaries(Dataset(X, np.r_[np.full(5, -1), np.full(5, 1)]), k=4, seed=0)
    assert s.k == 2 and s.total == 10


def test_singleton_summary_equals_accuracy(rng):
    for _ in range(20):
        data = random_dataset(rng, int(rng.integers(2, 40)), 3)
        s = build_summaries(data, len(data), seed=int(rng.integers(1000)))
        w = rng.normal(size=3)
        assert estimate_auc(w, s) == accuracy_at_zero(w, data.X, data.y)
