"""Cluster summaries of the training set and summary-based patch impact.

Only cluster centers, member counts and malicious fractions leave
:func:`build_summaries`; the impact estimate never sees raw examples.

The "AUC" estimate is really a cluster-weighted accuracy at the 0
level-set: a cluster on the malicious side of ``w`` contributes its
malicious mass, one on the benign side its benign mass.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import RejectedInputError
from .learner import PaConfig, Verdict, pa_update
from .model import MALICIOUS

DEFAULT_K = 256
DEFAULT_MAX_DROP = 0.05


@dataclass(frozen=True)
class ClusterSummary:
    center: np.ndarray
    size: int
    malicious_fraction: float


@dataclass(frozen=True, eq=False)
class SummarySet:
    centers: np.ndarray  # (K, d)
    sizes: np.ndarray  # (K,) int64
    fractions: np.ndarray  # (K,) in [0, 1]
    seed: int = 0

    def __post_init__(self):
        centers = np.array(self.centers, dtype=np.float64, ndmin=2)
        sizes = np.array(self.sizes, dtype=np.int64).ravel()
        fractions = np.array(self.fractions, dtype=np.float64).ravel()
        if not (centers.shape[0] == sizes.shape[0] == fractions.shape[0]):
            raise RejectedInputError("centers, sizes and fractions disagree on K")
        if np.any(sizes < 0) or np.any((fractions < 0) | (fractions > 1)):
            raise RejectedInputError("sizes must be >= 0 and fractions in [0, 1]")
        if not np.all(np.isfinite(centers)):
            raise RejectedInputError("centers must be finite")
        for name, arr in (("centers", centers), ("sizes", sizes), ("fractions", fractions)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def k(self):
        return self.centers.shape[0]

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def total(self):
        return int(self.sizes.sum())

    @property
    def clusters(self):
        return [ClusterSummary(c, int(s), float(f))
                for c, s, f in zip(self.centers, self.sizes, self.fractions)]


def kmeans_pp_init(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    diff = X - X[first]
    closest = np.einsum("ij,ij->i", diff, diff)
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:  # fewer distinct points than clusters
            idx = int(rng.integers(n))
        centers[j] = X[idx]
        diff = X - X[idx]
        np.minimum(closest, np.einsum("ij,ij->i", diff, diff), out=closest)
    return centers


def _means(X, labels, k):
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    nonempty = counts > 0
    sums[nonempty] /= counts[nonempty, None]
    return sums, counts


def kmeans(X, k, seed=0, max_iters=100):
    """k-means++ seeding then Lloyd iterations to an assignment fixpoint.

    Empty clusters are reseeded at the points farthest from their current
    centers. Returns ``(centers, labels)`` with centers equal to the means of
    the final assignment.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    rng = np.random.default_rng(seed)
    centers = kmeans_pp_init(X, k, rng)
    labels, dist = _kernels.nearest_center(X, centers)
    for _ in range(int(max_iters)):
        centers, counts = _means(X, labels, k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            far = np.argsort(-dist, kind="stable")[:empty.size]
            centers[empty] = X[far]
        new_labels, dist = _kernels.nearest_center(X, centers)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    centers, _ = _means(X, labels, k)
    return centers, labels


def build_summaries(data, k=DEFAULT_K, seed=0, max_iters=100):
    n = len(data)
    if n == 0:
        raise RejectedInputError("cannot summarise an empty dataset")
    if int(k) != k or k < 1:
        raise RejectedInputError(f"k must be a positive integer, got {k!r}")
    if k > n:
        raise RejectedInputError(f"k={k} exceeds the number of examples ({n})")
    if max_iters < 1:
        raise RejectedInputError("max_iters must be positive")
    centers, labels = kmeans(data.X, int(k), seed, max_iters)
    sizes = np.bincount(labels, minlength=k)
    mal = np.bincount(labels, weights=(data.y == MALICIOUS).astype(np.float64), minlength=k)
    keep = sizes > 0
    fractions = mal[keep] / sizes[keep]
    return SummarySet(centers[keep], sizes[keep], fractions, seed=int(seed))


def estimate_auc(weights, summaries):
    w = np.asarray(getattr(weights, "weights", weights), dtype=np.float64)
    if summaries.k == 0 or summaries.total == 0:
        raise RejectedInputError("summary set is empty")
    if w.shape != (summaries.dim,):
        raise RejectedInputError(f"weights shape {w.shape} != summary dim {summaries.dim}")
    mal_side = summaries.centers @ w >= 0
    s = summaries.sizes.astype(np.float64)
    l = summaries.fractions
    alpha = np.sum(np.where(mal_side, s * l, s * (1.0 - l)))
    return float(alpha / s.sum())


def estimate_impact(model, ex, cfg=PaConfig(), summaries=None):
    """Summary-based quality change of the candidate PA patch.

    ``model`` should be the original global model; comparing against an
    already patched model hides the cumulative drift.
    """
    if summaries is None:
        raise RejectedInputError("summaries are required")
    candidate, record = pa_update(model, ex, cfg)
    if record.verdict is Verdict.PASSIVE:
        return 0.0, record.with_verdict(Verdict.PASSIVE, 0.0)
    impact = estimate_auc(candidate.weights, summaries) - estimate_auc(model.weights, summaries)
    return impact, record.with_verdict(Verdict.APPLIED, impact)


def gate_patch(impact, max_drop=DEFAULT_MAX_DROP):
    """``Audit`` iff the estimated drop exceeds ``max_drop`` (boundary passes)."""
    if max_drop < 0:
        raise RejectedInputError("max_drop must be non-negative")
    return Verdict.AUDIT if impact < -max_drop else Verdict.APPLIED
