"""ROC AUC, normalised partial AUC, rates at a threshold and FPR calibration.

Scores are oriented so that larger means more malicious; labels are -1/+1.
A score equal to the threshold raises an alert.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .errors import RejectedInputError, UndefinedMetricError


def _split(scores, labels):
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or labels.shape != scores.shape:
        raise RejectedInputError(f"scores {scores.shape} and labels {labels.shape} must be matching 1-D")
    if not np.all(np.isfinite(scores)):
        raise RejectedInputError("scores must be finite")
    positive = labels == 1
    if not np.all(positive | (labels == -1)):
        raise RejectedInputError("labels must be -1 or +1")
    n_pos = int(positive.sum())
    if n_pos == 0 or n_pos == scores.shape[0]:
        raise UndefinedMetricError("need at least one example of each label")
    return scores, positive


def roc_auc(scores, labels):
    """Area under the tie-grouped ROC (ties between classes count 1/2)."""
    s, pos = _split(scores, labels)
    return float(_kernels.roc_band_area(s, pos, 1.0))


def partial_auc(scores, labels, fpr_limit):
    """ROC area over FPR in [0, fpr_limit] divided by ``fpr_limit``.

    Equivalently the mean TPR across that band; a perfect ranking gives 1.0.
    """
    if not (0.0 < fpr_limit <= 1.0):
        raise RejectedInputError(f"fpr_limit must lie in (0, 1], got {fpr_limit!r}")
    s, pos = _split(scores, labels)
    return float(_kernels.roc_band_area(s, pos, float(fpr_limit)))


def rates_at_threshold(scores, labels, threshold):
    """``(tpr, fpr, accuracy)`` alerting on ``score >= threshold``."""
    s, pos = _split(scores, labels)
    alert = s >= threshold
    n_pos = pos.sum()
    n_neg = pos.shape[0] - n_pos
    tp = np.count_nonzero(alert & pos)
    fp = np.count_nonzero(alert & ~pos)
    acc = (tp + (n_neg - fp)) / pos.shape[0]
    return float(tp / n_pos), float(fp / n_neg), float(acc)


def calibrate_threshold(benign_scores, target_fpr):
    """Smallest-gap threshold with at most ``floor(target_fpr * n)`` alerts.

    The result is the midpoint between the highest benign score that must
    stay silent and the next distinct score above it. With no allowed
    alerts it sits just above the maximum.
    """
    s = np.sort(np.asarray(benign_scores, dtype=np.float64).ravel())
    if s.size == 0:
        raise RejectedInputError("cannot calibrate on an empty benign set")
    if not np.all(np.isfinite(s)):
        raise RejectedInputError("benign scores must be finite")
    if not (0.0 <= target_fpr < 1.0):
        raise RejectedInputError(f"target_fpr must lie in [0, 1), got {target_fpr!r}")
    n = s.size
    allowed = math.floor(target_fpr * n + 1e-9)
    quiet = s[n - allowed - 1]  # highest score that must fall below theta
    above = s[s > quiet]
    if above.size == 0:
        span = s[-1] - s[0]
        eps = max(span * 1e-9, np.spacing(abs(s[-1])) * 4, 1e-300)
        return float(s[-1] + eps)
    mid = (quiet + above[0]) / 2.0
    # adjacent floats: the midpoint can round back onto ``quiet``
    return float(mid if mid > quiet else above[0])


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    auc: float
    pauc_norm: float
    tpr: float
    fpr: float
    threshold: float
    n_pos: int
    n_neg: int
    fpr_limit: float = 0.001

    def as_dict(self):
        return asdict(self)


def evaluate(scores, labels, threshold, fpr_limit=0.001):
    tpr, fpr, acc = rates_at_threshold(scores, labels, threshold)
    labels = np.asarray(labels)
    return EvalReport(
        accuracy=acc,
        auc=roc_auc(scores, labels),
        pauc_norm=partial_auc(scores, labels, fpr_limit),
        tpr=float(tpr),
        fpr=float(fpr),
        threshold=float(threshold),
        n_pos=int(np.count_nonzero(labels == 1)),
        n_neg=int(np.count_nonzero(labels == -1)),
        fpr_limit=float(fpr_limit),
    )


def pearson(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])
