"""The deployed linear scorer and the labeled data it scores."""
from dataclasses import dataclass

import numpy as np

from .errors import RejectedInputError

BENIGN = -1
MALICIOUS = 1


def _as_vector(x, name="x"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise RejectedInputError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError(f"{name} contains non-finite entries")
    return arr


def _frozen(arr):
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LabeledExample:
    features: np.ndarray
    label: int

    def __post_init__(self):
        if self.label not in (BENIGN, MALICIOUS):
            raise RejectedInputError(f"label must be -1 or +1, got {self.label!r}")
        object.__setattr__(self, "features", _frozen(_as_vector(self.features, "features")))

    @property
    def dim(self):
        return self.features.shape[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense examples stored row-wise: ``X`` is (n, d), ``y`` holds -1/+1."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y)
        if X.ndim != 2:
            raise RejectedInputError(f"X must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise RejectedInputError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if X.shape[1] < 1:
            raise RejectedInputError("dim must be positive")
        if not np.all(np.isfinite(X)):
            raise RejectedInputError("X contains non-finite entries")
        if not np.all((y == BENIGN) | (y == MALICIOUS)):
            raise RejectedInputError("labels must be -1 or +1")
        object.__setattr__(self, "X", _frozen(X))
        yi = np.array(y, dtype=np.int8)
        yi.flags.writeable = False
        object.__setattr__(self, "y", yi)

    @classmethod
    def from_examples(cls, examples, dim=None):
        examples = list(examples)
        if not examples:
            if dim is None:
                raise RejectedInputError("cannot infer dim of an empty dataset")
            return cls(np.empty((0, dim)), np.empty(0, dtype=np.int8))
        X = np.stack([ex.features for ex in examples])
        if dim is not None and X.shape[1] != dim:
            raise RejectedInputError(f"examples have dim {X.shape[1]}, expected {dim}")
        return cls(X, np.array([ex.label for ex in examples]))

    def __len__(self):
        return self.X.shape[0]

    def __getitem__(self, i):
        return LabeledExample(self.X[i], int(self.y[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def n_pos(self):
        return int(np.count_nonzero(self.y == MALICIOUS))

    @property
    def n_neg(self):
        return int(np.count_nonzero(self.y == BENIGN))

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx])

    def benign(self):
        return self.subset(self.y == BENIGN)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Weights ``w`` and alert threshold ``threshold`` on the raw score w.x.

    There is no bias term. The threshold only decides alerts; margins used
    by the learners are always measured at the 0 level-set.
    """

    weights: np.ndarray
    threshold: float = 0.0

    def __post_init__(self):
        w = _as_vector(self.weights, "weights")
        if w.shape[0] < 1:
            raise RejectedInputError("weights must be non-empty")
        if not np.isfinite(self.threshold):
            raise RejectedInputError("threshold must be finite")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "threshold", float(self.threshold))

    @classmethod
    def zeros(cls, dim, threshold=0.0):
        return cls(np.zeros(dim), threshold)

    @property
    def dim(self):
        return self.weights.shape[0]

    def with_weights(self, weights):
        return LinearModel(weights, self.threshold)

    def with_threshold(self, threshold):
        return LinearModel(self.weights, threshold)

    def scores(self, X):
        """Vectorised :func:`score` over the rows of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise RejectedInputError(f"expected (n, {self.dim}) features, got {X.shape}")
        return X @ self.weights

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return self.threshold == other.threshold and np.array_equal(self.weights, other.weights)

    __hash__ = None


def _check_dim(model, x):
    x = _as_vector(x)
    if x.shape[0] != model.dim:
        raise RejectedInputError(f"feature length {x.shape[0]} != model dim {model.dim}")
    return x


def score(model, x):
    """Raw score ``w . x``; positive means malicious."""
    return float(model.weights @ _check_dim(model, x))


def classify(model, x):
    """+1 (alert) iff score >= threshold; ties alert."""
    return MALICIOUS if score(model, x) >= model.threshold else BENIGN


def classify_many(model, X):
    return np.where(model.scores(X) >= model.threshold, MALICIOUS, BENIGN).astype(np.int8)
