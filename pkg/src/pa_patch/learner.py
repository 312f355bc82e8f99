"""Passive-Aggressive corrections, the hinge-SGD baseline and online training.

A correction targets the example's margin ``y * w.x`` at the 0 level-set.
The exact rule moves ``w`` the minimum Euclidean distance needed to bring
that margin to 1; PA-I caps the step at ``c``.
"""
import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import NumericalError, RejectedInputError
from .model import Dataset, LabeledExample, LinearModel


class Variant(str, enum.Enum):
    EXACT = "exact"
    REGULARIZED_C = "pa1"


class Verdict(str, enum.Enum):
    APPLIED = "Applied"
    PASSIVE = "Passive"
    AUDIT = "Audit"


@dataclass(frozen=True)
class PaConfig:
    variant: Variant = Variant.EXACT
    c: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.REGULARIZED_C:
            if self.c is None or not self.c > 0 or not np.isfinite(self.c):
                raise RejectedInputError(f"PA-I needs a finite c > 0, got {self.c!r}")

    @property
    def step_cap(self):
        return float(self.c) if self.variant is Variant.REGULARIZED_C else np.inf


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.01
    steps_per_correction: int = 1

    def __post_init__(self):
        if not self.learning_rate > 0 or not np.isfinite(self.learning_rate):
            raise RejectedInputError(f"learning_rate must be > 0, got {self.learning_rate!r}")
        if int(self.steps_per_correction) != self.steps_per_correction or self.steps_per_correction < 1:
            raise RejectedInputError("steps_per_correction must be a positive integer")


@dataclass(frozen=True)
class PatchRecord:
    tau: float
    margin_before: float
    margin_after: float
    weight_delta_norm: float
    verdict: Verdict
    estimated_auc_impact: Optional[float] = None

    def with_verdict(self, verdict, impact=None):
        return PatchRecord(self.tau, self.margin_before, self.margin_after,
                           self.weight_delta_norm, Verdict(verdict),
                           self.estimated_auc_impact if impact is None else impact)


def hinge_loss(margin):
    return max(0.0, 1.0 - float(margin))


def _prepare(model, ex):
    if not isinstance(ex, LabeledExample):
        ex = LabeledExample(*ex)
    if ex.dim != model.dim:
        raise RejectedInputError(f"example dim {ex.dim} != model dim {model.dim}")
    return ex.features, float(ex.label)


def pa_update(model, ex, cfg=PaConfig()):
    """One PA correction; returns ``(new_model, record)``.

    If the hinge loss is already zero the *same* model object comes back
    with verdict ``Passive``.
    """
    x, y = _prepare(model, ex)
    sq_norm = float(x @ x)
    if sq_norm == 0.0:
        raise RejectedInputError("zero-norm feature vector: step size is undefined")
    margin = y * float(model.weights @ x)
    loss = hinge_loss(margin)
    if loss == 0.0:
        return model, PatchRecord(0.0, margin, margin, 0.0, Verdict.PASSIVE)
    tau = min(loss / sq_norm, cfg.step_cap)
    if not np.isfinite(tau):
        raise NumericalError("PA step size is not finite")
    w_new = model.weights + (tau * y) * x
    if not np.all(np.isfinite(w_new)):
        raise NumericalError("PA update produced non-finite weights")
    margin_after = y * float(w_new @ x)
    record = PatchRecord(tau, margin, margin_after, float(np.linalg.norm(w_new - model.weights)),
                         Verdict.APPLIED)
    return model.with_weights(w_new), record


def sgd_update(model, ex, cfg=SgdConfig()):
    """Hinge-subgradient steps ``w += lr * y * x`` while the loss is positive.

    ``tau`` in the record is the accumulated coefficient on ``y * x``.
    """
    x, y = _prepare(model, ex)
    margin = y * float(model.weights @ x)
    w = model.weights.copy()
    steps = 0
    for _ in range(int(cfg.steps_per_correction)):
        if hinge_loss(y * float(w @ x)) == 0.0:
            break
        w += (cfg.learning_rate * y) * x
        steps += 1
    if steps == 0:
        return model, PatchRecord(0.0, margin, margin, 0.0, Verdict.PASSIVE)
    if not np.all(np.isfinite(w)):
        raise NumericalError("SGD update produced non-finite weights")
    tau = steps * cfg.learning_rate
    record = PatchRecord(tau, margin, y * float(w @ x), float(np.linalg.norm(w - model.weights)),
                         Verdict.APPLIED)
    return model.with_weights(w), record


def correct(model, ex, cfg):
    """Dispatch to :func:`pa_update` or :func:`sgd_update` by config type."""
    if isinstance(cfg, SgdConfig):
        return sgd_update(model, ex, cfg)
    return pa_update(model, ex, cfg)


def train_online(init, data, epochs, cfg=PaConfig(), rng_seed=0):
    """Reshuffle each epoch with a seeded generator and correct in order.

    Uses the compiled sweep when numba is enabled; results are deterministic
    for a fixed seed and backend.
    """
    if epochs < 0 or int(epochs) != epochs:
        raise RejectedInputError(f"epochs must be a non-negative integer, got {epochs!r}")
    if data.dim != init.dim:
        raise RejectedInputError(f"data dim {data.dim} != model dim {init.dim}")
    if epochs == 0:
        return init
    if len(data) == 0:
        raise RejectedInputError("cannot train on an empty dataset")
    X = np.ascontiguousarray(data.X)
    if isinstance(cfg, PaConfig) and np.any(np.einsum("ij,ij->i", X, X) == 0.0):
        raise RejectedInputError("dataset contains a zero-norm feature vector")
    y = data.y.astype(np.float64)
    if isinstance(cfg, SgdConfig):
        mode, cap, lr, steps = _kernels.MODE_SGD, np.inf, float(cfg.learning_rate), int(cfg.steps_per_correction)
    else:
        mode, cap, lr, steps = _kernels.MODE_PA, cfg.step_cap, 0.0, 0
    rng = np.random.default_rng(rng_seed)
    w = init.weights.copy()
    for _ in range(int(epochs)):
        order = rng.permutation(len(data)).astype(np.int64)
        _kernels.online_sweep(w, X, y, order, mode, cap, lr, steps)
        if not np.all(np.isfinite(w)):
            raise NumericalError("online training diverged")
    return init.with_weights(w)
