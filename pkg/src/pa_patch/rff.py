"""Random Fourier features for the RBF kernel ``exp(-gamma * |x - x'|^2)``.

A linear PA trained on ``transform(map, x)`` stands in for a kernel PA.
"""
from dataclasses import dataclass

import numpy as np

from .errors import RejectedInputError

DEFAULT_OUT_DIM = 1024


@dataclass(frozen=True, eq=False)
class RffMap:
    projection: np.ndarray  # (out_dim, dim), rows are frequency vectors
    phases: np.ndarray  # (out_dim,)
    gamma: float
    seed: int

    @property
    def out_dim(self):
        return self.projection.shape[0]

    @property
    def dim(self):
        return self.projection.shape[1]


def build_rff(dim, out_dim=DEFAULT_OUT_DIM, gamma=1.0, seed=0):
    """Frequencies ~ N(0, 2*gamma), phases ~ U[0, 2*pi); reproducible per seed."""
    if int(dim) != dim or dim < 1 or int(out_dim) != out_dim or out_dim < 1:
        raise RejectedInputError(f"dim and out_dim must be positive integers, got {dim}, {out_dim}")
    if not (np.isfinite(gamma) and gamma > 0):
        raise RejectedInputError(f"gamma must be a positive finite number, got {gamma!r}")
    rng = np.random.default_rng(seed)
    projection = rng.normal(0.0, np.sqrt(2.0 * gamma), size=(int(out_dim), int(dim)))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=int(out_dim))
    projection.flags.writeable = False
    phases.flags.writeable = False
    return RffMap(projection, phases, float(gamma), int(seed))


def transform(rmap, x):
    """``sqrt(2/D) * cos(W x + b)`` for a vector or each row of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != rmap.dim or x.ndim not in (1, 2):
        raise RejectedInputError(f"expected trailing dim {rmap.dim}, got shape {x.shape}")
    return np.sqrt(2.0 / rmap.out_dim) * np.cos(x @ rmap.projection.T + rmap.phases)


def rbf_kernel(x, x2, gamma):
    diff = np.asarray(x, dtype=np.float64) - np.asarray(x2, dtype=np.float64)
    return np.exp(-gamma * np.sum(diff * diff, axis=-1))


def gamma_grid():
    return [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0]
