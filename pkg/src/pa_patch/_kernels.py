"""Hot inner loops, each with a numba and a pure-numpy implementation.

The public names (``online_sweep``, ``roc_band_area``, ``nearest_center``)
dispatch on :data:`pa_patch._accel.USE_NUMBA`. The ``*_nb`` / ``*_np``
variants stay importable so tests and the benchmark can pit them against
each other.
"""
import numpy as np

from ._accel import USE_NUMBA, optional_njit

MODE_PA = 0
MODE_SGD = 1


# --------------------------------------------------------------------------
# sequential online updates (PA / PA-I / hinge SGD)
# --------------------------------------------------------------------------

@optional_njit(cache=True)
def online_sweep_nb(w, X, y, order, mode, c, lr, steps):
    """Present ``X[order]`` once, updating ``w`` in place. Returns #updates."""
    d = X.shape[1]
    n_updates = 0
    for t in range(order.shape[0]):
        i = order[t]
        yi = y[i]
        if mode == MODE_PA:
            s = 0.0
            sq = 0.0
            for j in range(d):
                s += w[j] * X[i, j]
                sq += X[i, j] * X[i, j]
            loss = 1.0 - yi * s
            if loss > 0.0:
                tau = loss / sq
                if tau > c:
                    tau = c
                for j in range(d):
                    w[j] += tau * yi * X[i, j]
                n_updates += 1
        else:
            for _ in range(steps):
                s = 0.0
                for j in range(d):
                    s += w[j] * X[i, j]
                if 1.0 - yi * s <= 0.0:
                    break
                for j in range(d):
                    w[j] += lr * yi * X[i, j]
                n_updates += 1
    return n_updates


def online_sweep_np(w, X, y, order, mode, c, lr, steps):
    n_updates = 0
    for i in order:
        x = X[i]
        yi = y[i]
        if mode == MODE_PA:
            loss = 1.0 - yi * (w @ x)
            if loss > 0.0:
                tau = min(loss / (x @ x), c)
                w += (tau * yi) * x
                n_updates += 1
        else:
            for _ in range(steps):
                if 1.0 - yi * (w @ x) <= 0.0:
                    break
                w += (lr * yi) * x
                n_updates += 1
    return n_updates


# --------------------------------------------------------------------------
# tie-grouped ROC walk, area restricted to FPR in [0, limit]
# --------------------------------------------------------------------------

@optional_njit(cache=True)
def _segment_area(f0, t0, f1, t1, limit):
    if f0 >= limit:
        return 0.0
    if f1 <= limit:
        return (f1 - f0) * (t0 + t1) * 0.5
    t_edge = t0 + (t1 - t0) * (limit - f0) / (f1 - f0)
    return (limit - f0) * (t0 + t_edge) * 0.5


@optional_njit(cache=True)
def roc_band_area_nb(scores, positive, limit):
    """Normalised ROC area over FPR in [0, limit]; ``positive`` is boolean."""
    n = scores.shape[0]
    order = np.argsort(-scores)
    n_pos = 0
    for i in range(n):
        if positive[i]:
            n_pos += 1
    n_neg = n - n_pos
    tp = 0
    fp = 0
    f_prev = 0.0
    t_prev = 0.0
    area = 0.0
    i = 0
    while i < n:
        s = scores[order[i]]
        while i < n and scores[order[i]] == s:
            if positive[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        f = fp / n_neg
        t = tp / n_pos
        area += _segment_area(f_prev, t_prev, f, t, limit)
        if f >= limit:
            break
        f_prev = f
        t_prev = t
    return area / limit


def roc_band_area_np(scores, positive, limit):
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = positive[order]
    # last index of each tie group
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(pos)[ends]
    fp = (ends + 1) - tp
    n_pos = pos.sum()
    n_neg = s.shape[0] - n_pos
    f = np.r_[0.0, fp / n_neg]
    t = np.r_[0.0, tp / n_pos]
    f0, f1, t0, t1 = f[:-1], f[1:], t[:-1], t[1:]
    full = f1 <= limit
    area = np.sum(((f1 - f0) * (t0 + t1) * 0.5)[full])
    cut = np.flatnonzero((f0 < limit) & ~full)
    if cut.size:
        k = cut[0]
        t_edge = t0[k] + (t1[k] - t0[k]) * (limit - f0[k]) / (f1[k] - f0[k])
        area += (limit - f0[k]) * (t0[k] + t_edge) * 0.5
    return float(area / limit)


# --------------------------------------------------------------------------
# nearest-center assignment for Lloyd iterations
# --------------------------------------------------------------------------

# Reassociation lets the feature loop vectorise; nnan/ninf stay off because
# ``best`` starts at +inf.
@optional_njit(cache=True, fastmath={"reassoc", "contract", "nsz", "arcp"})
def nearest_center_nb(X, C):
    n, d = X.shape
    k = C.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        arg = 0
        for j in range(k):
            acc = 0.0
            for m in range(d):
                diff = X[i, m] - C[j, m]
                acc += diff * diff
            if acc < best:
                best = acc
                arg = j
        labels[i] = arg
        dist[i] = best
    return labels, dist


def nearest_center_np(X, C, chunk=4096):
    n = X.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    c_sq = np.einsum("ij,ij->i", C, C)
    for lo in range(0, n, chunk):
        xb = X[lo:lo + chunk]
        d2 = np.einsum("ij,ij->i", xb, xb)[:, None] - 2.0 * (xb @ C.T) + c_sq[None, :]
        arg = np.argmin(d2, axis=1)
        labels[lo:lo + chunk] = arg
        # exact distance to the winner, not the cancellation-prone expansion
        diff = xb - C[arg]
        dist[lo:lo + chunk] = np.einsum("ij,ij->i", diff, diff)
    return labels, dist


if USE_NUMBA:
    online_sweep = online_sweep_nb
    roc_band_area = roc_band_area_nb
    nearest_center = nearest_center_nb
else:
    online_sweep = online_sweep_np
    roc_band_area = roc_band_area_np
    nearest_center = nearest_center_np
