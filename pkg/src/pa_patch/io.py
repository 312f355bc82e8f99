"""Versioned text formats: models, cluster summaries, datasets, FP database.

Every real number is written with 17 significant digits, which round-trips
binary64 exactly.
"""
import csv
import hashlib
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import FormatError, LockError, RejectedInputError, VersionError
from .impact import SummarySet
from .model import Dataset, LinearModel
from .rff import RffMap, build_rff, transform

MODEL_TAG = "pa-model"
SUMMARY_TAG = "pa-summaries"
FPDB_TAG = "pa-fpdb"
VERSION = "v1"


def fmt(x):
    return "%.17g" % x


def _parse_float(token, line, path):
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"not a number: {token!r}", line, path) from None
    if not np.isfinite(value):
        raise FormatError(f"non-finite value: {token!r}", line, path)
    return value


def _parse_int(token, line, path):
    try:
        return int(token)
    except ValueError:
        raise FormatError(f"not an integer: {token!r}", line, path) from None


def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", path=path) from exc


def _check_header(tokens, tag, path):
    if not tokens or tokens[0] != tag:
        raise FormatError(f"expected '{tag} {VERSION}' header", 1, path)
    if len(tokens) < 2 or tokens[1] != VERSION:
        found = tokens[1] if len(tokens) > 1 else "<missing>"
        raise VersionError(f"unsupported {tag} version {found!r} (this build reads {VERSION})", 1, path)


# --------------------------------------------------------------------------
# models
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelBundle:
    """A linear model plus the feature pipeline it was trained behind.

    ``minmax`` holds per-feature (low, high) bounds from the training split;
    ``rff`` maps the (normalised) input to random Fourier features.
    """

    linear: LinearModel
    input_dim: int
    rff: Optional[RffMap] = None
    minmax: Optional[tuple] = None

    def __post_init__(self):
        expected = self.rff.out_dim if self.rff is not None else self.input_dim
        if self.linear.dim != expected:
            raise RejectedInputError(f"weights have length {self.linear.dim}, expected {expected}")
        if self.rff is not None and self.rff.dim != self.input_dim:
            raise RejectedInputError("rff input dimension disagrees with dim")

    @property
    def threshold(self):
        return self.linear.threshold

    def featurize(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.input_dim:
            raise RejectedInputError(f"expected {self.input_dim} features, got {X.shape[-1]}")
        if self.minmax is not None:
            lo, hi = self.minmax
            X = (X - lo) / _span(lo, hi)
        if self.rff is not None:
            X = transform(self.rff, X)
        return X

    def featurize_dataset(self, data):
        if self.minmax is None and self.rff is None:
            return data
        return Dataset(self.featurize(data.X), data.y)

    def scores(self, X):
        return self.linear.scores(np.atleast_2d(self.featurize(X)))

    def replace(self, linear):
        return ModelBundle(linear, self.input_dim, self.rff, self.minmax)


def _span(lo, hi):
    span = hi - lo
    return np.where(span > 0, span, 1.0)


def fit_minmax(X):
    X = np.asarray(X, dtype=np.float64)
    return X.min(axis=0), X.max(axis=0)


def save_model(path, model):
    """Write a :class:`ModelBundle` (or bare :class:`LinearModel`)."""
    if isinstance(model, LinearModel):
        model = ModelBundle(model, model.dim)
    lines = [f"{MODEL_TAG} {VERSION}", f"dim {model.input_dim}", f"threshold {fmt(model.threshold)}"]
    if model.minmax is not None:
        lo, hi = model.minmax
        lines.append("minmax " + " ".join(fmt(v) for v in np.concatenate([lo, hi])))
    if model.rff is not None:
        lines.append(f"rff {fmt(model.rff.gamma)} {model.rff.out_dim} {model.rff.seed}")
    lines.append("weights " + " ".join(fmt(v) for v in model.linear.weights))
    _write_text(path, "\n".join(lines) + "\n")


def load_model(path):
    lines = _read_lines(path)
    if not lines:
        raise FormatError("empty model file", 1, path)
    _check_header(lines[0].split(), MODEL_TAG, path)
    fields = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        tokens = raw.split()
        if not tokens:
            continue
        key = tokens[0]
        if key in fields:
            raise FormatError(f"duplicate '{key}' line", lineno, path)
        if key not in ("dim", "threshold", "minmax", "rff", "weights"):
            raise FormatError(f"unknown line '{key}'", lineno, path)
        fields[key] = (lineno, tokens[1:])
    for key in ("dim", "threshold", "weights"):
        if key not in fields:
            raise FormatError(f"missing '{key}' line", len(lines), path)

    lineno, vals = fields["dim"]
    if len(vals) != 1 or _parse_int(vals[0], lineno, path) < 1:
        raise FormatError("dim must be one positive integer", lineno, path)
    dim = int(vals[0])
    lineno, vals = fields["threshold"]
    if len(vals) != 1:
        raise FormatError("threshold takes one value", lineno, path)
    threshold = _parse_float(vals[0], lineno, path)

    minmax = None
    if "minmax" in fields:
        lineno, vals = fields["minmax"]
        if len(vals) != 2 * dim:
            raise FormatError(f"minmax needs {2 * dim} values, got {len(vals)}", lineno, path)
        bounds = np.array([_parse_float(v, lineno, path) for v in vals])
        minmax = (bounds[:dim], bounds[dim:])

    rff = None
    n_weights = dim
    if "rff" in fields:
        lineno, vals = fields["rff"]
        if len(vals) != 3:
            raise FormatError("rff line is 'rff <gamma> <D> <seed>'", lineno, path)
        gamma = _parse_float(vals[0], lineno, path)
        out_dim = _parse_int(vals[1], lineno, path)
        seed = _parse_int(vals[2], lineno, path)
        try:
            rff = build_rff(dim, out_dim, gamma, seed)
        except RejectedInputError as exc:
            raise FormatError(str(exc), lineno, path) from exc
        n_weights = out_dim

    lineno, vals = fields["weights"]
    if len(vals) != n_weights:
        raise FormatError(f"weights line has {len(vals)} values, expected {n_weights}", lineno, path)
    weights = np.array([_parse_float(v, lineno, path) for v in vals])
    return ModelBundle(LinearModel(weights, threshold), dim, rff, minmax)


# --------------------------------------------------------------------------
# cluster summaries
# --------------------------------------------------------------------------

def save_summaries(path, summaries):
    lines = [f"{SUMMARY_TAG} {VERSION} dim={summaries.dim} k={summaries.k}"]
    for center, size, frac in zip(summaries.centers, summaries.sizes, summaries.fractions):
        lines.append(",".join([str(int(size)), fmt(frac)] + [fmt(c) for c in center]))
    _write_text(path, "\n".join(lines) + "\n")


def load_summaries(path):
    lines = _read_lines(path)
    if not lines:
        raise FormatError("empty summary file", 1, path)
    head = lines[0].split()
    _check_header(head, SUMMARY_TAG, path)
    params = {}
    for tok in head[2:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise FormatError(f"bad header field {tok!r}", 1, path)
        params[key] = _parse_int(val, 1, path)
    if "dim" not in params or "k" not in params:
        raise FormatError("header must carry dim= and k=", 1, path)
    dim, k = params["dim"], params["k"]
    rows = [(i, ln) for i, ln in enumerate(lines[1:], start=2) if ln.strip()]
    if len(rows) != k:
        raise FormatError(f"header says k={k} but found {len(rows)} rows", len(lines), path)
    sizes = np.empty(k, dtype=np.int64)
    fracs = np.empty(k)
    centers = np.empty((k, dim))
    for j, (lineno, ln) in enumerate(rows):
        parts = ln.split(",")
        if len(parts) != dim + 2:
            raise FormatError(f"expected {dim + 2} fields, got {len(parts)}", lineno, path)
        sizes[j] = _parse_int(parts[0], lineno, path)
        fracs[j] = _parse_float(parts[1], lineno, path)
        centers[j] = [_parse_float(p, lineno, path) for p in parts[2:]]
    try:
        return SummarySet(centers, sizes, fracs)
    except RejectedInputError as exc:
        raise FormatError(str(exc), path=path) from exc


# --------------------------------------------------------------------------
# datasets
# --------------------------------------------------------------------------

def save_dataset(path, data):
    header = "label," + ",".join(f"f{j}" for j in range(data.dim))
    out = [header]
    for x, y in zip(data.X, data.y):
        out.append(canonical_row(x, int(y)))
    _write_text(path, "\n".join(out) + "\n")


def canonical_row(x, label):
    return f"{label}," + ",".join(fmt(v) for v in x)


def load_dataset(path):
    lines = _read_lines(path)
    if not lines:
        raise FormatError("empty dataset file", 1, path)
    header = lines[0].strip().split(",")
    dim = len(header) - 1
    if header[0] != "label" or dim < 1 or header[1:] != [f"f{j}" for j in range(dim)]:
        raise FormatError("header must be 'label,f0,...,f{d-1}'", 1, path)
    X, y = [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != dim + 1:
            raise FormatError(f"expected {dim + 1} fields, got {len(parts)}", lineno, path)
        if parts[0] not in ("-1", "1"):
            raise FormatError(f"label must be -1 or 1, got {parts[0]!r}", lineno, path)
        y.append(int(parts[0]))
        X.append([_parse_float(p, lineno, path) for p in parts[1:]])
    return Dataset(np.array(X, dtype=np.float64).reshape(len(y), dim), np.array(y, dtype=np.int8))


def _write_text(path, text):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


# --------------------------------------------------------------------------
# local false-positive database
# --------------------------------------------------------------------------

def example_hash(x, label):
    return hashlib.sha256(canonical_row(x, label).encode("ascii")).hexdigest()


@dataclass(frozen=True)
class FpRecord:
    example_hash: str
    label: int
    timestamp: str
    verdict: str
    estimated_impact: Optional[float]
    features: np.ndarray


class LocalFpDatabase:
    """Append-only log of patch decisions, one CSV row per event.

    A sibling ``.lock`` file guards writers; a second concurrent writer gets
    :class:`LockError` rather than interleaving rows.
    """

    FIELDS = ("hash", "label", "timestamp", "verdict", "impact", "features")

    def __init__(self, path):
        self.path = path

    @property
    def lock_path(self):
        return f"{self.path}.lock"

    def append(self, x, label, verdict, impact=None, timestamp=""):
        x = np.asarray(x, dtype=np.float64)
        try:
            fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise LockError(f"{self.lock_path} exists: another writer is active") from None
        try:
            new = not os.path.exists(self.path) or os.path.getsize(self.path) == 0
            with open(self.path, "a", encoding="utf-8", newline="") as fh:
                if new:
                    fh.write(f"{FPDB_TAG} {VERSION}\n")
                    fh.write(",".join(self.FIELDS) + "\n")
                row = [example_hash(x, label), str(int(label)), str(timestamp), str(verdict),
                       "" if impact is None else fmt(impact), " ".join(fmt(v) for v in x)]
                csv.writer(fh, lineterminator="\n").writerow(row)
        finally:
            os.close(fd)
            os.unlink(self.lock_path)
        return row[0]

    def records(self):
        if not os.path.exists(self.path):
            return []
        lines = _read_lines(self.path)
        if not lines:
            return []
        _check_header(lines[0].split(), FPDB_TAG, self.path)
        if len(lines) < 2 or lines[1].split(",") != list(self.FIELDS):
            raise FormatError("missing column header", 2, self.path)
        out = []
        for lineno, row in enumerate(csv.reader(lines[2:]), start=3):
            if not row:
                continue
            if len(row) != len(self.FIELDS):
                raise FormatError(f"expected {len(self.FIELDS)} fields, got {len(row)}", lineno, self.path)
            h, label, ts, verdict, impact, feats = row
            x = np.array([_parse_float(v, lineno, self.path) for v in feats.split()])
            if example_hash(x, int(label)) != h:
                raise FormatError("hash does not match stored features", lineno, self.path)
            out.append(FpRecord(h, int(label), ts, verdict,
                                None if impact == "" else _parse_float(impact, lineno, self.path), x))
        return out
