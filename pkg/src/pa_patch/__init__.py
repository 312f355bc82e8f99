"""Patch a deployed linear malware scorer with Passive-Aggressive updates."""
from ._accel import backend
from .errors import (FormatError, LockError, NumericalError, PatchError, RejectedInputError,
                     UndefinedMetricError, VersionError)
from .impact import (ClusterSummary, SummarySet, build_summaries, estimate_auc, estimate_impact,
                     gate_patch)
from .learner import (PaConfig, PatchRecord, SgdConfig, Variant, Verdict, hinge_loss, pa_update,
                      sgd_update, train_online)
from .metrics import EvalReport, calibrate_threshold, partial_auc, rates_at_threshold, roc_auc
from .model import Dataset, LabeledExample, LinearModel, classify, score
from .rff import RffMap, build_rff, gamma_grid, transform

__version__ = "0.1.0"
