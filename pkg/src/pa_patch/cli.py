"""Command-line entry point: ``pa-patch <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 patch gated
for audit, 4 local FP database locked by another writer.
"""
import argparse
import os
import shutil
import sys
import time

import numpy as np

from . import harness
from .errors import LockError, PatchError
from .impact import DEFAULT_K, DEFAULT_MAX_DROP, build_summaries, estimate_auc, gate_patch
from .io import (LocalFpDatabase, ModelBundle, fit_minmax, fmt, load_dataset, load_model,
                 load_summaries, save_dataset, save_model, save_summaries)
from .learner import PaConfig, SgdConfig, Variant, Verdict, correct, train_online
from .metrics import calibrate_threshold
from .model import Dataset, LabeledExample, LinearModel
from .rff import build_rff

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_AUDIT, EXIT_LOCKED = 0, 1, 2, 3, 4
SEED_ENV = "PA_PATCH_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _update_config(args):
    if args.algo == "pa":
        return PaConfig()
    if args.algo == "pa1":
        return PaConfig(Variant.REGULARIZED_C, args.c)
    return SgdConfig(args.lr, args.sgd_steps)


def _example(args, bundle):
    data = load_dataset(args.example)
    if not 0 <= args.row < len(data):
        raise UsageError(f"--row {args.row} out of range for {len(data)} example(s)")
    label = args.label if args.label is not None else int(data.y[args.row])
    raw = data.X[args.row]
    return raw, label, LabeledExample(bundle.featurize(raw), label)


def _print_kv(pairs, out=None):
    out = out or sys.stdout
    for key, value in pairs:
        if isinstance(value, (bool, np.bool_)):
            value = "true" if value else "false"
        elif isinstance(value, (int, np.integer)):
            value = str(int(value))
        elif isinstance(value, (float, np.floating)):
            value = f"{value:.6f}"
        out.write(f"{key}={value}\n")


def render_report(report):
    return "".join(f"{k}={v if isinstance(v, int) else format(v, '.6f')}\n"
                   for k, v in report.as_dict().items())


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_gen_data(args):
    spec = harness.SyntheticSpec(dim=args.dim, n_train=args.n_train, n_test=args.n_test,
                                 n_hard=args.n_hard, benign_frac=args.benign_frac, seed=_seed(args))
    train, test, hard = harness.generate(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, data in (("train", train), ("test", test), ("hard", hard)):
        save_dataset(os.path.join(args.out_dir, f"{name}.csv"), data)
    _print_kv([("train", len(train)), ("test", len(test)), ("hard", len(hard)), ("seed", spec.seed)])


def cmd_train(args):
    data = load_dataset(args.data)
    seed = _seed(args)
    minmax = fit_minmax(data.X) if args.normalize else None
    rff = build_rff(data.dim, args.rff_dim, args.gamma, seed) if args.rff_dim else None
    out_dim = rff.out_dim if rff is not None else data.dim
    bundle = ModelBundle(LinearModel.zeros(out_dim), data.dim, rff, minmax)
    feats = bundle.featurize_dataset(data)
    model = train_online(bundle.linear, feats, args.epochs, _update_config(args), seed)
    save_model(args.out, bundle.replace(model))
    _print_kv([("examples", len(data)), ("epochs", args.epochs), ("algo", args.algo), ("dim", out_dim)])


def cmd_calibrate(args):
    bundle = load_model(args.model)
    data = load_dataset(args.data)
    benign = data.benign()
    if len(benign) == 0:
        raise UsageError("calibration data contains no benign examples")
    theta = calibrate_threshold(bundle.scores(benign.X), args.target_fpr)
    save_model(args.out or args.model, bundle.replace(bundle.linear.with_threshold(theta)))
    _print_kv([("threshold", theta), ("target_fpr", args.target_fpr), ("benign", len(benign))])


def cmd_score(args):
    bundle = load_model(args.model)
    data = load_dataset(args.data)
    scores = bundle.scores(data.X)
    lines = ["label,score,alert"] + [f"{int(y)},{fmt(s)},{int(s >= bundle.threshold)}"
                                      for y, s in zip(data.y, scores)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_build_summaries(args):
    data = load_dataset(args.data)
    if args.model:
        data = load_model(args.model).featurize_dataset(data)
    summaries = build_summaries(data, args.k, _seed(args), args.max_iters)
    save_summaries(args.out, summaries)
    _print_kv([("k", summaries.k), ("n", summaries.total), ("dim", summaries.dim)])


def _impact(bundle, reference, ex, cfg, summaries):
    candidate, record = correct(bundle.linear, ex, cfg)
    if record.verdict is Verdict.PASSIVE:
        return candidate, record, 0.0
    impact = estimate_auc(candidate.weights, summaries) - estimate_auc(reference.linear.weights, summaries)
    return candidate, record, impact


def cmd_estimate_impact(args):
    bundle = load_model(args.model)
    reference = load_model(args.reference) if args.reference else bundle
    summaries = load_summaries(args.summaries)
    _, _, ex = _example(args, bundle)
    _, record, impact = _impact(bundle, reference, ex, _update_config(args), summaries)
    verdict = Verdict.PASSIVE if record.verdict is Verdict.PASSIVE else gate_patch(impact, args.max_drop)
    _print_kv([("impact", impact), ("verdict", verdict.value), ("tau", record.tau),
               ("margin_before", record.margin_before), ("margin_after", record.margin_after)])
    return EXIT_AUDIT if verdict is Verdict.AUDIT else EXIT_OK


def _timestamp(args):
    if args.timestamp is not None:
        return args.timestamp
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def cmd_patch(args):
    bundle = load_model(args.model)
    reference = load_model(args.reference) if args.reference else bundle
    raw, label, ex = _example(args, bundle)
    cfg = _update_config(args)
    if args.summaries:
        candidate, record, impact = _impact(bundle, reference, ex, cfg, load_summaries(args.summaries))
        verdict = Verdict.PASSIVE if record.verdict is Verdict.PASSIVE else gate_patch(impact, args.max_drop)
    else:
        candidate, record = correct(bundle.linear, ex, cfg)
        impact, verdict = None, record.verdict
    db = LocalFpDatabase(args.db)
    db.append(raw, label, verdict.value, impact, _timestamp(args))
    if verdict is Verdict.APPLIED:
        save_model(args.out, bundle.replace(candidate))
    elif os.path.abspath(args.out) != os.path.abspath(args.model):
        shutil.copyfile(args.model, args.out)
    _print_kv([("verdict", verdict.value), ("impact", np.nan if impact is None else impact),
               ("tau", record.tau), ("margin_before", record.margin_before),
               ("margin_after", record.margin_after if verdict is not Verdict.AUDIT else record.margin_before)])
    return EXIT_AUDIT if verdict is Verdict.AUDIT else EXIT_OK


def cmd_eval(args):
    bundle = load_model(args.model)
    data = bundle.featurize_dataset(load_dataset(args.data))
    report = harness.eval_fixed(bundle.linear, data, args.fpr_limit)
    sys.stdout.write(render_report(report))
    if args.fp_db:
        records = LocalFpDatabase(args.fp_db).records()
        fps = [r for r in records if r.label == -1]
        if fps:
            scores = bundle.scores(np.stack([r.features for r in fps]))
            covered = int(np.count_nonzero(scores < bundle.threshold))
        else:
            covered = 0
        _print_kv([("local_fp", len(fps)), ("local_fp_covered", covered),
                   ("covers_all_local_fp", covered == len(fps))])


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(r if isinstance(r, str) else ("%d" % r if isinstance(r, (int, np.integer)) else "%.9g" % r)
                              for r in row) + "\n")


def cmd_eval_adaptive(args):
    bundle = load_model(args.model)
    hard = bundle.featurize_dataset(load_dataset(args.hard))
    test = bundle.featurize_dataset(load_dataset(args.test))
    summaries = load_summaries(args.summaries) if args.summaries else None
    report = harness.eval_adaptive(bundle.linear, hard, test, args.trials, _update_config(args),
                                   summaries, _seed(args), args.fpr_limit)
    os.makedirs(args.out_dir, exist_ok=True)
    names = harness.METRICS + ("impact",)
    header = ["step"] + [f"{m}_{s}" for m in names for s in ("mean", "std")]
    rows = []
    for step in range(len(hard)):
        row = [step + 1]
        for m in names:
            row += [report.mean_trajectory(m)[step], report.std_trajectory(m)[step]]
        rows.append(row)
    _write_csv(os.path.join(args.out_dir, "trajectory.csv"), header, rows)
    _write_csv(os.path.join(args.out_dir, "errors.csv"), ["trial", "errors", "uncorrectable", "reverted"],
               [[t, e, u, r] for t, (e, u, r) in enumerate(zip(report.errors, report.uncorrectable,
                                                              report.reverted))])
    stats = report.error_stats()
    summary = [("algo", args.algo), ("trials", report.trials), ("n_hard", len(hard)),
               ("errors_mean", stats["mean"]), ("errors_std", stats["std"]),
               ("errors_min", stats["min"]), ("errors_max", stats["max"]),
               ("uncorrectable_total", int(report.uncorrectable.sum())),
               ("reverted_total", int(report.reverted.sum()))]
    summary += [(f"baseline_{m}", getattr(report.baseline, m)) for m in harness.METRICS]
    summary += [(f"final_{m}", report.final(m)) for m in names]
    with open(os.path.join(args.out_dir, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        _print_kv(summary, fh)
    _print_kv(summary)


def cmd_impact_calibration(args):
    bundle = load_model(args.model)
    train = bundle.featurize_dataset(load_dataset(args.train))
    test = bundle.featurize_dataset(load_dataset(args.test))
    summaries = load_summaries(args.summaries)
    result = harness.impact_calibration(bundle.linear, train, test, summaries, args.n_flips, _seed(args))
    if args.out:
        _write_csv(args.out, ["index", "estimated", "actual"],
                   [[int(i), e, a] for i, e, a in zip(result.indices, result.estimated, result.actual)])
    slope, intercept = result.fit()
    _print_kv([("n_flips", args.n_flips), ("pearson_r", result.pearson_r), ("slope", slope),
               ("intercept", intercept)])


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _add_update_flags(p, algos=("pa", "pa1", "sgd")):
    p.add_argument("--algo", choices=algos, default="pa")
    p.add_argument("--c", type=float, default=1.0, help="PA-I step cap")
    p.add_argument("--lr", type=float, default=0.01, help="SGD learning rate")
    p.add_argument("--sgd-steps", type=int, default=1, help="SGD steps per correction")


def _add_example_flags(p):
    p.add_argument("--example", required=True, help="dataset CSV holding the example")
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--label", type=int, choices=(-1, 1), help="override the row's label")
    p.add_argument("--reference", help="model to measure impact against (default: --model)")
    p.add_argument("--max-drop", type=float, default=DEFAULT_MAX_DROP)


def build_parser():
    parser = _Parser(prog="pa-patch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")
        return p

    p = add("gen-data", cmd_gen_data, "write synthetic train/test/hard CSVs")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--n-train", type=int, default=20_000)
    p.add_argument("--n-test", type=int, default=5_000)
    p.add_argument("--n-hard", type=int, default=58)
    p.add_argument("--benign-frac", type=float, default=0.592)

    p = add("train", cmd_train, "online training from zero weights")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--rff-dim", type=int, default=0, help="random Fourier features (0: off)")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--normalize", action="store_true", help="per-feature min-max scaling")
    _add_update_flags(p)

    p = add("calibrate", cmd_calibrate, "set the threshold for a target FPR")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.add_argument("--target-fpr", type=float, default=0.001)

    p = add("score", cmd_score, "score a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")

    p = add("build-summaries", cmd_build_summaries, "k-means cluster summaries")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="summarise in this model's feature space")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--max-iters", type=int, default=100)

    p = add("estimate-impact", cmd_estimate_impact, "estimate a patch's impact")
    p.add_argument("--model", required=True)
    p.add_argument("--summaries", required=True)
    _add_example_flags(p)
    _add_update_flags(p, ("pa", "pa1"))

    p = add("patch", cmd_patch, "apply a gated correction and log it")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--db", required=True, help="local FP database file")
    p.add_argument("--summaries")
    p.add_argument("--timestamp", help="default: $SOURCE_DATE_EPOCH or now")
    _add_example_flags(p)
    _add_update_flags(p)

    p = add("eval", cmd_eval, "fixed-scenario report")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--fpr-limit", type=float, default=0.001)
    p.add_argument("--fp-db", help="also check coverage of recorded FPs")

    p = add("eval-adaptive", cmd_eval_adaptive, "adaptive scenario over random orderings")
    p.add_argument("--model", required=True)
    p.add_argument("--hard", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--summaries")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--fpr-limit", type=float, default=0.001)
    p.add_argument("--out-dir", required=True)
    _add_update_flags(p)

    p = add("impact-calibration", cmd_impact_calibration, "label-flip check of the impact estimator")
    p.add_argument("--model", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--n-flips", type=int, default=200)
    p.add_argument("--out")
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        code = args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except LockError as exc:
        sys.stderr.write(f"pa-patch: {exc}\n")
        return EXIT_LOCKED
    except PatchError as exc:
        sys.stderr.write(f"pa-patch: {exc}\n")
        return EXIT_DATA
    except OSError as exc:
        sys.stderr.write(f"pa-patch: {exc}\n")
        return EXIT_DATA
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
