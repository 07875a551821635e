"""Command-line front end: ``qvarlab {gen,qvar,hqfs,qoda,verify}``.

Exit codes: 0 success, 1 validation failure (bad flags, bad input, failed
checks), 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import amplitude as ae
from . import metrics
from .datasets import (Dataset, DatasetError, SynthFsSpec, SynthOdSpec, gen_fs, gen_od,
                       load_csv, load_labels, make_result, save_csv, save_labels,
                       save_results)
from .hqfs import classical_feature_selection, feature_ranking, hqfs, sample_records
from .qoda import classical_comparison, outlier_count, qoda, rank_ascending
from .sim import BudgetError
from .variance import METHODS, EstimatorConfig, classical_variance, qvar
from .verify import GROUPS, run_checks

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; that code is reserved for runtime errors
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _schedule(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"schedule must be comma-separated integers: {text!r}")
    if not values or any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("schedule needs non-negative integers")
    return values


def _estimator_flags(p: argparse.ArgumentParser):
    p.add_argument("-i", "--input", required=True, help="numeric CSV, optional header line")
    p.add_argument("-o", "--output", help="result JSON path (default: stdout)")
    p.add_argument("--table", help="also write a per-item CSV table here")
    p.add_argument("--method", choices=METHODS, default="exact")
    p.add_argument("--s", type=int, default=6,
                   help="phase-register size for canonical AE; MLAE schedule length otherwise")
    p.add_argument("--shots", type=int,
                   help="readouts (canonical) or shots per round (mlae); 0 means exact "
                        f"probabilities; default 0 for canonical, {ae.DEFAULT_SHOTS_PER_ROUND} for mlae")
    p.add_argument("--schedule", type=_schedule, help="MLAE Grover powers, e.g. 0,1,2,4,8")
    p.add_argument("--backend", choices=("auto", "circuit", "analytic"), default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compare-classical", action="store_true")
    p.add_argument("--rbo-p", type=float, default=0.9)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qvarlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="write a synthetic dataset")
    gsub = gen.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    fs = gsub.add_parser("fs", help="feature-selection data: uniform informative + Gaussian noise")
    fs.add_argument("--records", type=int, default=32)
    fs.add_argument("--informative", type=int, default=7)
    fs.add_argument("--uninformative", type=int, default=3)
    fs.add_argument("--sigma", type=float, default=0.05)
    fs.add_argument("--seed", type=int, default=0)
    fs.add_argument("-o", "--output", default="synth_fs.csv")
    od = gsub.add_parser("od", help="outlier data: Gaussian inliers + uniform outliers")
    od.add_argument("--records", type=int, default=500)
    od.add_argument("--dims", type=int, default=20)
    od.add_argument("--contamination", type=float, default=0.02)
    od.add_argument("--min-outlier-distance", type=float, default=0.0)
    od.add_argument("--seed", type=int, default=0)
    od.add_argument("-o", "--output", default="synth_od.csv")
    od.add_argument("--labels", help="outlier index file (default: <output stem>_labels.txt)")

    qv = sub.add_parser("qvar", help="variance of each CSV column through QVAR")
    _estimator_flags(qv)

    hq = sub.add_parser("hqfs", help="variance-threshold feature selection")
    _estimator_flags(hq)
    hq.add_argument("-t", "--threshold", type=float, default=0.1)
    hq.add_argument("--sample-size", type=int,
                    help="score features on random record samples of this size")
    hq.add_argument("--trials", type=int, default=1)

    qo = sub.add_parser("qoda", help="angle-based outlier detection through QVAR")
    _estimator_flags(qo)
    qo.add_argument("-t", "--threshold", type=float,
                    help="flag records scoring at or below this value")
    qo.add_argument("--contamination", type=float, default=0.1,
                    help="without a threshold, flag the lowest ceil(c * M) scores")
    qo.add_argument("--labels", help="ground-truth outlier indices, one per line")
    qo.add_argument("--include-pivot", action="store_true",
                    help="encode the pivot's own south-pole row alongside the other records")

    ve = sub.add_parser("verify", help="run the invariant self-checks")
    ve.add_argument("--group", action="append", choices=list(GROUPS),
                    help="restrict to a check group (repeatable)")
    ve.add_argument("--seed", type=int, default=0)
    return parser


def _config(args) -> EstimatorConfig:
    shots = args.shots
    if shots is None:
        shots = ae.DEFAULT_SHOTS_PER_ROUND if args.method == "mlae" else 0
    if args.schedule is not None and args.method != "mlae":
        raise UsageError("--schedule only applies to --method mlae")
    if not 0 < args.rbo_p < 1:
        raise UsageError("--rbo-p must lie in (0, 1)")
    return EstimatorConfig(method=args.method, s=args.s, shots=shots,
                           schedule=args.schedule, seed=args.seed, backend=args.backend)


def _emit(args, doc: dict):
    if args.output:
        save_results(args.output, doc)
    else:
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


def _write_table(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_gen(args) -> int:
    if args.kind == "fs":
        data = gen_fs(SynthFsSpec(args.records, args.informative, args.uninformative,
                                  args.sigma, args.seed))
        save_csv(args.output, data)
        print(f"wrote {args.output} ({data.shape[0]} x {data.shape[1]})")
        return EXIT_OK
    data, labels = gen_od(SynthOdSpec(args.records, args.dims, args.contamination, args.seed,
                                      args.min_outlier_distance))
    out = Path(args.output)
    labels_path = args.labels or str(out.with_name(out.stem + "_labels.txt"))
    save_csv(out, data)
    save_labels(labels_path, labels)
    print(f"wrote {out} ({data.shape[0]} x {data.shape[1]}) and {labels_path} "
          f"({len(labels)} outliers)")
    return EXIT_OK


def _column_estimates(data: Dataset, config: EstimatorConfig):
    seeds = config.child_seeds(data.shape[1])
    return [qvar(col, s=config.s, method=config.method, shots=config.shots, rng_seed=sd,
                 schedule=list(config.schedule) if config.schedule else None,
                 backend=config.backend)
            for col, sd in zip(data.records.T, seeds)]


def cmd_qvar(args) -> int:
    config = _config(args)
    data = load_csv(args.input)
    ests = _column_estimates(data, config)
    variances = [e.variance for e in ests]
    estimates = [dict(e.as_dict(), feature=name) for e, name in zip(ests, data.feature_names)]
    metrics_doc = {}
    classical = [classical_variance(c) for c in data.records.T]
    if args.compare_classical:
        metrics_doc.update(metrics.error_stats(variances, classical))
        for e, c in zip(estimates, classical):
            e["classical"] = c
        metrics_doc["rbo"] = metrics.rbo(feature_ranking(variances),
                                         feature_ranking(classical), args.rbo_p)
    if args.table:
        _write_table(args.table, ["feature", "estimate", "classical"],
                     zip(data.feature_names, variances, classical))
    _emit(args, make_result("qvar", dict(config.as_dict(), input=args.input), estimates,
                            feature_ranking(variances), metrics_doc, args.seed))
    return EXIT_OK


def _hqfs_metrics(result, reference, n_features, p) -> dict:
    out = {"rbo": metrics.rbo(result.ranking, reference.ranking, p),
           "acc": metrics.acc(result.kept, reference.kept, n_features)}
    out.update(metrics.error_stats(result.variances, reference.variances))
    return out


def cmd_hqfs(args) -> int:
    config = _config(args)
    data = load_csv(args.input)
    n = data.shape[1]
    if args.sample_size is None:
        samples = [data]
    else:
        samples = sample_records(data, args.sample_size, args.trials, args.seed)
    trial_seeds = np.random.SeedSequence(args.seed).spawn(len(samples))
    trials = []
    for sample, ss in zip(samples, trial_seeds):
        trial_config = EstimatorConfig(config.method, config.s, config.shots, config.schedule,
                                       int(ss.generate_state(1, dtype=np.uint64)[0]),
                                       config.backend)
        result = hqfs(sample, args.threshold, trial_config)
        entry = {"result": result}
        if args.compare_classical:
            entry["metrics"] = _hqfs_metrics(result, classical_feature_selection(
                sample, args.threshold), n, args.rbo_p)
        trials.append(entry)
    first = trials[0]["result"]
    metrics_doc = {}
    if args.compare_classical:
        keys = trials[0]["metrics"].keys()
        metrics_doc = {k: float(np.mean([t["metrics"][k] for t in trials])) for k in keys}
    estimates = [dict(e, feature=name) for e, name in zip(first.estimates, data.feature_names)]
    extra = {"kept": first.kept, "dropped": first.dropped, "threshold": args.threshold}
    if len(trials) > 1:
        extra["trials"] = [{"kept": t["result"].kept, "ranking": t["result"].ranking,
                            "variances": t["result"].variances,
                            **({"metrics": t["metrics"]} if "metrics" in t else {})}
                           for t in trials]
    if args.table:
        _write_table(args.table, ["feature", "estimate", "kept"],
                     [(data.feature_names[j], first.variances[j], j in first.kept)
                      for j in range(n)])
    cfg = dict(config.as_dict(), input=args.input, sample_size=args.sample_size,
               trials=args.trials, rbo_p=args.rbo_p)
    _emit(args, make_result("hqfs", cfg, estimates, first.ranking, metrics_doc, args.seed,
                            **extra))
    return EXIT_OK


def cmd_qoda(args) -> int:
    config = _config(args)
    data = load_csv(args.input)
    X = data.records
    M = X.shape[0]
    result = qoda(X, threshold=args.threshold, config=config,
                  contamination=None if args.threshold is not None else args.contamination,
                  compare_classical=args.compare_classical, include_pivot=args.include_pivot)
    estimates = [dict(info, pivot=p, score=float(result.scores[p]))
                 for p, info in enumerate(result.details)]
    metrics_doc: dict = {}
    n_top = max(1, len(result.outliers)) if args.threshold is not None else \
        outlier_count(args.contamination, M)
    if args.compare_classical:
        angle_rank = rank_ascending(result.comparison["angle"])
        delta = result.comparison["delta"]
        metrics_doc["p_at_n"] = {str(k): metrics.precision_at_n(result.ranking, angle_rank, k)
                                 for k in sorted({n_top, min(5, M)})}
        metrics_doc["rbo"] = metrics.rbo(result.ranking, angle_rank, args.rbo_p)
        metrics_doc.update(metrics.error_stats(result.scores, delta))
        for e, a, d in zip(estimates, result.comparison["angle"], delta):
            e["classical_angle"], e["classical_delta"] = float(a), float(d)
    extra = {"outliers": result.outliers}
    if args.labels:
        truth = load_labels(args.labels)
        if any(not 0 <= t < M for t in truth):
            raise DatasetError(f"{args.labels}: label outside [0, {M})")
        hits = len(set(result.outliers) & set(truth))
        metrics_doc["label_recall"] = hits / len(truth) if truth else 1.0
        metrics_doc["label_precision"] = hits / len(result.outliers) if result.outliers else 0.0
    if args.table:
        _write_table(args.table, ["pivot", "score", "outlier"],
                     [(p, result.scores[p], p in result.outliers) for p in range(M)])
    cfg = dict(config.as_dict(), input=args.input, threshold=args.threshold,
               contamination=args.contamination, rbo_p=args.rbo_p,
               include_pivot=args.include_pivot)
    _emit(args, make_result("qoda", cfg, estimates, result.ranking, metrics_doc, args.seed,
                            **extra))
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_checks(args.group, args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.group}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVALID


COMMANDS = {"gen": cmd_gen, "qvar": cmd_qvar, "hqfs": cmd_hqfs, "qoda": cmd_qoda,
            "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (UsageError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
