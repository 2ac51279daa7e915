"""Command-line entry point: ``divctx <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from ._random import derive_seed
from .catalog import corpus_stats, derive_numeric_bounds, dump_catalog, dump_log, read_catalog, read_log
from .diversity import DEFAULT_K, calibrate_corpus, run_corpus
from .evaluation import (
    DEFAULT_GAP_SECONDS,
    GroundTruthReport,
    H1Report,
    SweepRow,
    SyntheticSpec,
    TypeSplitRow,
    all_changes,
    evaluate_ground_truth,
    generate_synthetic,
    run_h1,
    sparsity_sweep,
    type_split_experiment,
)
from .exceptions import CalibrationError, DivctxError
from .reports import atomic_write, columns_of, to_csv, to_jsonl, trace_records
from .schema import dump_schema, read_schema, schema_to_dict

log = logging.getLogger("divctx")

STATS_COLUMNS = ["attribute", "kind", "count", "min", "max", "mean", "sd", "absent"]
CALIBRATION_COLUMNS = ["tau", "mean", "sd", "n", "k"]


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _corpus_flags(p, log_required=True):
    p.add_argument("--schema", required=True, help="schema document (YAML/JSON)")
    p.add_argument("--catalog", required=True, help="item records, one JSON object per line")
    if log_required:
        p.add_argument("--log", required=True, help="consultation records, one JSON object per line")


def _common_flags(p, seed_required=False):
    p.add_argument("-k", type=int, default=DEFAULT_K, help="history size (default: %(default)s)")
    p.add_argument("--tau", type=float, default=None, help="diversity threshold; calibrated when omitted")
    p.add_argument("--gap-seconds", type=int, default=DEFAULT_GAP_SECONDS,
                   help="session gap threshold in seconds (default: %(default)s)")
    p.add_argument("--seed", type=int, required=seed_required, default=None)
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divctx", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="per-attribute corpus statistics")
    _corpus_flags(p, log_required=False)
    p.add_argument("--out", required=True)

    p = sub.add_parser("calibrate", help="compute tau as the mean relative diversity")
    _corpus_flags(p)
    p.add_argument("-k", type=int, default=DEFAULT_K)
    p.add_argument("--out", required=True)

    p = sub.add_parser("detect", help="diversity trace and context changes")
    _corpus_flags(p)
    _common_flags(p)

    p = sub.add_parser("h1", help="align detected changes with session starts")
    _corpus_flags(p)
    _common_flags(p)

    p = sub.add_parser("h2", help="sparsity sweep")
    _corpus_flags(p)
    _common_flags(p, seed_required=True)
    p.add_argument("--rates", type=_float_list, required=True, help="comma-separated sparsity rates")

    p = sub.add_parser("h3", help="multi-type catalog experiment")
    _corpus_flags(p)
    _common_flags(p, seed_required=True)
    p.add_argument("--types", type=int, default=4)
    p.add_argument("--attrs-per-type", type=_int_list, required=True, help="x values, comma-separated")
    p.add_argument("--min-common", type=_int_list, required=True, help="y values, comma-separated")
    p.add_argument("--runs", type=int, default=10)

    p = sub.add_parser("synth", help="generate a planted-context corpus and score detection on it")
    p.add_argument("--schema", default=None, help="schema document (default: built-in 8-attribute schema)")
    _common_flags(p, seed_required=True)
    p.add_argument("--users", type=int, default=20)
    p.add_argument("--contexts", type=int, default=10)
    p.add_argument("--items-per-context", type=int, default=15)
    p.add_argument("--shift", type=float, default=1.0, help="fraction of attributes redrawn per boundary")
    p.add_argument("--gap-prob", type=float, default=1.0, help="probability a boundary is a session gap")
    p.add_argument("--noise", type=float, default=0.0, help="numeric within-context noise (fraction of range)")
    p.add_argument("--window", type=int, default=0, help="ground-truth index tolerance")
    return parser


def _load(args):
    schema = read_schema(args.schema)
    catalog = read_catalog(args.catalog, schema)
    streams = read_log(args.log, catalog)
    return schema, catalog, streams


def _resolve_tau(args, catalog, streams, config):
    if args.tau is not None:
        config["tau"] = args.tau
        config["tau_source"] = "flag"
        return args.tau
    cal = calibrate_corpus(catalog, streams, args.k)
    log.info("calibrated tau=%r over %d points", cal.tau, cal.n)
    config.update(tau=cal.tau, tau_source="calibration", rd_mean=cal.mean, rd_sd=cal.sd)
    return cal.tau


def _base_config(args) -> dict:
    config = {"command": args.command, "version": __version__}
    for key in ("schema", "catalog", "log", "k", "gap_seconds", "seed"):
        if hasattr(args, key):
            value = getattr(args, key)
            config[key] = os.path.abspath(value) if key in ("schema", "catalog", "log") and value else value
    return config


def _write(out, files: dict, config: dict):
    files = dict(files)
    files["config.json"] = json.dumps(config, indent=2, sort_keys=True) + "\n"
    for name, text in files.items():
        atomic_write(os.path.join(out, name), text)
        log.info("wrote %s", os.path.join(out, name))


def cmd_stats(args):
    schema = read_schema(args.schema, require_bounds=False)
    catalog = read_catalog(args.catalog, schema)
    rows = [dict(attribute=s.name, kind=s.kind, count=s.count, min=s.min, max=s.max, mean=s.mean, sd=s.sd,
                 absent=s.absent) for s in corpus_stats(catalog)]
    for row in rows:
        if row["absent"]:
            log.warning("attribute %r has no value in the catalog", row["attribute"])
    _write(args.out, {"stats.csv": to_csv(rows, STATS_COLUMNS)}, _base_config(args))


def cmd_calibrate(args):
    _, catalog, streams = _load(args)
    cal = calibrate_corpus(catalog, streams, args.k)
    row = dict(tau=cal.tau, mean=cal.mean, sd=cal.sd, n=cal.n, k=args.k)
    print(f"tau={cal.tau!r} mean={cal.mean!r} sd={cal.sd!r} n={cal.n}")
    config = _base_config(args) | {"tau": cal.tau}
    _write(args.out, {"calibration.csv": to_csv([row], CALIBRATION_COLUMNS)}, config)


def cmd_detect(args):
    _, catalog, streams = _load(args)
    config = _base_config(args)
    tau = _resolve_tau(args, catalog, streams, config)
    results = run_corpus(catalog, streams, args.k, tau)
    changes = all_changes(results)
    print(f"total changes: {len(changes)}")
    _write(args.out, {
        "trace.jsonl": to_jsonl(trace_records(streams, results)),
        "changes.jsonl": to_jsonl(changes),
        "changes.csv": to_csv(changes, ["user_id", "index", "item_id", "rd_value"]),
    }, config)


def cmd_h1(args):
    _, catalog, streams = _load(args)
    config = _base_config(args)
    tau = _resolve_tau(args, catalog, streams, config)
    report, _ = run_h1(catalog, streams, args.k, tau, args.gap_seconds)
    print(f"sessions: {report.total_sessions}  detected: {report.detected_sessions}  "
          f"rate: {100 * report.session_rate:.2f} %  implicit contexts: {report.non_session_changes}  "
          f"total changes: {report.total_changes}")
    _write(args.out, {"h1.csv": to_csv([report], columns_of(H1Report)), "h1.jsonl": to_jsonl([report])}, config)


def cmd_h2(args):
    _, catalog, streams = _load(args)
    config = _base_config(args)
    tau = _resolve_tau(args, catalog, streams, config)
    rows = sparsity_sweep(catalog, streams, None, args.k, tau, args.rates, args.seed, args.gap_seconds)
    config.update(rates=args.rates, sub_seeds={repr(r.sparsity): r.seed for r in rows})
    _write(args.out, {"sweep.csv": to_csv(rows, columns_of(SweepRow)), "sweep.jsonl": to_jsonl(rows)}, config)


def cmd_h3(args):
    _, catalog, streams = _load(args)
    config = _base_config(args)
    tau = _resolve_tau(args, catalog, streams, config)
    rows, sub_seeds = [], {}
    for x in args.attrs_per_type:
        for y in args.min_common:
            if y > x:
                continue
            rows.append(type_split_experiment(catalog, streams, None, args.k, tau, args.types, x, y,
                                              args.runs, args.seed, args.gap_seconds))
            sub_seeds[f"{x},{y}"] = [derive_seed(args.seed, "h3", args.types, x, y, r) for r in range(args.runs)]
    config.update(types=args.types, attrs_per_type=args.attrs_per_type, min_common=args.min_common,
                  runs=args.runs, sub_seeds=sub_seeds)
    _write(args.out, {"types.csv": to_csv(rows, columns_of(TypeSplitRow)), "types.jsonl": to_jsonl(rows)}, config)


def cmd_synth(args):
    schema = read_schema(args.schema) if args.schema else None
    spec = SyntheticSpec(args.users, args.contexts, args.items_per_context, args.shift, args.gap_prob,
                         args.seed, args.noise)
    corpus = generate_synthetic(spec, schema)
    catalog, streams = corpus.catalog, corpus.streams
    config = _base_config(args) | {"synthetic": {**spec.__dict__}, "window": args.window}
    tau = _resolve_tau(args, catalog, streams, config)
    h1, results = run_h1(catalog, streams, args.k, tau, args.gap_seconds)
    gt = evaluate_ground_truth(all_changes(results), corpus.ground_truth, args.window)
    print(f"recall: {gt.recall:.4f}  precision: {gt.precision:.4f}  "
          f"session rate: {h1.session_rate:.4f}  detectable session rate: {h1.detectable_rate:.4f}")
    _write(args.out, {
        "schema.yaml": dump_schema(catalog.schema),
        "catalog.jsonl": dump_catalog(catalog),
        "log.jsonl": dump_log(streams),
        "ground_truth.json": json.dumps(corpus.ground_truth, sort_keys=True) + "\n",
        "ground_truth.csv": to_csv([gt], columns_of(GroundTruthReport)),
        "h1.csv": to_csv([h1], columns_of(H1Report)),
    }, config | {"schema_document": schema_to_dict(catalog.schema)})


COMMANDS = {
    "stats": cmd_stats,
    "calibrate": cmd_calibrate,
    "detect": cmd_detect,
    "h1": cmd_h1,
    "h2": cmd_h2,
    "h3": cmd_h3,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except CalibrationError as exc:
        print(f"divctx: calibration failure: {exc}", file=sys.stderr)
        return 1
    except (DivctxError, OSError, ValueError) as exc:
        print(f"divctx: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
