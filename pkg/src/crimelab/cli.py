"""``crimelab`` command line.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from crimelab.errors import ConfigError, DataError, SchemaError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4

log = logging.getLogger("crimelab")


def _load_config(args):
    from crimelab.config import RunConfig

    if not args.config:
        raise ConfigError("--config is required")
    cfg = RunConfig.load(args.config)
    return cfg.with_overrides(seed=args.seed, output_dir=args.out)


def cmd_ingest(args) -> int:
    from crimelab.ingest import CleaningPolicy, ingest_csv

    policy = CleaningPolicy("sentinel" if args.sentinel else "drop")
    table = ingest_csv(args.csv, policy)
    out = Path(args.out or Path(args.csv).with_suffix(".npz"))
    if out.suffix == ".csv":
        table.to_csv(out)
    else:
        table.save_npz(out)
    print(json.dumps({"output": str(out), **table.counts}, sort_keys=True))
    return EXIT_OK


def _read_table(path, sentinel: bool):
    from crimelab.ingest import CleaningPolicy, ingest_csv
    from crimelab.table import FeatureTable

    path = Path(path)
    if path.suffix == ".npz":
        return FeatureTable.load_npz(path)
    return ingest_csv(path, CleaningPolicy("sentinel" if sentinel else "drop"))


def cmd_stats(args) -> int:
    from crimelab.analytics import write_exports

    table = _read_table(args.dataset, args.sentinel)
    written = write_exports(table, args.out or "stats")
    for p in written:
        print(p)
    return EXIT_OK


def cmd_train(args) -> int:
    from crimelab.runner import train_final

    cfg = _load_config(args)
    path = train_final(cfg, cfg.output_dir or "model")
    print(path)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from crimelab.runner import run_experiment

    cfg = _load_config(args)
    report = run_experiment(cfg, threads=args.threads, out_dir=cfg.output_dir or "report")
    summary = {k: report[k]["accuracy"] for k in ("cv10", "holdout") if k in report}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_compare(args) -> int:
    from crimelab.runner import compare_runs

    result = compare_runs(args.report_a, args.report_b, args.out)
    print(json.dumps(result.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_synth(args) -> int:
    from crimelab.synth import generate_synthetic

    path = generate_synthetic(args.out or "synthetic.csv", args.counts, args.dims, args.spread,
                              args.seed if args.seed is not None else 0, vary_time=args.vary_time)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crimelab", description="Crime-category classification experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="parse and encode a raw incident CSV")
    s.add_argument("csv")
    s.add_argument("--out", help="output .npz (default) or .csv")
    s.add_argument("--sentinel", action="store_true", help="fill gaps with the sentinel instead of dropping rows")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("stats", help="write pivot CSVs and GeoJSON grids")
    s.add_argument("dataset")
    s.add_argument("--out", help="output directory (default: stats)")
    s.add_argument("--sentinel", action="store_true")
    s.set_defaults(func=cmd_stats)

    for name, func, helptext in (("train", cmd_train, "fit on all rows and save the model"),
                                 ("evaluate", cmd_evaluate, "run the configured protocol and write a report")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True)
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--out", help="output directory (overrides the config)")
        s.set_defaults(func=func)

    s = sub.add_parser("compare", help="paired t-test between two cv reports")
    s.add_argument("report_a")
    s.add_argument("report_b")
    s.add_argument("--out", help="CSV file for the comparison row")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("synth", help="write a seeded Gaussian-blob dataset")
    s.add_argument("--counts", type=int, nargs="+", required=True)
    s.add_argument("--dims", type=int, default=2)
    s.add_argument("--spread", type=float, default=0.1)
    s.add_argument("--seed", type=int)
    s.add_argument("--vary-time", action="store_true")
    s.add_argument("--out", help="output CSV (default: synthetic.csv)")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, SchemaError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - mapped to the internal-error exit code
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
