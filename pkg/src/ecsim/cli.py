import argparse
import logging
import sys
from dataclasses import replace

from . import selftest
from .errors import ConfigError, DataLossError, TraceParseError
from .experiment import (
    WorkloadEntry, compare, load_config, render_comparison, reports_from_csv, run, summary,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA_LOSS = 3
EXIT_IO = 4

log = logging.getLogger("ecsim")


def _config(args):
    cfg = load_config(args.config, args.set)
    if args.output_dir:
        cfg = replace(cfg, output_dir=args.output_dir)
    return cfg


def cmd_run(args) -> int:
    result = run(_config(args))
    sys.stdout.write(summary(result))
    return EXIT_OK


def cmd_trace_replay(args) -> int:
    cfg = _config(args)
    name = args.name or "trace"
    cfg = replace(cfg, workloads=(WorkloadEntry(name, trace=args.trace),))
    result = run(cfg)
    sys.stdout.write(summary(result))
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        reports = reports_from_csv(args.csv)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(render_comparison(compare(reports)))
    return EXIT_OK


def cmd_selftest(args) -> int:
    return EXIT_OK if selftest.run_all() else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ecsim",
        description="Erasure coding vs replication simulator for flash storage clusters.",
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def config_args(sp):
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("--output-dir", help="override run.output_dir")

    sp = sub.add_parser("run", help="run every backend x workload cell of a config")
    sp.add_argument("config")
    config_args(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("trace-replay", help="replay a timestamp,op,offset,length trace")
    sp.add_argument("trace")
    sp.add_argument("config")
    sp.add_argument("--name", help="workload name in the reports (default: trace)")
    config_args(sp)
    sp.set_defaults(func=cmd_trace_replay)

    sp = sub.add_parser("compare", help="ratios of report CSVs against a baseline")
    sp.add_argument("csv", nargs="+")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("selftest", help="exhaustive GF(2^8) and codec checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TraceParseError) as exc:
        print(f"ecsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataLossError as exc:
        print(f"ecsim: data loss: {exc}", file=sys.stderr)
        return EXIT_DATA_LOSS
    except OSError as exc:
        print(f"ecsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
