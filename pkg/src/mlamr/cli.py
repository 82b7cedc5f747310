"""Command-line interface.

Subcommands::

    mlamr run CONFIG [--out DIR] [--workers N] [--no-amr] [--text-frames]
    mlamr report STATS_AMR STATS_UNIFORM [--out PATH]
    mlamr compare FRAME_A FRAME_B [--norm {l1,linf,all}]

Exit codes: 0 success, 2 configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import (
    CflViolationError,
    ConfigError,
    FrameFormatError,
    MlamrError,
    NumericalAbortError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("mlamr")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlamr",
        description="Adaptive mesh refinement for two-layer shallow water flow",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument(
        "--no-amr", action="store_true",
        help="run the equivalent uniform grid at the finest resolution",
    )
    p_run.add_argument(
        "--text-frames", action="store_true",
        help="write frames as hexfloat CSV text instead of binary",
    )

    p_rep = sub.add_parser("report", help="timing/work table from two stats files")
    p_rep.add_argument("stats_amr")
    p_rep.add_argument("stats_uniform", nargs="?", default=None)
    p_rep.add_argument("--out", default=None, help="report path (default stdout)")

    p_cmp = sub.add_parser("compare", help="norms of the difference of two frames")
    p_cmp.add_argument("frame_a")
    p_cmp.add_argument("frame_b")
    p_cmp.add_argument("--norm", choices=("l1", "linf", "all"), default="l1")
    return parser


def _cmd_run(args) -> int:
    from .config import parse_config
    from .driver import run_simulation

    cfg = parse_config(args.config)
    stats = run_simulation(
        cfg,
        out_dir=args.out,
        workers=args.workers,
        amr=not args.no_amr,
        text_frames=args.text_frames,
    )
    print(
        f"completed: {stats.num_coarse_steps} coarse steps, "
        f"{stats.total_cell_updates} cell updates, "
        f"wall {stats.wall_time:.3f}s, cpu {stats.cpu_time:.3f}s"
    )
    return EXIT_OK


def _cmd_report(args) -> int:
    from .driver import RunStats
    from .report import format_report, write_report

    stats_amr = RunStats.from_json(args.stats_amr)
    stats_uniform = (
        RunStats.from_json(args.stats_uniform) if args.stats_uniform else None
    )
    if args.out:
        text = write_report(stats_amr, stats_uniform, args.out)
    else:
        text = format_report(stats_amr, stats_uniform)
    print(text, end="")
    return EXIT_OK


def _cmd_compare(args) -> int:
    from .frames import l1_diff, read_frame

    diffs = l1_diff(read_frame(args.frame_a), read_frame(args.frame_b))
    for key in sorted(diffs):
        if args.norm != "all" and not key.endswith(args.norm):
            continue
        print(f"{key} {diffs[key]!r}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "compare":
            return _cmd_compare(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (NumericalAbortError, CflViolationError) as exc:
        log.error("numerical abort: %s", exc)
        return EXIT_NUMERICAL
    except (FrameFormatError, MlamrError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
