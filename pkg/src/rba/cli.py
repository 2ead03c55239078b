"""Command-line entry points.

    rba replay  --dataset logins.csv --start 0 --count 1000 \
                --config risk.conf --out scores.csv
    rba compare --a scores.csv --b reference.csv --tol 1e-9
    rba shard   --dataset logins.csv --n 4
    rba serve   --config service.conf

``compare`` exits nonzero on any difference beyond tolerance or on a
structural mismatch.  ``serve`` falls back to the ``RBA_CONFIG``
environment variable when ``--config`` is omitted.
"""

from __future__ import annotations

import argparse
import sys

from .config import RiskConfig, load_risk_config, load_service_config
from .replay import (compare, format_score, load_column_mapping, load_dataset,
                     replay, shard, write_scores)


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, help="login dataset CSV")
    parser.add_argument("--mapping", default=None,
                        help="JSON file overriding dataset column headers")


def _cmd_replay(args: argparse.Namespace) -> int:
    columns = load_column_mapping(args.mapping)
    rows = load_dataset(args.dataset, columns)
    config = load_risk_config(args.config) if args.config else RiskConfig()
    results = replay(rows, start=args.start, count=args.count, config=config,
                     include_rtt=args.include_rtt,
                     history_cap=config.history_cap if args.apply_history_cap else None)
    if args.out:
        write_scores(results, args.out)
        print(f"{len(results)} scores written to {args.out}")
    else:
        for global_index, user_id, score in results:
            print(f"{global_index},{user_id},{format_score(score)}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    report = compare(args.a, args.b, tol=args.tol)
    print(report.summary())
    return 0 if report.ok else 1


def _cmd_shard(args: argparse.Namespace) -> int:
    columns = load_column_mapping(args.mapping)
    rows = load_dataset(args.dataset, columns)
    for index, (start, count) in enumerate(shard(rows, args.n)):
        print(f"{index},{start},{count}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import build_app

    config = load_service_config(args.config)
    app = build_app(config)
    uvicorn.run(app, host=config.bind_host, port=config.bind_port,
                log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rba")
    sub = parser.add_subparsers(dest="command", required=True)

    p_replay = sub.add_parser("replay", help="replay a dataset through the engine")
    _add_dataset_args(p_replay)
    p_replay.add_argument("--start", type=int, default=0)
    p_replay.add_argument("--count", type=int, default=None)
    p_replay.add_argument("--config", default=None, help="risk config file")
    p_replay.add_argument("--out", default=None, help="output CSV (default stdout)")
    p_replay.add_argument("--include-rtt", action="store_true",
                          help="score the RTT feature as well")
    p_replay.add_argument("--apply-history-cap", action="store_true",
                          help="evict per-user entries beyond history_cap")
    p_replay.set_defaults(func=_cmd_replay)

    p_compare = sub.add_parser("compare", help="diff two score files")
    p_compare.add_argument("--a", required=True)
    p_compare.add_argument("--b", required=True)
    p_compare.add_argument("--tol", type=float, default=1e-9)
    p_compare.set_defaults(func=_cmd_compare)

    p_shard = sub.add_parser("shard", help="print contiguous shard boundaries")
    _add_dataset_args(p_shard)
    p_shard.add_argument("--n", type=int, required=True)
    p_shard.set_defaults(func=_cmd_shard)

    p_serve = sub.add_parser("serve", help="run the authentication service")
    p_serve.add_argument("--config", default=None,
                         help="service config file (default: $RBA_CONFIG)")
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
