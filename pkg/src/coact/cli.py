"""Command line: run scenarios, verify traces, serve sessions."""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

from . import runner
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="coact")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario headlessly")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--max-ticks", type=int, default=300)
    p_run.add_argument("--human", default=None,
                       help="override every human policy kind")
    p_run.add_argument("--policy-mode", default=None,
                       choices=["efficient", "teach", "balanced"])
    p_run.add_argument("--trace", default=None, help="write NDJSON trace here")
    p_run.add_argument("--report", default=None, help="write JSON report here")

    p_replay = sub.add_parser("replay", help="verify a trace byte-for-byte")
    p_replay.add_argument("trace")

    p_serve = sub.add_parser("serve", help="serve a scenario over WebSocket")
    p_serve.add_argument("scenario")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--host", default="127.0.0.1")

    args = parser.parse_args(argv)

    if args.command == "run":
        report, lines, _session = runner.run(
            args.scenario, seed=args.seed, human_kind=args.human,
            policy_mode=args.policy_mode, max_ticks=args.max_ticks)
        if args.trace:
            runner.write_trace(lines, args.trace)
        if args.report:
            runner.write_report(report, args.report)
        print(json.dumps(report.to_wire(), indent=2, sort_keys=True))
        return 0 if report.goal_achieved or not report.abort_reason else 1

    if args.command == "replay":
        status, detail = runner.replay_file(args.trace)
        if status == runner.VERIFIED:
            print("verified")
            return 0
        print(f"mismatch at tick {detail[0]}, field {detail[1]}")
        return 1

    if args.command == "serve":
        with open(args.scenario, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        print(f"serving {args.scenario} on ws://{args.host}:{args.port}")
        try:
            asyncio.run(serve(raw, host=args.host, port=args.port))
        except KeyboardInterrupt:
            pass
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
