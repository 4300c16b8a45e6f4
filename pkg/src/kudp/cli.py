"""``kudp`` command line: simulate, tables, send, recv.

Every flag can also be supplied through an environment variable named
``KUDP_`` plus the flag name in upper case with dashes as underscores
(``--test-mode`` -> ``KUDP_TEST_MODE``). Explicit flags win over the
environment.

Exit status is 0 on success, 1 for runtime failures and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Callable, Sequence, TextIO

from kudp import __version__
from kudp.channel import HazardConfig
from kudp.keying import EmptyStream, KeySpecError, PortKey
from kudp.sim import (
    DEFAULT_RUNS,
    DEFAULT_SEED,
    JointHazardUnsupported,
    RunConfig,
    reproduce_tables,
    run_simulation,
    table_row,
    write_csv,
)
from kudp.transport import (
    DEFAULT_IDLE_TIMEOUT,
    DEFAULT_MTU,
    NoDataReceived,
    OversizedPayload,
    SocketFailure,
    TransferConfig,
    payloads_from_files,
    receive_stream,
    send_stream,
)

ENV_PREFIX = "KUDP_"
USAGE_ERROR = 2
RUNTIME_ERROR = 1


def key_arg(text: str) -> PortKey:
    try:
        return PortKey.parse(text)
    except KeySpecError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def percent_arg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 <= value <= 100.0:
        raise argparse.ArgumentTypeError(f"{text} is outside 0-100")
    return round(value, 2)


def _bounded_int(low: int, high: int | None = None) -> Callable[[str], int]:
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
        if value < low or (high is not None and value > high):
            span = f">= {low}" if high is None else f"in {low}..{high}"
            raise argparse.ArgumentTypeError(f"{value} must be {span}")
        return value

    return parse


def millis_arg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number of milliseconds") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"{text} must be >= 0")
    return value


def _bool_env(text: str) -> bool:
    return text.strip().lower() in {"1", "true", "yes", "on"}


class UsageError(Exception):
    pass


def _apply_env(parser: argparse.ArgumentParser, env: dict[str, str]) -> None:
    """Turn ``KUDP_*`` variables into parser defaults (required flags included)."""
    for action in parser._actions:
        long_opts = [o for o in action.option_strings if o.startswith("--")]
        if not long_opts or action.dest == "help":
            continue
        name = ENV_PREFIX + long_opts[0][2:].upper().replace("-", "_")
        if name not in env:
            continue
        raw = env[name]
        if isinstance(action, argparse._StoreTrueAction):
            action.default = _bool_env(raw)
            continue
        try:
            action.default = action.type(raw) if action.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"{name}: {exc}") from None
        action.required = False


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="kudp",
        description="Keyed UDP: round-robin destination-port keying and stream reconstruction.",
        epilog=f"Flags may be set through {ENV_PREFIX}<FLAG> environment variables.",
        formatter_class=fmt,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sim = sub.add_parser("simulate", help="Monte-Carlo efficiency for one key and hazard", formatter_class=fmt)
    sim.add_argument("--key", type=key_arg, required=True, help="port key as BASE:K")
    sim.add_argument("--loss", type=percent_arg, default=0.0, help="loss threshold in percent")
    sim.add_argument("--swap", type=percent_arg, default=0.0, help="swap threshold in percent")
    sim.add_argument("--runs", type=_bounded_int(1), default=DEFAULT_RUNS, help="independent runs")
    sim.add_argument("--length", type=_bounded_int(1), default=None, help="packets per stream, 4*K when unset")
    sim.add_argument("--buffer", type=_bounded_int(1), default=None, help="retained candidate lists, ceil(K/2) when unset")
    sim.add_argument("--seed", type=_bounded_int(0, 2**64 - 1), default=DEFAULT_SEED, help="master seed; run r uses seed+r")
    sim.add_argument("--out", default=None, help="CSV path, stdout when unset")
    sim.add_argument("--trace", action="store_true", help="print every election to stderr")

    tab = sub.add_parser("tables", help="sweep both published efficiency tables", formatter_class=fmt)
    tab.add_argument("--seed", type=_bounded_int(0, 2**64 - 1), default=DEFAULT_SEED, help="master seed")
    tab.add_argument("--runs", type=_bounded_int(1), default=DEFAULT_RUNS, help="runs per cell")
    tab.add_argument("--workers", type=_bounded_int(1), default=1, help="worker processes")
    tab.add_argument("--out", default=None, help="CSV path, stdout when unset")

    snd = sub.add_parser("send", help="send files as one keyed stream, one datagram per file", formatter_class=fmt)
    snd.add_argument("--peer", required=True, help="receiver host")
    snd.add_argument("--key", type=key_arg, required=True, help="port key as BASE:K")
    snd.add_argument("--gap", type=millis_arg, default=0.0, help="pause between datagrams in ms")
    snd.add_argument("--mtu", type=_bounded_int(1), default=DEFAULT_MTU, help="max datagram payload bytes")
    snd.add_argument("--source-port", type=_bounded_int(0, 65535), default=0, help="fixed source port (0 = ephemeral)")
    snd.add_argument("--test-mode", action="store_true", help="prefix each datagram with its 4-byte index")
    snd.add_argument("files", nargs="+", metavar="FILE", help="payload files, in stream order")

    rcv = sub.add_parser("recv", help="receive and reconstruct one keyed stream", formatter_class=fmt)
    rcv.add_argument("--key", type=key_arg, required=True, help="port key as BASE:K")
    rcv.add_argument("--listen", default="0.0.0.0", help="local address to bind")
    rcv.add_argument("--timeout", type=millis_arg, default=DEFAULT_IDLE_TIMEOUT * 1000, help="idle end-of-stream timeout in ms")
    rcv.add_argument("--test-mode", action="store_true", help="expect index prefixes and score the result")
    rcv.add_argument("--expect", type=_bounded_int(1), default=None, help="stream length for scoring")
    rcv.add_argument("--save", default=None, help="directory to write delivered payloads into")
    rcv.add_argument("--trace", action="store_true", help="print arrivals and elections to stderr")
    return parser


def _open_out(path: str | None, stdout: TextIO):
    if path is None:
        return stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def _trace(enabled: bool, stderr: TextIO):
    return (lambda line: print(line, file=stderr)) if enabled else None


def cmd_simulate(args, stdout: TextIO, stderr: TextIO) -> int:
    hazard = HazardConfig.from_percent(args.loss, args.swap, args.seed)
    if hazard.is_joint:
        raise JointHazardUnsupported("--loss and --swap cannot both be nonzero")
    config = RunConfig(args.key, hazard, args.length, args.buffer, args.runs)
    agg = run_simulation(config, _trace(args.trace, stderr))
    out, close = _open_out(args.out, stdout)
    try:
        write_csv([table_row(agg)], out)
    finally:
        if close:
            out.close()
    return 0


def cmd_tables(args, stdout: TextIO, stderr: TextIO) -> int:
    rows = reproduce_tables(args.seed, args.runs, workers=args.workers)
    out, close = _open_out(args.out, stdout)
    try:
        write_csv(rows, out)
    finally:
        if close:
            out.close()
    return 0


def cmd_send(args, stdout: TextIO, stderr: TextIO) -> int:
    config = TransferConfig(
        args.peer,
        args.key,
        inter_packet_gap=args.gap / 1000,
        test_mode=args.test_mode,
        mtu=args.mtu,
        source_port=args.source_port,
    )
    report = send_stream(config, payloads_from_files(args.files))
    print(f"sent {report.count} datagrams to {args.peer} key {args.key} in {report.duration:.3f} s", file=stdout)
    return 0


def cmd_recv(args, stdout: TextIO, stderr: TextIO) -> int:
    if args.timeout <= 0:
        raise UsageError("--timeout must be > 0")
    config = TransferConfig(
        "",
        args.key,
        idle_timeout=args.timeout / 1000,
        test_mode=args.test_mode,
        listen_host=args.listen,
        expected_count=args.expect,
    )
    result = receive_stream(config, _trace(args.trace, stderr))
    stream = result.stream
    summary = {
        "key": str(args.key),
        "arrivals": len(result.arrivals),
        "slots": len(stream),
        "missing": stream.missing_positions,
        "timestamp_ties": result.timestamp_ties,
    }
    if result.metrics is not None:
        summary["efficiency"] = round(result.metrics.efficiency, 4)
        summary["errors"] = result.metrics.errors
    if args.save:
        folder = Path(args.save)
        folder.mkdir(parents=True, exist_ok=True)
        width = len(str(max(len(stream) - 1, 0)))
        for pos, payload in enumerate(stream.payloads()):
            if payload is not None:
                (folder / f"slot{pos:0{width}d}.bin").write_bytes(payload)
    print(json.dumps(summary), file=stdout)
    return 0


COMMANDS = {"simulate": cmd_simulate, "tables": cmd_tables, "send": cmd_send, "recv": cmd_recv}


def main(
    argv: Sequence[str] | None = None,
    env: dict[str, str] | None = None,
    stdout: TextIO | None = None,
    stderr: TextIO | None = None,
) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    env = dict(os.environ) if env is None else env
    parser = build_parser()
    try:
        for action in parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                for subparser in action.choices.values():
                    _apply_env(subparser, env)
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args, stdout, stderr)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    except (UsageError, JointHazardUnsupported) as exc:
        print(f"kudp: error: {type(exc).__name__}: {exc}", file=stderr)
        return USAGE_ERROR
    except (SocketFailure, NoDataReceived, OversizedPayload, EmptyStream, OSError) as exc:
        print(f"kudp: error: {type(exc).__name__}: {exc}", file=stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
