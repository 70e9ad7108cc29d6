"""Operator entry points: serve, validate-clips, replay."""

from __future__ import annotations

import argparse
import asyncio
import logging
import signal
import sys

from .config import ConfigError, load_config
from .expression import ClipLibraryError, load_clip_library
from .gateway.server import BindError, serve
from .persona import PersonaValidationError
from .replay import ScriptParseError, run_replay


def _cmd_serve(args: argparse.Namespace) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s %(message)s")
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    async def _run() -> None:
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, stop.set)
        await serve(config, stop)

    try:
        asyncio.run(_run())
    except (ConfigError, BindError, ClipLibraryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_validate_clips(args: argparse.Namespace) -> int:
    try:
        library = load_clip_library(args.path)
    except ClipLibraryError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    emotions = {clip.emotion for clip in library.all_clips()}
    print(f"OK, {len(emotions)} emotions, {len(library.all_clips())} clips")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
        run_replay(args.script, config, seed=args.seed)
    except (ScriptParseError, ConfigError, ClipLibraryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PersonaValidationError as exc:
        print(f"error: invalid persona: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facecall",
        description="Expressive virtual-agent call server and tooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the call server")
    p_serve.add_argument("--config", default=None, help="path to a JSON config file")
    p_serve.set_defaults(func=_cmd_serve)

    p_validate = sub.add_parser("validate-clips", help="check a clip library file")
    p_validate.add_argument("path", help="clip library JSON file")
    p_validate.set_defaults(func=_cmd_validate_clips)

    p_replay = sub.add_parser("replay", help="run a scripted call headlessly")
    p_replay.add_argument("script", help="replay script JSON file")
    p_replay.add_argument("--config", default=None, help="path to a JSON config file")
    p_replay.add_argument("--seed", type=int, default=None, help="clip-selection seed")
    p_replay.set_defaults(func=_cmd_replay)

    return parser


def main(argv: "list[str] | None" = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
