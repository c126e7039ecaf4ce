"""Command line entry point: configure an engine and serve it."""
from __future__ import annotations

import argparse
import sys
from typing import Optional

from .engine import ToyEngine, WorkerError
from .server import WorkerServer


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="classifier-worker",
        description="Serve a text classifier behind the annotation wire protocol.",
    )
    parser.add_argument("--engine", choices=["toy", "transformer"], default="toy")
    parser.add_argument("--labels", required=True, help="comma-separated label set, in order")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8300, help="0 picks an ephemeral port")
    parser.add_argument("--checkpoint-dir", help="persist weights and version here")
    parser.add_argument(
        "--reset-on-refine",
        action="store_true",
        help="retrain from the seeded initial weights each cycle instead of continuing",
    )
    parser.add_argument("--model-id", help="hub model id (transformer engine only)")
    return parser


def make_engine(args):
    labels = tuple(l.strip() for l in args.labels.split(",") if l.strip())
    if args.engine == "toy":
        return ToyEngine(
            labels,
            seed=args.seed,
            checkpoint_dir=args.checkpoint_dir,
            reset_each_refine=args.reset_on_refine,
        )
    if not args.model_id:
        raise WorkerError("transformer engine needs --model-id")
    from .transformer import TransformerEngine

    return TransformerEngine(labels, args.model_id, seed=args.seed)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        engine = make_engine(args)
    except WorkerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    server = WorkerServer(engine, host=args.host, port=args.port)
    print(f"listening on http://{args.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
