"""lm-adapter command line: serve, conformance, init-tiny."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import AdapterConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lm-adapter")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="serve a causal LM over the wire protocol")
    p_serve.add_argument("--model", required=True, help="HF model name or checkpoint dir")
    p_serve.add_argument("--device", default="cpu")
    p_serve.add_argument("--learning-rate", type=float, default=2e-5)
    p_serve.add_argument("--batch-size", type=int, default=2)
    p_serve.add_argument("--max-source-tokens", type=int, default=600)
    p_serve.add_argument("--max-target-tokens", type=int, default=200)
    p_serve.add_argument("--grad-clip-norm", type=float, default=5.0)
    p_serve.add_argument("--no-freeze-embeddings", action="store_true",
                         help="train word/positional embeddings too")
    p_serve.add_argument("--tcp", type=int, metavar="PORT",
                         help="listen on TCP instead of stdio (0 picks a free port)")
    p_serve.add_argument("--host", default="127.0.0.1")

    p_conf = sub.add_parser("conformance", help="replay a golden transcript against a server")
    p_conf.add_argument("--transcript", required=True)
    p_conf.add_argument("server_command", nargs="+",
                        help="command to launch the server under test")

    p_tiny = sub.add_parser("init-tiny", help="write a small random byte-vocab checkpoint")
    p_tiny.add_argument("--out", required=True)
    p_tiny.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr)

    if args.command == "serve":
        from .server import serve

        config = AdapterConfig(
            model=args.model, device=args.device, learning_rate=args.learning_rate,
            batch_size=args.batch_size, max_source_tokens=args.max_source_tokens,
            max_target_tokens=args.max_target_tokens, grad_clip_norm=args.grad_clip_norm,
            freeze_embeddings=not args.no_freeze_embeddings,
        )
        serve(config, tcp_port=args.tcp, host=args.host)
        return 0
    if args.command == "conformance":
        from .conformance import run_conformance

        result = run_conformance(args.transcript, args.server_command)
        print(("PASS" if result.ok else "FAIL")
              + f" after {result.exchanges} exchange(s)"
              + (f": {result.message}" if result.message else ""))
        return 0 if result.ok else 1
    if args.command == "init-tiny":
        from .model import init_tiny_checkpoint

        init_tiny_checkpoint(args.out, seed=args.seed)
        print(args.out)
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
