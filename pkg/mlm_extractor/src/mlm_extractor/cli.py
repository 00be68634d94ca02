"""Command line entry points: extract archives, serve embeddings."""

from __future__ import annotations

import argparse
import sys

from .config import ExtractorConfig
from .errors import ExtractorError


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model-id", required=True,
                        help="identity stamped into archives and responses")
    parser.add_argument("--model-path", default="",
                        help="weights location (default: --model-id)")
    parser.add_argument("--mode", default="pretrained",
                        choices=("pretrained", "random_layers",
                                 "fully_random"))
    parser.add_argument("--seed", type=int, default=0,
                        help="reinitialization seed for random_* modes")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=16)


def _config(args: argparse.Namespace) -> ExtractorConfig:
    return ExtractorConfig(model_id=args.model_id,
                           model_path=args.model_path, mode=args.mode,
                           reinit_seed=args.seed, device=args.device,
                           batch_size=args.batch_size)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mlm-extractor",
        description="Run multilingual MLMs into MPEB archives or over HTTP")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="embed a manifest into an archive")
    _add_model_args(p)
    p.add_argument("--manifest", required=True, metavar="m.json")
    p.add_argument("--out", required=True, metavar="a.mpeb")

    p = sub.add_parser("serve", help="serve /v1/embed and /v1/model")
    _add_model_args(p)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--max-inflight", type=int, default=4)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    try:
        if args.command == "extract":
            from .extract import extract
            n = extract(args.manifest, _config(args), args.out)
            print(f"wrote {n} records to {args.out}")
            return 0
        from .modeling import Extractor
        from .server import make_server
        server = make_server(Extractor(_config(args)), host=args.host,
                             port=args.port,
                             max_inflight=args.max_inflight)
        host, port = server.server_address[:2]
        print(f"serving {args.model_id} on http://{host}:{port}",
              flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return 0
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
