"""Command line: `weaver serve` runs the API, `weaver export` renders headless.

Flags mirror the WEAVER_* environment variables; flags win when both are set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .api import ServiceConfig, config_from_env, create_app
from .errors import WeaverError
from .export import build_outline, render_bundle, write_bundle
from .story import load_story


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weaver", description="Data-story authoring engine")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--addr", help="listen address host:port (WEAVER_ADDR)")
    serve.add_argument(
        "--generator", choices=["deterministic", "remote"], help="text backend (WEAVER_GENERATOR)"
    )
    serve.add_argument("--remote-url", help="remote generator endpoint (WEAVER_REMOTE_URL)")
    serve.add_argument(
        "--remote-key-file", help="file holding the remote credential (WEAVER_REMOTE_KEY_FILE)"
    )
    serve.add_argument("--store-dir", help="directory for story persistence (WEAVER_STORE_DIR)")

    export = sub.add_parser("export", help="render a story container to a bundle directory")
    export.add_argument("story_file", help="path to a story container JSON file")
    export.add_argument(
        "--format",
        default="continuous",
        choices=["continuous", "scrollytelling", "stepper"],
    )
    export.add_argument("--out", required=True, help="output bundle directory")
    return parser


def resolve_config(args: argparse.Namespace) -> ServiceConfig:
    base = config_from_env(dict(os.environ))
    return ServiceConfig(
        addr=args.addr or base.addr,
        generator=args.generator or base.generator,
        remote_url=args.remote_url or base.remote_url,
        remote_key_file=args.remote_key_file or base.remote_key_file,
        store_dir=args.store_dir or base.store_dir,
    )


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    config = resolve_config(args)
    app = create_app(config)
    host, _, port = config.addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8040))
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    doc = json.loads(Path(args.story_file).read_text(encoding="utf-8"))
    graph = load_story(doc)
    outline = build_outline(graph)
    files = render_bundle(outline, args.format, graph)
    root = write_bundle(files, args.out)
    print(f"wrote {len(files)} files to {root}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        return cmd_export(args)
    except WeaverError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
