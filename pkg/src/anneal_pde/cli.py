"""``anneal-pde`` command line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 embedding failure, 5 I/O failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import runner
from .errors import AnnealerError, ConfigError, EmbeddingFailure, NumericError

EXIT_CONFIG, EXIT_NUMERIC, EXIT_EMBEDDING, EXIT_IO = 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"anneal-pde: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="anneal-pde", description="Solve discretized PDEs as Ising problems by simulated annealing.")
    p.add_argument("kind", choices=runner.KINDS, help="experiment kind")
    p.add_argument("--config", help="JSON config file (optional for toy and embed-demo)")
    p.add_argument("--out", default=None, help="output directory (default: out/<kind>)")
    p.add_argument("--seed", type=int, default=None, help="override anneal.seed")
    p.add_argument("--reads", type=int, default=None, help="override anneal.reads")
    p.add_argument("--embed", default=None, metavar="HARDWARE",
                   help="route every anneal through a hardware graph: complete, grid, demo, chimera or custom")
    p.add_argument("--no-iterate", action="store_true", help="single-shot solve (one epoch, no zoom)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_overrides(raw: dict, args) -> dict:
    if args.seed is not None:
        raw.setdefault("anneal", {})["seed"] = args.seed
    if args.reads is not None:
        raw.setdefault("anneal", {})["reads"] = args.reads
    if args.embed is not None:
        raw["embedding"] = {**(raw.get("embedding") or {}), "hardware": args.embed}
    if args.no_iterate:
        raw.setdefault("encoding", {})["iterate"] = False
    return raw


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        raw = runner.load_config(args.config) if args.config else {}
        if args.kind == "sweep":
            if args.seed is not None or args.reads is not None or args.embed or args.no_iterate:
                base = raw.get("base")
                if isinstance(base, dict):
                    _apply_overrides(base, args)
        else:
            _apply_overrides(raw, args)
        cfg = runner.resolve_config(raw, args.kind)
        out = args.out or f"out/{args.kind}"
        report = runner.run(cfg, out)
    except ConfigError as exc:
        print(f"anneal-pde: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"anneal-pde: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except EmbeddingFailure as exc:
        print(f"anneal-pde: embedding failure: {exc}", file=sys.stderr)
        return EXIT_EMBEDDING
    except AnnealerError as exc:
        print(f"anneal-pde: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"anneal-pde: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    summary = f"{report.kind}: final cost {report.final_cost:.6g}"
    if report.relative_error is not None:
        summary += f", relative error vs oracle {report.relative_error:.3g}"
    print(f"{summary}; outputs in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
