"""Command-line entry point for the scorers."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .formats import read_prompts, write_predictions
from .masked import MaskedScorer, ScorerConfig
from .qa import ChatClient, ChatServiceConfig, run_qa_probe

log = logging.getLogger("dlama_scorer")


def cmd_rank(args) -> int:
    prompts = read_prompts(args.prompts)
    scorer = MaskedScorer(
        ScorerConfig(
            model_name=args.model,
            device=args.device,
            batch_size=args.batch_size,
            max_mask_count=args.max_mask_count,
            top_n=args.top_n,
        )
    )
    records = scorer.run_benchmark(prompts)
    write_predictions(args.model_id or args.model, prompts.language, records, args.out)
    print(args.out)
    return 0


def cmd_qa(args) -> int:
    prompts = read_prompts(args.prompts)
    client = ChatClient(
        ChatServiceConfig(
            base_url=args.base_url,
            model=args.model,
            cache_dir=args.cache_dir,
            offline=args.offline,
        )
    )
    records = run_qa_probe(prompts, client)
    write_predictions(args.model_id or args.model, prompts.language, records, args.out)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlama-scorer",
        description="Turn dlama prompt files into prediction files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", help="rank cloze candidates under a masked LM")
    p.add_argument("--prompts", required=True, type=Path)
    p.add_argument("--model", required=True, help="model name or local path")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--model-id", default=None, help="model_id written to the prediction file")
    p.add_argument("--device", default="cpu")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-mask-count", type=int, default=10)
    p.add_argument("--top-n", type=int, default=10)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("qa", help="run question prompts against a chat service")
    p.add_argument("--prompts", required=True, type=Path)
    p.add_argument("--model", required=True)
    p.add_argument("--base-url", default="https://api.openai.com/v1")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--model-id", default=None)
    p.add_argument("--cache-dir", type=Path, default=Path(".dlama_qa_cache"))
    p.add_argument("--offline", action="store_true", help="replay the cache only")
    p.set_defaults(func=cmd_qa)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="[dlama-scorer] %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
