"""Command-line entry point.

Exit codes: 0 success, 1 domain error, 2 usage error. Diagnostics go to
stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .client import CacheTracker, EndpointConfig, HarvestClient
from .errors import ConfigError, DlamaError
from .evaluate import (
    LabelUnifier,
    bias_audit,
    build_candidate_set,
    builtin_unifier,
    compare_raw_vs_augmented,
    compute_entropy,
    compute_p_at_1,
    distribution_csv,
    format_report_table,
    render_prompt,
    render_question,
)
from .pipeline import (
    TERRITORY_PREDICATES,
    augment_objects,
    build_subclass_graph,
    expand_territories,
    fetch_labels,
    overlap_with_dump,
    run_pair,
)
from .regions import (
    BUILTIN_PAIRS,
    load_builtin_config,
    load_pair_config,
    with_overrides,
)
from .store import (
    BenchmarkSet,
    PromptFile,
    PromptTask,
    make_provenance,
    print_schema,
    read_benchmark,
    read_predictions,
    read_report,
    read_triple_dump,
    write_benchmark,
    write_prompts,
    write_report,
)

log = logging.getLogger("dlama")


def _add_client_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cache-dir", type=Path, default=None, help="response cache directory")
    parser.add_argument("--offline", action="store_true", help="fail on cache miss instead of fetching")
    parser.add_argument("--sparql-url", default=None, help="SPARQL endpoint override")
    parser.add_argument("--request-interval", type=float, default=None, help="minimum seconds between requests per host")


def _client_from_args(args) -> HarvestClient:
    overrides = {}
    if args.cache_dir is not None:
        overrides["cache_dir"] = args.cache_dir
    if args.sparql_url is not None:
        overrides["sparql_url"] = args.sparql_url
    if args.offline:
        overrides["offline"] = True
    if getattr(args, "request_interval", None) is not None:
        overrides["min_request_interval"] = args.request_interval
    return HarvestClient(EndpointConfig.from_env(**overrides))


def _load_config(args):
    if args.config:
        return load_pair_config(args.config)
    if args.pair:
        return load_builtin_config(args.pair)
    raise ConfigError("one of --pair or --config is required")


def _benchmark_filename(bset: BenchmarkSet) -> str:
    suffix = "" if bset.augmented else "__raw"
    return f"{bset.pair}__{bset.region}__{bset.predicate_id}{suffix}.jsonl"


# ------------------------------------------------------------------ commands


def cmd_build(args) -> int:
    config = _load_config(args)
    config = with_overrides(
        config,
        max_triples=args.max_triples,
        sort_key={"article-size": "article_size", "edits": "edit_count"}.get(args.sort),
        languages=tuple(args.langs.split(",")) if args.langs else None,
    )
    client = _client_from_args(args)
    results, failures = run_pair(
        config,
        client,
        augment=not args.no_augment,
        predicate_ids=args.predicate or None,
        allow_partial=args.allow_partial,
        max_workers=args.workers,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    for key in sorted(results):
        bset = results[key]
        path = args.out / _benchmark_filename(bset)
        write_benchmark(bset, path)
        print(path)
    for (region, pid), message in sorted(failures.items()):
        log.error("failed %s/%s: %s", region, pid, message)
    return 0


def cmd_augment(args) -> int:
    client = _client_from_args(args)
    args.out.mkdir(parents=True, exist_ok=True)
    for path in args.benchmark:
        bset = read_benchmark(path)
        if bset.augmented:
            log.warning("%s is already augmented; copying through", path)
        languages = sorted(bset.triples[0].subject_labels) if bset.triples else []
        facts = bset.triples
        tracker = CacheTracker()
        if facts:
            # Labels for the existing objects are already embedded in the file.
            label_map: dict[str, dict[str, str]] = {}
            for t in facts:
                label_map.setdefault(t.subject_id, {}).update(t.subject_labels)
                for lang, labels in t.object_labels.items():
                    for oid, label in zip(t.object_ids, labels):
                        label_map.setdefault(oid, {})[lang] = label
            graph = build_subclass_graph(
                {o for t in facts for o in t.object_ids}, client, tracker=tracker
            )
            missing = [n for n in sorted(graph.nodes) if n not in label_map]
            if missing:
                label_map.update(fetch_labels(missing, languages, client, tracker=tracker))
            facts = [augment_objects(t, graph, label_map) for t in facts]
            if bset.predicate_id in TERRITORY_PREDICATES:
                facts = expand_territories(facts, client, tracker=tracker, label_map=label_map)
        out_set = BenchmarkSet(
            pair=bset.pair,
            region=bset.region,
            predicate_id=bset.predicate_id,
            augmented=True,
            triples=facts,
            provenance=make_provenance(
                max(bset.provenance["created_at"], tracker.latest_fetch()),
                hashlib.sha256(
                    f"{bset.provenance['cache_digest']}:{tracker.digest()}".encode("ascii")
                ).hexdigest(),
            ),
        )
        out_path = args.out / _benchmark_filename(out_set)
        write_benchmark(out_set, out_path)
        print(out_path)
    return 0


def cmd_prompts(args) -> int:
    benchmarks = [read_benchmark(path) for path in args.benchmark]
    if not benchmarks:
        raise ConfigError("no benchmark files given")
    pair_name = benchmarks[0].pair
    config = load_pair_config(args.config) if args.config else load_builtin_config(pair_name)
    mode = "qa" if args.qa else "cloze"

    by_pid: dict[str, list[BenchmarkSet]] = {}
    for bset in benchmarks:
        by_pid.setdefault(bset.predicate_id, []).append(bset)

    candidates = {}
    if mode == "cloze":
        for pid, sets in sorted(by_pid.items()):
            candidates[pid] = build_candidate_set(sets, args.language).labels

    tasks = []
    for pid, sets in sorted(by_pid.items()):
        template = config.template_for(pid, args.language)
        for bset in sets:
            for triple in bset.triples:
                if mode == "qa":
                    prompt = render_question(template, triple, args.language)
                else:
                    prompt = render_prompt(template, triple, args.language)
                tasks.append(PromptTask(pid, triple.subject_id, prompt))

    write_prompts(
        PromptFile(
            pair=pair_name,
            language=args.language,
            mode=mode,
            candidates=candidates,
            tasks=tasks,
        ),
        args.out,
    )
    print(args.out)
    return 0


def cmd_eval(args) -> int:
    gold = [read_benchmark(path) for path in args.gold]
    predictions = read_predictions(args.pred)
    if args.no_unify:
        unifier = None
    elif args.unifier:
        mapping = json.loads(Path(args.unifier).read_text(encoding="utf-8"))
        unifier = LabelUnifier(mapping)
    else:
        unifier = builtin_unifier()
    report = compute_p_at_1(
        predictions, gold, unifier=unifier, qa_case_sensitive=not args.case_insensitive_qa
    )
    print(format_report_table(report))
    if args.report:
        write_report(report, args.report)
        log.info("wrote %s", args.report)
    if args.csv:
        Path(args.csv).write_text(distribution_csv(report), encoding="utf-8")
        log.info("wrote %s", args.csv)
    return 0


def cmd_entropy(args) -> int:
    print(f"{'pair':<22} {'region':<16} {'predicate':<9} {'N':>6} {'entropy':>8}")
    for path in args.benchmark:
        bset = read_benchmark(path)
        value = compute_entropy(bset) if bset.triples else 0.0
        print(f"{bset.pair:<22} {bset.region:<16} {bset.predicate_id:<9} {len(bset.triples):>6} {value:>8.2f}")
    return 0


def cmd_bias_audit(args) -> int:
    western = load_builtin_config("arab_west").region_b
    if args.entity_map:
        mapping = json.loads(Path(args.entity_map).read_text(encoding="utf-8"))
        table = {k: frozenset(v) for k, v in mapping.items()}
        resolver = table.get
    else:
        client = _client_from_args(args)
        resolver = client.fetch_entity_countries
    report = bias_audit(read_triple_dump(args.dump), western, resolver)
    print(f"{'predicate':<10} {'western':>8} {'rest':>8} {'unknown':>8} {'%western':>9} {'%rest':>8} {'%unknown':>9}")
    for pid, row in report.rows.items():
        pw, pr, pu = row.percentages()
        print(f"{pid:<10} {row.western:>8} {row.rest:>8} {row.unknown:>8} {pw:>9.1f} {pr:>8.1f} {pu:>9.1f}")
    pw, pr, pu = report.total.percentages()
    print(f"{'total':<10} {report.total.western:>8} {report.total.rest:>8} {report.total.unknown:>8} {pw:>9.1f} {pr:>8.1f} {pu:>9.1f}")
    return 0


def cmd_overlap(args) -> int:
    benchmarks = [read_benchmark(path) for path in args.benchmark]
    rows = overlap_with_dump(benchmarks, args.dump)
    print(f"{'pair':<22} {'region':<16} {'predicate':<9} {'N':>6} {'found':>6} {'%':>7}")
    for row in rows:
        print(
            f"{row['pair']:<22} {row['region']:<16} {row['predicate_id']:<9} "
            f"{row['n']:>6} {row['n_found']:>6} {row['pct']:>7.2f}"
        )
    return 0


def cmd_compare(args) -> int:
    raw = read_report(args.raw)
    aug = read_report(args.aug)
    rows = compare_raw_vs_augmented(raw, aug)
    print(f"{'region':<16} {'predicate':<9} {'raw':>7} {'aug':>7} {'delta':>7}  flag")
    for row in rows:
        flag = "REGRESSION" if row.regression else ""
        print(
            f"{row.region:<16} {row.predicate_id:<9} {row.raw:>7.1f} "
            f"{row.augmented:>7.1f} {row.delta:>+7.1f}  {flag}"
        )
    return 0


def cmd_print_schema(_args) -> int:
    print(print_schema())
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlama",
        description="Curate culturally balanced Wikidata fact benchmarks and evaluate model predictions on them.",
    )
    parser.add_argument("--version", action="version", version=f"dlama {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="run the curation pipeline for a pair of regions")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--pair", choices=BUILTIN_PAIRS, help="bundled pair configuration")
    source.add_argument("--config", type=Path, help="custom pair configuration file")
    p.add_argument("--predicate", action="append", help="restrict to this predicate (repeatable)")
    p.add_argument("--out", type=Path, default=Path("benchmarks"), help="output directory")
    p.add_argument("--no-augment", action="store_true", help="skip object-set widening (raw variant)")
    p.add_argument("--max-triples", type=int, default=None)
    p.add_argument("--sort", choices=("article-size", "edits"), default=None)
    p.add_argument("--langs", default=None, help="comma-separated label languages")
    p.add_argument("--allow-partial", action="store_true", help="keep going when a predicate fails")
    p.add_argument("--workers", type=int, default=2, help="concurrent (region, predicate) jobs")
    _add_client_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("augment", help="widen object sets of raw benchmark files")
    p.add_argument("--benchmark", action="append", required=True, type=Path)
    p.add_argument("--out", type=Path, default=Path("benchmarks"))
    _add_client_flags(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("prompts", help="render cloze prompts or questions for benchmark files")
    p.add_argument("--benchmark", action="append", required=True, type=Path)
    p.add_argument("--language", required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--qa", action="store_true", help="render question prompts instead of cloze prompts")
    p.add_argument("--config", type=Path, help="pair configuration with the templates")
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("eval", help="score a prediction file against gold benchmarks")
    p.add_argument("--gold", action="append", required=True, type=Path)
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--report", type=Path, help="write the structured report here")
    p.add_argument("--csv", type=Path, help="write per-label distribution plot data here")
    p.add_argument("--unifier", type=Path, help="JSON file of label merges")
    p.add_argument("--no-unify", action="store_true", help="disable label unification")
    p.add_argument("--case-insensitive-qa", action="store_true", help="casefold the substring match")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("entropy", help="object entropy of benchmark files")
    p.add_argument("--benchmark", action="append", required=True, type=Path)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("bias-audit", help="Western-country share of an external triple dump")
    p.add_argument("--dump", required=True, type=Path)
    p.add_argument("--entity-map", type=Path, help="JSON entity->countries map instead of live lookups")
    _add_client_flags(p)
    p.set_defaults(func=cmd_bias_audit)

    p = sub.add_parser("overlap", help="share of benchmark triples found in an external dump")
    p.add_argument("--benchmark", action="append", required=True, type=Path)
    p.add_argument("--dump", required=True, type=Path)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("compare", help="delta table between raw and augmented evaluation reports")
    p.add_argument("--raw", required=True, type=Path)
    p.add_argument("--aug", required=True, type=Path)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("print-schema", help="describe the file formats")
    p.set_defaults(func=cmd_print_schema)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="[dlama] %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DlamaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
