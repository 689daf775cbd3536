"""Acceptance criteria, one test per criterion.

Each test prints a PASS line with its runtime; run with `pytest -s
tests/test_acceptance.py` to see them. Criteria gated on external data or
network access are skipped unless the corresponding environment variable
is set (DLAMA_LIVE_TESTS, DLAMA_LAMA_DUMP).
"""

import json
import math
import os
import random
import time

import pytest

from dlama.cli import main as cli_main
from dlama.errors import StoreError
from dlama.evaluate import (
    bias_audit,
    builtin_unifier,
    compare_raw_vs_augmented,
    compute_entropy,
    compute_p_at_1,
    score_qa_response,
    unify,
)
from dlama.pipeline import SubclassGraph, augment_objects
from dlama.queries import (
    build_harvest_query,
    build_territory_chain_query,
)
from dlama.regions import load_builtin_config
from dlama.store import (
    BenchmarkSet,
    FactTriple,
    PredictionFile,
    PredictionRecord,
    make_provenance,
    parse_benchmark_bytes,
    read_benchmark,
    read_predictions,
    read_report,
    read_triple_dump,
    write_benchmark,
)

CONFIG = load_builtin_config("arab_west")
PROV = make_provenance("2024-01-01T00:00:00Z", "acceptance")


class Criterion:
    """Context manager asserting the runtime budget and printing the verdict."""

    def __init__(self, name: str, budget_seconds: float):
        self.name = name
        self.budget = budget_seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            assert elapsed < self.budget, f"{self.name} took {elapsed:.2f}s (budget {self.budget}s)"
            print(f"{self.name} PASS ({elapsed:.2f}s < {self.budget}s)")
        else:
            print(f"{self.name} FAIL ({elapsed:.2f}s): {exc}")
        return False


def make_triple(subject, objects, labels_en, pid="P30", region="arab"):
    return FactTriple(
        subject_id=subject,
        subject_labels={"ar": f"موضوع {subject}", "en": f"subject {subject}"},
        object_ids=tuple(objects),
        object_labels={
            "ar": tuple(f"تسمية {label}" for label in labels_en),
            "en": tuple(labels_en),
        },
        region_name=region,
        predicate_id=pid,
        rank_value=0,
        rank_source="article_size",
    )


def make_benchmark(triples, pid="P30", region="arab"):
    return BenchmarkSet(
        pair="arab_west",
        region=region,
        predicate_id=pid,
        augmented=True,
        triples=triples,
        provenance=dict(PROV),
    )


# --------------------------------------------------------------------- A1


def test_a1_entropy_properties():
    with Criterion("A1 entropy properties", 1.0):
        shared = [make_triple(f"Q{i}", ["Q13955"], ["Arabic"]) for i in range(1, 23)]
        assert compute_entropy(make_benchmark(shared)) == 0.0

        for n in (2, 4, 22):
            distinct = [make_triple(f"Q{i}", [f"Q{100 + i}"], [f"L{i}"]) for i in range(1, n + 1)]
            h = compute_entropy(make_benchmark(distinct))
            assert abs(h - math.log2(n)) < 1e-9
        assert round(math.log2(22), 1) == 4.5  # the 22-capital slice at 1 decimal

        rng = random.Random(1234)
        mixed = [make_triple("Q1", ["Q101", "Q102"], ["Africa", "Asia"])]
        mixed += [make_triple(f"Q{i}", [f"Q{100 + i % 6}"], [f"L{i % 6}"]) for i in range(2, 40)]
        reference = compute_entropy(make_benchmark(mixed))
        for _ in range(1000):
            rng.shuffle(mixed)
            assert compute_entropy(make_benchmark(mixed)) == reference


# --------------------------------------------------------------------- A2


def oracle_recount(records, triples_by_subject, language, unifier):
    """Independent brute-force P@1: plain loop, set membership, no grouping."""
    hits = 0
    for record in records:
        gold = triples_by_subject[record.subject_id].object_labels[language]
        gold_unified = {unify(g, unifier) for g in gold}
        if unify(record.ranked_candidates[0], unifier) in gold_unified:
            hits += 1
    return 100.0 * hits / len(records)


def test_a2_p_at_1_oracle_equivalence():
    with Criterion("A2 P@1 oracle equivalence", 5.0):
        rng = random.Random(2024)
        labels = ["Islam", "Muslim", "Christianity", "Buddhism"] + [f"L{i}" for i in range(16)]
        for case in range(100):
            n = rng.randrange(1, 51)
            unifier = builtin_unifier() if case % 2 else None
            triples, records = [], []
            for i in range(n):
                gold_labels = rng.sample(labels, rng.randrange(1, 4))
                triples.append(make_triple(f"Q{i + 1}", [f"Q{200 + j}" for j in range(len(gold_labels))], gold_labels))
                ranked = tuple(rng.sample(labels, rng.randrange(1, 5)))
                records.append(PredictionRecord("P30", f"Q{i + 1}", ranked_candidates=ranked))
            gold_set = make_benchmark(triples)
            predictions = PredictionFile("m", "en", records)
            report = compute_p_at_1(predictions, gold_set, unifier=unifier)
            expected = oracle_recount(records, {t.subject_id: t for t in triples}, "en", unifier)
            assert report.p_at_1 == expected
            assert report.n_triples == n


# --------------------------------------------------------------------- A3


def test_a3_augmentation_properties(data_dir):
    with Criterion("A3 augmentation properties", 5.0):
        fixture = json.loads((data_dir / "subclass_fixture.json").read_text(encoding="utf-8"))
        assert len(fixture["nodes"]) >= 20
        graph = SubclassGraph.from_edges(fixture["nodes"], [tuple(e) for e in fixture["edges"]])
        assert graph.cycle_nodes  # the fixture includes one cycle
        labels = {qid: dict(names) for qid, names in fixture["nodes"].items()}
        node_ids = sorted(fixture["nodes"])

        rng = random.Random(77)
        for trial in range(60):
            objects = rng.sample(node_ids, rng.randrange(1, 4))
            label_list = [labels[o]["en"] for o in objects]
            triple = make_triple("Q7999999", objects, label_list, pid="P37")
            out = augment_objects(triple, graph, labels)
            # Superset.
            assert set(out.object_ids) >= set(triple.object_ids)
            # Ancestor closure: every ancestor of every member is a member
            # (modulo the member itself, reachable through the cycle).
            for obj in out.object_ids:
                assert graph.ancestors(obj) <= set(out.object_ids) | frozenset({obj})
            # Idempotence.
            assert augment_objects(out, graph, labels) == out

        # Raw P@1 never exceeds augmented P@1 for identical predictions.
        label_pool = [labels[n]["en"] for n in node_ids]
        for trial in range(50):
            raw_triples, aug_triples, records = [], [], []
            for i in range(20):
                objects = rng.sample(node_ids, rng.randrange(1, 3))
                raw = make_triple(f"Q{i + 1}", objects, [labels[o]["en"] for o in objects], pid="P37")
                aug = augment_objects(raw, graph, labels)
                raw_triples.append(raw)
                aug_triples.append(aug)
                records.append(
                    PredictionRecord("P37", f"Q{i + 1}", ranked_candidates=(rng.choice(label_pool),))
                )
            predictions = PredictionFile("m", "en", records)
            p_raw = compute_p_at_1(predictions, make_benchmark(raw_triples, pid="P37")).p_at_1
            p_aug = compute_p_at_1(predictions, make_benchmark(aug_triples, pid="P37")).p_at_1
            assert p_raw <= p_aug

        # Matches the reported direction: raw 26.6 to augmented 33.6.
        from dlama.store import EvalReport, PredicateReport

        def single(value):
            return EvalReport(
                "arBERT", "ar", value, 10946,
                {("arab", "*"): PredicateReport("arab", "*", value, 10946, 2.6, {})},
            )

        rows = compare_raw_vs_augmented(single(26.6), single(33.6))
        assert rows[0].delta == pytest.approx(7.0)
        assert not any(r.regression for r in rows)


# --------------------------------------------------------------------- A4


def test_a4_golden_sparql_snapshots(data_dir):
    with Criterion("A4 golden SPARQL snapshots", 1.0):
        arab = CONFIG.region_a
        golden = data_dir / "golden"
        cases = {
            "harvest_P36_arab.rq": build_harvest_query(CONFIG.spec_for("P36"), arab).text,
            "harvest_P27_arab.rq": build_harvest_query(CONFIG.spec_for("P27"), arab).text,
            "territory_chain_P19.rq": build_territory_chain_query(["Q60", "Q23497"]).text,
        }
        for name, generated in cases.items():
            frozen = (golden / name).read_text(encoding="utf-8")
            assert generated == frozen, f"golden drift in {name}"


# --------------------------------------------------------------------- A5


def test_a5_offline_determinism(tmp_path, warm_cache_dir):
    with Criterion("A5 offline determinism (warm cache)", 10.0):
        outputs = []
        for run in ("one", "two"):
            out = tmp_path / run
            code = cli_main(
                [
                    "build",
                    "--pair", "arab_west",
                    "--predicate", "P36",
                    "--cache-dir", str(warm_cache_dir),
                    "--offline",
                    "--out", str(out),
                ]
            )
            assert code == 0
            outputs.append(out)
        names = ["arab_west__arab__P36.jsonl", "arab_west__west__P36.jsonl"]
        for name in names:
            assert (outputs[0] / name).read_bytes() == (outputs[1] / name).read_bytes()
        arab = read_benchmark(outputs[0] / "arab_west__arab__P36.jsonl")
        assert len(arab.triples) == 22


@pytest.mark.skipif(
    not os.environ.get("DLAMA_LIVE_TESTS"),
    reason="live endpoint run; set DLAMA_LIVE_TESTS=1 to enable",
)
def test_a5_live_tolerance(tmp_path):
    with Criterion("A5 live build tolerance", 120.0):
        out = tmp_path / "live"
        code = cli_main(
            [
                "build",
                "--pair", "arab_west",
                "--predicate", "P36",
                "--cache-dir", str(tmp_path / "live_cache"),
                "--out", str(out),
            ]
        )
        assert code == 0
        arab = read_benchmark(out / "arab_west__arab__P36.jsonl")
        assert 20 <= len(arab.triples) <= 24  # 22 +/- 2 for endpoint drift


# --------------------------------------------------------------------- A6


def test_a6_bias_audit_fixture(data_dir):
    with Criterion("A6 bias audit fixture", 1.0):
        mapping = json.loads((data_dir / "bias_entities.json").read_text(encoding="utf-8"))
        table = {k: frozenset(v) for k, v in mapping.items()}
        rows = list(read_triple_dump(data_dir / "bias_dump.jsonl"))
        assert len(rows) == 40
        report = bias_audit(rows, CONFIG.region_b, table.get)
        assert (report.rows["P27"].western, report.rows["P27"].rest, report.rows["P27"].unknown) == (12, 7, 1)
        assert (report.rows["P17"].western, report.rows["P17"].rest, report.rows["P17"].unknown) == (8, 10, 2)
        west_pct, rest_pct, unknown_pct = report.total.percentages()
        assert west_pct == pytest.approx(50.0, abs=1e-9)
        assert rest_pct == pytest.approx(42.5, abs=1e-9)
        assert unknown_pct == pytest.approx(7.5, abs=1e-9)


@pytest.mark.skipif(
    not os.environ.get("DLAMA_LAMA_DUMP"),
    reason="needs a user-downloaded dump; set DLAMA_LAMA_DUMP=/path/to/dump.jsonl",
)
def test_a6_lama_dump_share():
    dump = os.environ["DLAMA_LAMA_DUMP"]
    entity_map_path = os.environ.get("DLAMA_LAMA_ENTITY_MAP")
    if entity_map_path:
        mapping = json.loads(open(entity_map_path, encoding="utf-8").read())
        resolver = {k: frozenset(v) for k, v in mapping.items()}.get
    else:
        from dlama.client import EndpointConfig, HarvestClient

        resolver = HarvestClient(EndpointConfig.from_env()).fetch_entity_countries
    report = bias_audit(read_triple_dump(dump), CONFIG.region_b, resolver)
    known = report.total.western + report.total.rest
    share = 100.0 * report.total.western / known
    assert abs(share - 63.6) <= 0.5


# --------------------------------------------------------------------- A7


def test_a7_store_fuzzing(tmp_path):
    with Criterion("A7 store fuzzing (10k mutations)", 30.0):
        triples = [
            make_triple("Q79", ["Q15", "Q48"], ["Africa", "Asia"]),
            make_triple("Q262", ["Q15"], ["Africa"]),
            make_triple("Q398", ["Q48"], ["Asia"]),
        ]
        path = tmp_path / "seed.jsonl"
        write_benchmark(make_benchmark(triples), path)
        data = path.read_bytes()
        rng = random.Random(424242)
        parsed = failed = 0
        for _ in range(10_000):
            mutated = bytearray(data)
            for _ in range(rng.randrange(1, 4)):
                mutated[rng.randrange(len(mutated))] = rng.randrange(256)
            try:
                parse_benchmark_bytes(bytes(mutated), path="fuzz")
                parsed += 1
            except StoreError as err:
                assert err.line >= 0
                failed += 1
            # Anything else escaping is a crash and fails the test.
        assert parsed + failed == 10_000
        assert failed > 0  # mutations do get caught


# --------------------------------------------------------------------- A8


QA_CASES = [
    # (response, gold labels, expected)
    ("The capital of Egypt is Cairo.", {"Cairo"}, True),
    ("Cairo", {"Cairo"}, True),
    ("cairo", {"Cairo"}, False),
    ("Asia", {"Africa", "Asia"}, True),  # multi-gold continent case
    ("Africa", {"Africa", "Asia"}, True),
    ("Europe", {"Africa", "Asia"}, False),
    ("The twin city of Nice is Naples.", {"Nice"}, True),
    ("The twin city of Nice is Naples.", {"Turin"}, False),  # hallucinated twin
    ("It is  Kuala   Lumpur, of course", {"Kuala Lumpur"}, True),
    ("Kuala", {"Kuala Lumpur"}, False),
    ("العاصمة هي القاهرة", {"القاهرة"}, True),
    ("العاصمة هي الرباط", {"القاهرة"}, False),
    ("Café de Flore", {"Café de Flore"}, True),  # NFC vs NFD
    ("Answer: New York City!", {"New York City"}, True),
    ("New York", {"New York City"}, False),
    ("I believe the answer is Amman or maybe Beirut", {"Beirut"}, True),
    ("", {"Cairo"}, False),
    ("Cairo is the capital", set(), False),
    ("Berlin.", {"Berlin"}, True),
    ("BERLIN", {"Berlin"}, False),
]


def test_a8_qa_substring_scorer():
    with Criterion("A8 QA substring scorer", 1.0):
        assert len(QA_CASES) == 20
        for response, gold, expected in QA_CASES:
            assert score_qa_response(response, gold) is expected, (response, gold)


# ------------------------------------------------------------- A10 (primary)


def test_a10_primary_eval_on_bundled_synthetic_predictions(tmp_path, data_dir):
    """The primary suite's half of the end-to-end criterion: evaluation over
    the bundled synthetic prediction files produces a schema-valid report,
    with no scorer component involved."""
    with Criterion("A10 primary synthetic-prediction evaluation", 10.0):
        report_path = tmp_path / "report.jsonl"
        code = cli_main(
            [
                "eval",
                "--gold", str(data_dir / "benchmarks" / "arab_west__arab__P30.jsonl"),
                "--gold", str(data_dir / "benchmarks" / "arab_west__west__P30.jsonl"),
                "--pred", str(data_dir / "predictions" / "synthetic__P30__ar.jsonl"),
                "--report", str(report_path),
            ]
        )
        assert code == 0
        report = read_report(report_path)  # strict schema validation
        assert report.n_triples == 41
        assert {key for key in report.per_predicate} == {("arab", "P30"), ("west", "P30")}
        for row in report.per_predicate.values():
            assert 0.0 <= row.p_at_1 <= 100.0
            assert row.entropy == pytest.approx(1.0, abs=0.05)
        pred = read_predictions(data_dir / "predictions" / "synthetic__P30__ar.jsonl")
        assert len(pred.records) == 41
