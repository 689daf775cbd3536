import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlama.errors import StoreError
from dlama.store import (
    BenchmarkSet,
    FactTriple,
    PredictionFile,
    PredictionRecord,
    PromptFile,
    PromptTask,
    make_provenance,
    parse_benchmark_bytes,
    print_schema,
    read_benchmark,
    read_predictions,
    read_prompts,
    read_report,
    read_triple_dump,
    write_benchmark,
    write_predictions,
    write_prompts,
    write_report,
)

PROV = make_provenance("2024-01-01T00:00:00Z", "deadbeef")


def triple(subject="Q79", objects=("Q15",), rank=100):
    return FactTriple(
        subject_id=subject,
        subject_labels={"ar": "مصر", "en": "Egypt"},
        object_ids=tuple(objects),
        object_labels={
            "ar": tuple(f"تسمية {o}" for o in objects),
            "en": tuple(f"label {o}" for o in objects),
        },
        region_name="arab",
        predicate_id="P30",
        rank_value=rank,
        rank_source="article_size",
    )


def benchmark(triples=None):
    if triples is None:
        triples = [triple("Q79", ("Q15", "Q48")), triple("Q262", ("Q15",)), triple("Q398", ("Q48",))]
    return BenchmarkSet(
        pair="arab_west",
        region="arab",
        predicate_id="P30",
        augmented=True,
        triples=triples,
        provenance=dict(PROV),
    )


def test_benchmark_round_trip(tmp_path):
    path = tmp_path / "b.jsonl"
    original = benchmark()
    write_benchmark(original, path)
    loaded = read_benchmark(path)
    assert loaded == original


def test_benchmark_bytes_are_stable(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_benchmark(benchmark(), a)
    write_benchmark(benchmark(), b)
    assert a.read_bytes() == b.read_bytes()


def test_benchmark_unknown_field_names_field_and_line(tmp_path):
    path = tmp_path / "b.jsonl"
    write_benchmark(benchmark(), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    record = json.loads(lines[2])
    record["surprise"] = 1
    lines[2] = json.dumps(record, ensure_ascii=False)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(StoreError) as err:
        read_benchmark(path)
    assert "surprise" in str(err.value)
    assert err.value.line == 3


def test_benchmark_empty_set_marker_round_trips(tmp_path):
    path = tmp_path / "empty.jsonl"
    write_benchmark(benchmark(triples=[]), path)
    loaded = read_benchmark(path)
    assert loaded.triples == []


def test_benchmark_header_count_mismatch_is_an_error(tmp_path):
    path = tmp_path / "b.jsonl"
    write_benchmark(benchmark(), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    header["n_triples"] = 99
    lines[0] = json.dumps(header, ensure_ascii=False)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(StoreError, match="99 triples"):
        read_benchmark(path)


def test_benchmark_schema_version_mismatch(tmp_path):
    path = tmp_path / "b.jsonl"
    write_benchmark(benchmark(), path)
    text = path.read_text(encoding="utf-8").replace('"dlama_schema":1', '"dlama_schema":2', 1)
    path.write_text(text, encoding="utf-8")
    with pytest.raises(StoreError, match="schema version"):
        read_benchmark(path)


def test_benchmark_rejects_misaligned_labels(tmp_path):
    path = tmp_path / "b.jsonl"
    write_benchmark(benchmark(), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    record = json.loads(lines[1])
    record["object_labels"]["en"] = record["object_labels"]["en"][:-1]
    lines[1] = json.dumps(record, ensure_ascii=False)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(StoreError, match="not aligned"):
        read_benchmark(path)


def predictions(records=None):
    if records is None:
        records = [
            PredictionRecord("P30", "Q79", ranked_candidates=("Africa", "Asia")),
            PredictionRecord("P30", "Q262", free_text="It is in Africa."),
        ]
    return PredictionFile(model_id="m", prompt_language="en", records=records)


def test_predictions_round_trip(tmp_path):
    path = tmp_path / "p.jsonl"
    write_predictions(predictions(), path)
    assert read_predictions(path) == predictions()


def test_prediction_record_needs_exactly_one_payload():
    with pytest.raises(ValueError):
        PredictionRecord("P30", "Q79")
    with pytest.raises(ValueError):
        PredictionRecord("P30", "Q79", ranked_candidates=("A",), free_text="x")
    with pytest.raises(ValueError):
        PredictionRecord("P30", "Q79", ranked_candidates=("A", "A"))


def test_predictions_reader_rejects_duplicates(tmp_path):
    path = tmp_path / "p.jsonl"
    write_predictions(predictions(), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    record = json.loads(lines[1])
    record["ranked_candidates"] = ["Africa", "Africa"]
    lines[1] = json.dumps(record, ensure_ascii=False)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(StoreError, match="duplicates"):
        read_predictions(path)


def test_prompts_round_trip(tmp_path):
    path = tmp_path / "prompts.jsonl"
    pf = PromptFile(
        pair="arab_west",
        language="ar",
        mode="cloze",
        candidates={"P30": ("أفريقيا", "آسيا")},
        tasks=[PromptTask("P30", "Q79", "يقع مصر في ⟨MASK⟩ .")],
    )
    write_prompts(pf, path)
    assert read_prompts(path) == pf


def test_report_round_trip(tmp_path):
    from dlama.store import EvalReport, PredicateReport

    report = EvalReport(
        model_id="m",
        prompt_language="ar",
        p_at_1=50.0,
        n_triples=4,
        per_predicate={
            ("arab", "P30"): PredicateReport(
                region="arab",
                predicate_id="P30",
                p_at_1=50.0,
                n=4,
                entropy=1.0,
                distribution={"أفريقيا": (2, 1), "آسيا": (0, 1)},
            )
        },
    )
    path = tmp_path / "r.jsonl"
    write_report(report, path)
    assert read_report(path) == report


def test_report_n_consistency_check(tmp_path):
    path = tmp_path / "r.jsonl"
    path.write_text(
        '{"dlama_schema":1,"kind":"eval_report","model_id":"m","prompt_language":"ar","p_at_1":0.0,"n_triples":5}\n'
        '{"region":"arab","predicate_id":"P30","p_at_1":0.0,"n":4,"entropy":0.0,"distribution":{}}\n',
        encoding="utf-8",
    )
    with pytest.raises(StoreError, match="sum to 4"):
        read_report(path)


def test_read_triple_dump_accepts_both_object_shapes(tmp_path):
    path = tmp_path / "dump.jsonl"
    path.write_text(
        '{"subject_id":"Q1","predicate_id":"P27","object_id":"Q2"}\n'
        '{"subject_id":"Q3","predicate_id":"P27","object_ids":["Q4","Q5"]}\n',
        encoding="utf-8",
    )
    rows = list(read_triple_dump(path))
    assert rows == [("Q1", "P27", ("Q2",)), ("Q3", "P27", ("Q4", "Q5"))]


def test_read_triple_dump_locates_bad_rows(tmp_path):
    path = tmp_path / "dump.jsonl"
    path.write_text('{"subject_id":"Q1","predicate_id":"P27"}\n', encoding="utf-8")
    with pytest.raises(StoreError) as err:
        list(read_triple_dump(path))
    assert err.value.line == 1


def test_read_triple_dump_gz(tmp_path):
    import gzip

    path = tmp_path / "dump.jsonl.gz"
    with gzip.open(path, "wt", encoding="utf-8") as handle:
        handle.write('{"subject_id":"Q1","predicate_id":"P27","object_id":"Q2"}\n')
    assert list(read_triple_dump(path)) == [("Q1", "P27", ("Q2",))]


def test_print_schema_mentions_every_kind():
    text = print_schema()
    for kind in ("benchmark", "predictions", "prompts", "eval_report"):
        assert kind in text


labels = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=12
)


@st.composite
def fact_triples(draw):
    n_objects = draw(st.integers(min_value=1, max_value=4))
    object_ids = tuple(f"Q{i + 10}" for i in range(n_objects))
    langs = draw(st.sets(st.sampled_from(["ar", "en", "ko"]), min_size=1, max_size=3))
    return FactTriple(
        subject_id=f"Q{draw(st.integers(min_value=1, max_value=9))}",
        subject_labels={lang: draw(labels) for lang in langs},
        object_ids=object_ids,
        object_labels={lang: tuple(draw(labels) for _ in object_ids) for lang in langs},
        region_name="arab",
        predicate_id="P30",
        rank_value=draw(st.integers(min_value=0, max_value=10**9)),
        rank_source=draw(st.sampled_from(["article_size", "edit_count"])),
    )


@settings(max_examples=40, deadline=None)
@given(st.lists(fact_triples(), max_size=5))
def test_benchmark_round_trip_property(tmp_path_factory, triples):
    path = tmp_path_factory.mktemp("rt") / "b.jsonl"
    original = benchmark(triples=triples)
    write_benchmark(original, path)
    assert read_benchmark(path) == original


def test_fuzzed_benchmark_bytes_never_crash_smoke(tmp_path):
    """Small smoke version of the 10k-mutation acceptance criterion."""
    path = tmp_path / "b.jsonl"
    write_benchmark(benchmark(), path)
    data = bytearray(path.read_bytes())
    rng = random.Random(7)
    for _ in range(500):
        mutated = bytearray(data)
        pos = rng.randrange(len(mutated))
        mutated[pos] = rng.randrange(256)
        try:
            parse_benchmark_bytes(bytes(mutated), path="fuzz")
        except StoreError as err:
            assert err.line >= 0
