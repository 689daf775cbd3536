"""Stable line-delimited file formats: benchmarks, predictions, prompts,
evaluation reports, plus the external triple-dump reader.

Files are UTF-8 JSONL with a header line followed by one record per line.
Keys are written in a fixed order so identical in-memory values serialize
to identical bytes. Readers validate strictly and raise StoreError with a
1-based line number; they never crash on corrupt input.
"""

from __future__ import annotations

import gzip
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from filelock import FileLock

from . import __version__
from .errors import StoreError
from .regions import is_pid, is_qid

SCHEMA_VERSION = 1

RANK_SOURCES = ("article_size", "edit_count")
PROMPT_MODES = ("cloze", "qa")


# ----------------------------------------------------------------- records


@dataclass(frozen=True)
class FactTriple:
    """One curated fact: a subject and the set of all valid objects, with
    parallel labels for every benchmark language."""

    subject_id: str
    subject_labels: dict[str, str] = field(hash=False)
    object_ids: tuple[str, ...] = ()
    object_labels: dict[str, tuple[str, ...]] = field(hash=False, default_factory=dict)
    region_name: str = ""
    predicate_id: str = ""
    rank_value: int = 0
    rank_source: str = "article_size"

    def __post_init__(self):
        if not self.object_ids:
            raise ValueError(f"triple {self.subject_id} has no objects")
        if self.rank_value < 0:
            raise ValueError("rank_value must be >= 0")
        if self.rank_source not in RANK_SOURCES:
            raise ValueError(f"unknown rank source {self.rank_source!r}")
        for lang, labels in self.object_labels.items():
            if len(labels) != len(self.object_ids):
                raise ValueError(
                    f"triple {self.subject_id}: {lang} object labels not aligned with object ids"
                )
            if lang not in self.subject_labels:
                raise ValueError(f"triple {self.subject_id}: missing {lang} subject label")

    @property
    def languages(self) -> tuple[str, ...]:
        return tuple(sorted(self.subject_labels))

    def labels_for(self, language: str) -> tuple[str, ...]:
        return self.object_labels[language]


@dataclass
class BenchmarkSet:
    """All triples for one (pair, region, predicate) slice."""

    pair: str
    region: str
    predicate_id: str
    augmented: bool
    triples: list[FactTriple]
    provenance: dict[str, str]

    def __post_init__(self):
        for key in ("created_at", "cache_digest", "tool_version"):
            if key not in self.provenance:
                raise ValueError(f"provenance is missing {key!r}")


@dataclass(frozen=True)
class PredictionRecord:
    """A model's answer for one triple: a ranked candidate list or the raw
    free-text response, never both."""

    predicate_id: str
    subject_id: str
    ranked_candidates: tuple[str, ...] | None = None
    free_text: str | None = None

    def __post_init__(self):
        has_rank = bool(self.ranked_candidates)
        has_text = self.free_text is not None
        if has_rank == has_text:
            raise ValueError("record needs exactly one of ranked_candidates / free_text")
        if has_rank and len(set(self.ranked_candidates)) != len(self.ranked_candidates):
            raise ValueError("ranked_candidates contains duplicate labels")

    @property
    def triple_ref(self) -> tuple[str, str]:
        return (self.predicate_id, self.subject_id)


@dataclass
class PredictionFile:
    model_id: str
    prompt_language: str
    records: list[PredictionRecord]


@dataclass(frozen=True)
class PromptTask:
    predicate_id: str
    subject_id: str
    prompt: str


@dataclass
class PromptFile:
    pair: str
    language: str
    mode: str  # cloze | qa
    candidates: dict[str, tuple[str, ...]]  # predicate -> ranked label universe
    tasks: list[PromptTask]


@dataclass(frozen=True)
class PredicateReport:
    region: str
    predicate_id: str
    p_at_1: float
    n: int
    entropy: float
    distribution: dict[str, tuple[int, int]] = field(hash=False, default_factory=dict)


@dataclass
class EvalReport:
    model_id: str
    prompt_language: str
    p_at_1: float
    n_triples: int
    per_predicate: dict[tuple[str, str], PredicateReport]


# ------------------------------------------------------------- line helpers


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _decode_line(raw: bytes, line_no: int, path: str | None) -> dict:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise StoreError(f"invalid UTF-8: {exc}", line=line_no, path=path) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StoreError(f"invalid JSON: {exc.msg}", line=line_no, path=path) from exc
    if not isinstance(obj, dict):
        raise StoreError("record is not a JSON object", line=line_no, path=path)
    return obj


def _check_keys(obj: dict, required: dict[str, type | tuple], line_no: int, path: str | None):
    for key in obj:
        if key not in required:
            raise StoreError(f"unknown field {key!r}", line=line_no, path=path)
    for key, types in required.items():
        if key not in obj:
            raise StoreError(f"missing field {key!r}", line=line_no, path=path)
        if types is not None and not isinstance(obj[key], types):
            raise StoreError(f"field {key!r} has the wrong type", line=line_no, path=path)


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise StoreError(f"cannot read file: {exc}", line=0, path=str(path)) from exc


def _read_lines(path: Path) -> list[bytes]:
    data = _read_bytes(path)
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    if not lines:
        raise StoreError("file is empty", line=0, path=str(path))
    return lines


def _atomic_write(path: Path, lines: list[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lock = FileLock(str(path) + ".lock")
    with lock:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, path)


def _check_schema_header(obj: dict, kind: str, line_no: int, path: str | None):
    version = obj.get("dlama_schema")
    if version != SCHEMA_VERSION:
        raise StoreError(
            f"unsupported schema version {version!r} (expected {SCHEMA_VERSION})",
            line=line_no,
            path=path,
        )
    if obj.get("kind") != kind:
        raise StoreError(f"expected a {kind!r} file, got {obj.get('kind')!r}", line=line_no, path=path)


# ---------------------------------------------------------------- benchmarks

_BENCH_HEADER_KEYS = {
    "dlama_schema": int,
    "kind": str,
    "pair": str,
    "region": str,
    "predicate_id": str,
    "augmented": bool,
    "n_triples": int,
    "provenance": dict,
}

_TRIPLE_KEYS = {
    "subject_id": str,
    "subject_labels": dict,
    "object_ids": list,
    "object_labels": dict,
    "region_name": str,
    "predicate_id": str,
    "rank_value": int,
    "rank_source": str,
}


def write_benchmark(bset: BenchmarkSet, path: str | Path) -> None:
    header = {
        "dlama_schema": SCHEMA_VERSION,
        "kind": "benchmark",
        "pair": bset.pair,
        "region": bset.region,
        "predicate_id": bset.predicate_id,
        "augmented": bset.augmented,
        "n_triples": len(bset.triples),
        "provenance": {
            "created_at": bset.provenance["created_at"],
            "cache_digest": bset.provenance["cache_digest"],
            "tool_version": bset.provenance["tool_version"],
        },
    }
    lines = [_dumps(header)]
    for t in bset.triples:
        lines.append(
            _dumps(
                {
                    "subject_id": t.subject_id,
                    "subject_labels": {k: t.subject_labels[k] for k in sorted(t.subject_labels)},
                    "object_ids": list(t.object_ids),
                    "object_labels": {k: list(t.object_labels[k]) for k in sorted(t.object_labels)},
                    "region_name": t.region_name,
                    "predicate_id": t.predicate_id,
                    "rank_value": t.rank_value,
                    "rank_source": t.rank_source,
                }
            )
        )
    _atomic_write(Path(path), lines)


def _parse_triple(obj: dict, line_no: int, path: str | None) -> FactTriple:
    _check_keys(obj, _TRIPLE_KEYS, line_no, path)
    if not is_qid(obj["subject_id"]):
        raise StoreError(f"subject_id {obj['subject_id']!r} is not a Q-id", line=line_no, path=path)
    if not is_pid(obj["predicate_id"]):
        raise StoreError(f"predicate_id {obj['predicate_id']!r} is not a P-id", line=line_no, path=path)
    object_ids = obj["object_ids"]
    if not object_ids:
        raise StoreError("object_ids must be non-empty", line=line_no, path=path)
    for oid in object_ids:
        if not is_qid(oid):
            raise StoreError(f"object id {oid!r} is not a Q-id", line=line_no, path=path)
    subject_labels = obj["subject_labels"]
    object_labels = obj["object_labels"]
    if set(subject_labels) != set(object_labels) or not subject_labels:
        raise StoreError("subject and object label languages differ or are empty", line=line_no, path=path)
    for lang, label in subject_labels.items():
        if not isinstance(label, str) or not label:
            raise StoreError(f"bad {lang} subject label", line=line_no, path=path)
    parsed_labels: dict[str, tuple[str, ...]] = {}
    for lang, labels in object_labels.items():
        if not isinstance(labels, list) or len(labels) != len(object_ids):
            raise StoreError(f"{lang} object labels not aligned with object_ids", line=line_no, path=path)
        for label in labels:
            if not isinstance(label, str) or not label:
                raise StoreError(f"bad {lang} object label", line=line_no, path=path)
        parsed_labels[lang] = tuple(labels)
    if obj["rank_value"] < 0 or isinstance(obj["rank_value"], bool):
        raise StoreError("rank_value must be a non-negative integer", line=line_no, path=path)
    if obj["rank_source"] not in RANK_SOURCES:
        raise StoreError(f"unknown rank_source {obj['rank_source']!r}", line=line_no, path=path)
    return FactTriple(
        subject_id=obj["subject_id"],
        subject_labels=dict(subject_labels),
        object_ids=tuple(object_ids),
        object_labels=parsed_labels,
        region_name=obj["region_name"],
        predicate_id=obj["predicate_id"],
        rank_value=obj["rank_value"],
        rank_source=obj["rank_source"],
    )


def read_benchmark(path: str | Path) -> BenchmarkSet:
    path = Path(path)
    return parse_benchmark_bytes(_read_bytes(path), path=str(path))


def parse_benchmark_bytes(data: bytes, path: str | None = None) -> BenchmarkSet:
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    if not lines:
        raise StoreError("file is empty", line=0, path=path)
    header = _decode_line(lines[0], 1, path)
    _check_schema_header(header, "benchmark", 1, path)
    _check_keys(header, _BENCH_HEADER_KEYS, 1, path)
    prov = header["provenance"]
    _check_keys(
        prov,
        {"created_at": str, "cache_digest": str, "tool_version": str},
        1,
        path,
    )
    triples = []
    for idx, raw in enumerate(lines[1:], start=2):
        obj = _decode_line(raw, idx, path)
        triple = _parse_triple(obj, idx, path)
        if triple.predicate_id != header["predicate_id"]:
            raise StoreError("triple predicate differs from header", line=idx, path=path)
        if triple.region_name != header["region"]:
            raise StoreError("triple region differs from header", line=idx, path=path)
        triples.append(triple)
    if header["n_triples"] != len(triples):
        raise StoreError(
            f"header says {header['n_triples']} triples, file has {len(triples)}",
            line=1,
            path=path,
        )
    return BenchmarkSet(
        pair=header["pair"],
        region=header["region"],
        predicate_id=header["predicate_id"],
        augmented=header["augmented"],
        triples=triples,
        provenance=dict(prov),
    )


# --------------------------------------------------------------- predictions

_PRED_HEADER_KEYS = {
    "dlama_schema": int,
    "kind": str,
    "model_id": str,
    "prompt_language": str,
    "n_records": int,
}

_PRED_RECORD_KEYS = {
    "predicate_id": str,
    "subject_id": str,
    "ranked_candidates": (list, type(None)),
    "free_text": (str, type(None)),
}


def write_predictions(pred: PredictionFile, path: str | Path) -> None:
    header = {
        "dlama_schema": SCHEMA_VERSION,
        "kind": "predictions",
        "model_id": pred.model_id,
        "prompt_language": pred.prompt_language,
        "n_records": len(pred.records),
    }
    lines = [_dumps(header)]
    for r in pred.records:
        lines.append(
            _dumps(
                {
                    "predicate_id": r.predicate_id,
                    "subject_id": r.subject_id,
                    "ranked_candidates": list(r.ranked_candidates) if r.ranked_candidates else None,
                    "free_text": r.free_text,
                }
            )
        )
    _atomic_write(Path(path), lines)


def read_predictions(path: str | Path) -> PredictionFile:
    path = Path(path)
    lines = _read_lines(path)
    header = _decode_line(lines[0], 1, str(path))
    _check_schema_header(header, "predictions", 1, str(path))
    _check_keys(header, _PRED_HEADER_KEYS, 1, str(path))
    records = []
    for idx, raw in enumerate(lines[1:], start=2):
        obj = _decode_line(raw, idx, str(path))
        _check_keys(obj, _PRED_RECORD_KEYS, idx, str(path))
        if not is_pid(obj["predicate_id"]) or not is_qid(obj["subject_id"]):
            raise StoreError("bad triple reference", line=idx, path=str(path))
        ranked = obj["ranked_candidates"]
        text = obj["free_text"]
        if (ranked is None) == (text is None):
            raise StoreError(
                "record needs exactly one of ranked_candidates / free_text",
                line=idx,
                path=str(path),
            )
        if ranked is not None:
            if not ranked or not all(isinstance(c, str) for c in ranked):
                raise StoreError("ranked_candidates must be a non-empty list of strings", line=idx, path=str(path))
            if len(set(ranked)) != len(ranked):
                raise StoreError("ranked_candidates contains duplicates", line=idx, path=str(path))
        try:
            records.append(
                PredictionRecord(
                    predicate_id=obj["predicate_id"],
                    subject_id=obj["subject_id"],
                    ranked_candidates=tuple(ranked) if ranked is not None else None,
                    free_text=text,
                )
            )
        except ValueError as exc:
            raise StoreError(str(exc), line=idx, path=str(path)) from exc
    if header["n_records"] != len(records):
        raise StoreError(
            f"header says {header['n_records']} records, file has {len(records)}",
            line=1,
            path=str(path),
        )
    return PredictionFile(
        model_id=header["model_id"],
        prompt_language=header["prompt_language"],
        records=records,
    )


# ------------------------------------------------------------------- prompts

_PROMPT_HEADER_KEYS = {
    "dlama_schema": int,
    "kind": str,
    "pair": str,
    "language": str,
    "mode": str,
    "candidates": dict,
}

_PROMPT_TASK_KEYS = {"predicate_id": str, "subject_id": str, "prompt": str}


def write_prompts(pf: PromptFile, path: str | Path) -> None:
    if pf.mode not in PROMPT_MODES:
        raise ValueError(f"unknown prompt mode {pf.mode!r}")
    header = {
        "dlama_schema": SCHEMA_VERSION,
        "kind": "prompts",
        "pair": pf.pair,
        "language": pf.language,
        "mode": pf.mode,
        "candidates": {pid: list(labels) for pid, labels in sorted(pf.candidates.items())},
    }
    lines = [_dumps(header)]
    for t in pf.tasks:
        lines.append(
            _dumps({"predicate_id": t.predicate_id, "subject_id": t.subject_id, "prompt": t.prompt})
        )
    _atomic_write(Path(path), lines)


def read_prompts(path: str | Path) -> PromptFile:
    path = Path(path)
    lines = _read_lines(path)
    header = _decode_line(lines[0], 1, str(path))
    _check_schema_header(header, "prompts", 1, str(path))
    _check_keys(header, _PROMPT_HEADER_KEYS, 1, str(path))
    if header["mode"] not in PROMPT_MODES:
        raise StoreError(f"unknown prompt mode {header['mode']!r}", line=1, path=str(path))
    candidates = {}
    for pid, labels in header["candidates"].items():
        if not isinstance(labels, list) or not all(isinstance(c, str) for c in labels):
            raise StoreError(f"bad candidate list for {pid}", line=1, path=str(path))
        candidates[pid] = tuple(labels)
    tasks = []
    for idx, raw in enumerate(lines[1:], start=2):
        obj = _decode_line(raw, idx, str(path))
        _check_keys(obj, _PROMPT_TASK_KEYS, idx, str(path))
        tasks.append(PromptTask(obj["predicate_id"], obj["subject_id"], obj["prompt"]))
    return PromptFile(
        pair=header["pair"],
        language=header["language"],
        mode=header["mode"],
        candidates=candidates,
        tasks=tasks,
    )


# -------------------------------------------------------------------- reports

_REPORT_HEADER_KEYS = {
    "dlama_schema": int,
    "kind": str,
    "model_id": str,
    "prompt_language": str,
    "p_at_1": (int, float),
    "n_triples": int,
}

_REPORT_ROW_KEYS = {
    "region": str,
    "predicate_id": str,
    "p_at_1": (int, float),
    "n": int,
    "entropy": (int, float),
    "distribution": dict,
}


def write_report(report: EvalReport, path: str | Path) -> None:
    header = {
        "dlama_schema": SCHEMA_VERSION,
        "kind": "eval_report",
        "model_id": report.model_id,
        "prompt_language": report.prompt_language,
        "p_at_1": report.p_at_1,
        "n_triples": report.n_triples,
    }
    lines = [_dumps(header)]
    for (region, pid) in sorted(report.per_predicate):
        row = report.per_predicate[(region, pid)]
        lines.append(
            _dumps(
                {
                    "region": row.region,
                    "predicate_id": row.predicate_id,
                    "p_at_1": row.p_at_1,
                    "n": row.n,
                    "entropy": row.entropy,
                    "distribution": {
                        label: list(counts) for label, counts in sorted(row.distribution.items())
                    },
                }
            )
        )
    _atomic_write(Path(path), lines)


def read_report(path: str | Path) -> EvalReport:
    path = Path(path)
    lines = _read_lines(path)
    header = _decode_line(lines[0], 1, str(path))
    _check_schema_header(header, "eval_report", 1, str(path))
    _check_keys(header, _REPORT_HEADER_KEYS, 1, str(path))
    per_predicate: dict[tuple[str, str], PredicateReport] = {}
    total_n = 0
    for idx, raw in enumerate(lines[1:], start=2):
        obj = _decode_line(raw, idx, str(path))
        _check_keys(obj, _REPORT_ROW_KEYS, idx, str(path))
        dist = {}
        for label, counts in obj["distribution"].items():
            if (
                not isinstance(counts, list)
                or len(counts) != 2
                or not all(isinstance(c, int) and c >= 0 for c in counts)
            ):
                raise StoreError(f"bad distribution entry for {label!r}", line=idx, path=str(path))
            dist[label] = (counts[0], counts[1])
        row = PredicateReport(
            region=obj["region"],
            predicate_id=obj["predicate_id"],
            p_at_1=float(obj["p_at_1"]),
            n=obj["n"],
            entropy=float(obj["entropy"]),
            distribution=dist,
        )
        key = (row.region, row.predicate_id)
        if key in per_predicate:
            raise StoreError(f"duplicate report row for {key}", line=idx, path=str(path))
        per_predicate[key] = row
        total_n += row.n
    if total_n != header["n_triples"]:
        raise StoreError(
            f"per-predicate Ns sum to {total_n}, header says {header['n_triples']}",
            line=1,
            path=str(path),
        )
    return EvalReport(
        model_id=header["model_id"],
        prompt_language=header["prompt_language"],
        p_at_1=float(header["p_at_1"]),
        n_triples=header["n_triples"],
        per_predicate=per_predicate,
    )


# ---------------------------------------------------------------- triple dumps


def read_triple_dump(path: str | Path) -> Iterator[tuple[str, str, tuple[str, ...]]]:
    """Iterate (subject_id, predicate_id, object_ids) rows from an external
    dump file: JSONL, optionally gzip-compressed, one triple per line with
    ``subject_id``/``predicate_id`` and ``object_id`` or ``object_ids``."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    try:
        handle = opener(path, "rb")
    except OSError as exc:
        raise StoreError(f"cannot read file: {exc}", line=0, path=str(path)) from exc
    with handle:
        for idx, raw in enumerate(handle, start=1):
            raw = raw.strip()
            if not raw:
                continue
            obj = _decode_line(raw, idx, str(path))
            try:
                subject = obj["subject_id"]
                predicate = obj["predicate_id"]
            except KeyError as exc:
                raise StoreError(f"dump row missing {exc}", line=idx, path=str(path)) from exc
            if "object_ids" in obj:
                objects = tuple(obj["object_ids"])
            elif "object_id" in obj:
                objects = (obj["object_id"],)
            else:
                raise StoreError("dump row has no object", line=idx, path=str(path))
            yield subject, predicate, objects


# -------------------------------------------------------------------- schema


def print_schema() -> str:
    return f"""dlama file formats (schema version {SCHEMA_VERSION})
All files are UTF-8 JSONL: a header line, then one record per line.
Keys are emitted in a fixed order; readers reject unknown fields.

benchmark  header: dlama_schema, kind="benchmark", pair, region,
           predicate_id, augmented, n_triples,
           provenance{{created_at, cache_digest, tool_version}}
           record: subject_id, subject_labels{{lang: label}},
           object_ids[], object_labels{{lang: [label per object]}},
           region_name, predicate_id, rank_value, rank_source
           (n_triples=0 marks an intentionally empty set)

predictions header: dlama_schema, kind="predictions", model_id,
           prompt_language, n_records
           record: predicate_id, subject_id,
           ranked_candidates[] XOR free_text

prompts    header: dlama_schema, kind="prompts", pair, language,
           mode="cloze"|"qa", candidates{{predicate: [labels]}}
           record: predicate_id, subject_id, prompt
           (cloze prompts carry the mask marker ⟨MASK⟩)

eval_report header: dlama_schema, kind="eval_report", model_id,
           prompt_language, p_at_1, n_triples
           record: region, predicate_id, p_at_1, n, entropy,
           distribution{{label: [correct, wrong]}}

triple dump (external input): JSONL rows with subject_id, predicate_id,
           object_id (or object_ids[]); .gz accepted.
"""


def make_provenance(created_at: str, cache_digest: str) -> dict[str, str]:
    return {
        "created_at": created_at,
        "cache_digest": cache_digest,
        "tool_version": __version__,
    }
