"""Readers/writers for the dlama JSONL surfaces this package touches.

Implemented against the published schema (`dlama print-schema`), schema
version 1: a header line, one JSON record per following line, fixed key
order on write.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

SCHEMA_VERSION = 1

MASK_MARKER = "⟨MASK⟩"


class FormatError(ValueError):
    def __init__(self, message: str, line: int = 0, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path or '<stream>'}:{line}" if line else (path or "<stream>")
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class PromptTask:
    predicate_id: str
    subject_id: str
    prompt: str


@dataclass
class PromptFile:
    pair: str
    language: str
    mode: str
    candidates: dict[str, list[str]]
    tasks: list[PromptTask]


@dataclass(frozen=True)
class Prediction:
    predicate_id: str
    subject_id: str
    ranked_candidates: tuple[str, ...] | None = None
    free_text: str | None = None


def _loads(raw: str, line_no: int, path: str) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", line=line_no, path=path) from exc
    if not isinstance(obj, dict):
        raise FormatError("record is not a JSON object", line=line_no, path=path)
    return obj


def read_prompts(path: str | Path) -> PromptFile:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError("file is empty", line=0, path=str(path))
    header = _loads(lines[0], 1, str(path))
    if header.get("dlama_schema") != SCHEMA_VERSION:
        raise FormatError(
            f"unsupported schema version {header.get('dlama_schema')!r}", line=1, path=str(path)
        )
    if header.get("kind") != "prompts":
        raise FormatError(f"expected a prompts file, got {header.get('kind')!r}", line=1, path=str(path))
    if header.get("mode") not in ("cloze", "qa"):
        raise FormatError(f"unknown mode {header.get('mode')!r}", line=1, path=str(path))
    tasks = []
    for idx, raw in enumerate(lines[1:], start=2):
        obj = _loads(raw, idx, str(path))
        try:
            tasks.append(PromptTask(obj["predicate_id"], obj["subject_id"], obj["prompt"]))
        except KeyError as exc:
            raise FormatError(f"task is missing {exc}", line=idx, path=str(path)) from exc
    return PromptFile(
        pair=header.get("pair", ""),
        language=header["language"],
        mode=header["mode"],
        candidates={pid: list(labels) for pid, labels in header.get("candidates", {}).items()},
        tasks=tasks,
    )


def write_predictions(
    model_id: str, prompt_language: str, records: list[Prediction], path: str | Path
) -> None:
    for r in records:
        if (r.ranked_candidates is None) == (r.free_text is None):
            raise ValueError(f"record {r.subject_id} needs exactly one payload")
    header = {
        "dlama_schema": SCHEMA_VERSION,
        "kind": "predictions",
        "model_id": model_id,
        "prompt_language": prompt_language,
        "n_records": len(records),
    }
    lines = [json.dumps(header, ensure_ascii=False, separators=(",", ":"))]
    for r in records:
        lines.append(
            json.dumps(
                {
                    "predicate_id": r.predicate_id,
                    "subject_id": r.subject_id,
                    "ranked_candidates": list(r.ranked_candidates)
                    if r.ranked_candidates is not None
                    else None,
                    "free_text": r.free_text,
                },
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".{os.getpid()}.tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def read_predictions(path: str | Path) -> tuple[dict, list[Prediction]]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    header = _loads(lines[0], 1, str(path))
    records = []
    for idx, raw in enumerate(lines[1:], start=2):
        obj = _loads(raw, idx, str(path))
        ranked = obj.get("ranked_candidates")
        records.append(
            Prediction(
                predicate_id=obj["predicate_id"],
                subject_id=obj["subject_id"],
                ranked_candidates=tuple(ranked) if ranked is not None else None,
                free_text=obj.get("free_text"),
            )
        )
    return header, records
