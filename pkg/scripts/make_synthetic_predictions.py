"""Generate the bundled synthetic prediction files used by the evaluation
tests, so the whole primary suite runs without any model scorer.

Predictions are drawn with a fixed seed from the pair-level candidate set:
roughly 60% of records get a gold top-1 pick, the rest a random wrong one.

Usage: python scripts/make_synthetic_predictions.py
"""

from __future__ import annotations

import random
from pathlib import Path

from dlama.evaluate import build_candidate_set
from dlama.store import (
    PredictionFile,
    PredictionRecord,
    read_benchmark,
    write_predictions,
)

ROOT = Path(__file__).resolve().parent.parent
BENCH = ROOT / "tests" / "data" / "benchmarks"
OUT = ROOT / "tests" / "data" / "predictions"

LANGUAGE = "ar"
HIT_RATE = 0.6
TOP_N = 5


def ranked_predictions(pid: str, rng: random.Random) -> PredictionFile:
    sets = [
        read_benchmark(BENCH / f"arab_west__{region}__{pid}.jsonl")
        for region in ("arab", "west")
    ]
    candidates = list(build_candidate_set(sets, LANGUAGE).labels)
    records = []
    for bset in sets:
        for t in bset.triples:
            gold = list(t.object_labels[LANGUAGE])
            if rng.random() < HIT_RATE:
                top = rng.choice(gold)
            else:
                wrong = [c for c in candidates if c not in gold]
                top = rng.choice(wrong) if wrong else rng.choice(candidates)
            rest = [c for c in candidates if c != top]
            rng.shuffle(rest)
            ranked = tuple([top] + rest[: TOP_N - 1])
            records.append(
                PredictionRecord(
                    predicate_id=pid, subject_id=t.subject_id, ranked_candidates=ranked
                )
            )
    return PredictionFile(model_id="synthetic-rng-0", prompt_language=LANGUAGE, records=records)


def qa_predictions(pid: str, rng: random.Random) -> PredictionFile:
    bset = read_benchmark(BENCH / f"arab_west__arab__{pid}.jsonl")
    records = []
    for t in bset.triples:
        gold = list(t.object_labels[LANGUAGE])
        if rng.random() < HIT_RATE:
            text = f"الإجابة هي {rng.choice(gold)} ."
        else:
            text = "لا أعرف الإجابة ."
        records.append(
            PredictionRecord(predicate_id=pid, subject_id=t.subject_id, free_text=text)
        )
    return PredictionFile(model_id="synthetic-qa-0", prompt_language=LANGUAGE, records=records)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240917)
    for pid in ("P30", "P36"):
        path = OUT / f"synthetic__{pid}__{LANGUAGE}.jsonl"
        write_predictions(ranked_predictions(pid, rng), path)
        print(path.name)
    path = OUT / f"synthetic_qa__P36__{LANGUAGE}.jsonl"
    write_predictions(qa_predictions("P36", rng), path)
    print(path.name)


if __name__ == "__main__":
    main()
