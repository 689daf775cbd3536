"""Prompt rendering, candidate sets, and the evaluation metrics:
precision at rank 1, object entropy, label unification, the Western-share
audit of external dumps, substring QA scoring, and raw-vs-augmented deltas.
"""

from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import EvalError
from .regions import PromptTemplate, Region
from .store import (
    BenchmarkSet,
    EvalReport,
    FactTriple,
    PredicateReport,
    PredictionFile,
)

MASK_MARKER = "⟨MASK⟩"  # ⟨MASK⟩; scorers expand it to mask slots

_PLACEHOLDER_RE = re.compile(r"(\[X\]|\[Y\])")


# ------------------------------------------------------------------ prompts


def render_prompt(template: PromptTemplate, triple: FactTriple, language: str) -> str:
    """Fill [X] with the subject label and [Y] with the mask marker.

    Substitution is positional over the template, so placeholder-looking
    text inside the subject label is never re-substituted.
    """
    if template.language != language:
        raise EvalError(f"template is for {template.language!r}, not {language!r}")
    if "[Y]" not in template.pattern or "[X]" not in template.pattern:
        raise EvalError(f"template {template.predicate_id}/{language} lacks [X]/[Y]")
    subject = triple.subject_labels.get(language)
    if not subject:
        raise EvalError(f"triple {triple.subject_id} has no {language!r} subject label")
    parts = _PLACEHOLDER_RE.split(template.pattern)
    out = []
    for part in parts:
        if part == "[X]":
            out.append(subject)
        elif part == "[Y]":
            out.append(MASK_MARKER)
        else:
            out.append(part)
    return "".join(out)


def render_question(template: PromptTemplate, triple: FactTriple, language: str) -> str:
    """Fill [X] into the question form used for generative probing."""
    if template.question_pattern is None:
        raise EvalError(f"template {template.predicate_id}/{language} has no question form")
    subject = triple.subject_labels.get(language)
    if not subject:
        raise EvalError(f"triple {triple.subject_id} has no {language!r} subject label")
    parts = _PLACEHOLDER_RE.split(template.question_pattern)
    return "".join(subject if part == "[X]" else part for part in parts)


def build_candidate_set(
    sets: BenchmarkSet | Sequence[BenchmarkSet], language: str
) -> "CandidateSet":
    """Union of all gold object labels of the predicate across the given
    benchmark slices, deduplicated and sorted for determinism."""
    if isinstance(sets, BenchmarkSet):
        sets = [sets]
    if not sets:
        raise EvalError("no benchmark sets given")
    predicate = sets[0].predicate_id
    labels: set[str] = set()
    for bset in sets:
        if bset.predicate_id != predicate:
            raise EvalError(
                f"candidate set mixes predicates {predicate} and {bset.predicate_id}"
            )
        for t in bset.triples:
            if language not in t.object_labels:
                raise EvalError(f"triple {t.subject_id} has no {language!r} labels")
            labels.update(t.object_labels[language])
    return CandidateSet(predicate_id=predicate, language=language, labels=tuple(sorted(labels)))


@dataclass(frozen=True)
class CandidateSet:
    predicate_id: str
    language: str
    labels: tuple[str, ...]


# ------------------------------------------------------------------ unifier


@dataclass(frozen=True)
class LabelUnifier:
    """Surface-form merges applied to predictions and gold labels alike."""

    mapping: dict[str, str] = field(hash=False, default_factory=dict)

    def __post_init__(self):
        # Canonical labels must map to themselves so unify is idempotent.
        for surface, canonical in list(self.mapping.items()):
            final = self.mapping.get(canonical, canonical)
            if final != canonical:
                self.mapping[surface] = final
        for canonical in list(self.mapping.values()):
            self.mapping.setdefault(canonical, canonical)

    def unify(self, label: str) -> str:
        return self.mapping.get(label, label)


def unify(label: str, unifier: LabelUnifier | None) -> str:
    return unifier.unify(label) if unifier is not None else label


def builtin_unifier() -> LabelUnifier:
    """The bundled religion-label merges (inflected forms to the religion)."""
    return LabelUnifier(
        {
            "Muslim": "Islam",
            "Christian": "Christianity",
            "Hindu": "Hinduism",
        }
    )


# ------------------------------------------------------------------ entropy


def _representative_objects(triples: Sequence[FactTriple]) -> list[str]:
    """Per triple, the object that is most frequent across the whole slice;
    frequency ties break on the object's English label (id as fallback)."""
    counts: dict[str, int] = {}
    for t in triples:
        for obj in t.object_ids:
            counts[obj] = counts.get(obj, 0) + 1

    def tie_label(obj: str, triple: FactTriple) -> str:
        labels = triple.object_labels.get("en")
        if labels is not None:
            return labels[triple.object_ids.index(obj)]
        return obj

    picks = []
    for t in triples:
        best = min(t.object_ids, key=lambda o: (-counts[o], tie_label(o, t)))
        picks.append(best)
    return picks


def compute_entropy(bset: BenchmarkSet | Sequence[FactTriple]) -> float:
    """Shannon entropy (base 2) of the representative-object distribution."""
    triples = bset.triples if isinstance(bset, BenchmarkSet) else list(bset)
    if not triples:
        raise EvalError("cannot compute entropy of an empty benchmark set")
    picks = _representative_objects(triples)
    counts: dict[str, int] = {}
    for obj in picks:
        counts[obj] = counts.get(obj, 0) + 1
    n = len(picks)
    # Sum in a fixed key order so the result is permutation-invariant.
    h = -sum((c / n) * math.log2(c / n) for _, c in sorted(counts.items()))
    return h + 0.0  # fold -0.0 into 0.0


# --------------------------------------------------------------------- P@1


def _gold_index(gold_sets: Iterable[BenchmarkSet]):
    index: dict[tuple[str, str], tuple[str, FactTriple]] = {}
    for bset in gold_sets:
        for t in bset.triples:
            index[(t.predicate_id, t.subject_id)] = (bset.region, t)
    return index


def score_qa_response(response: str, gold_labels: Iterable[str], case_sensitive: bool = True) -> bool:
    """True when any gold label occurs verbatim inside the response.

    Both sides are NFC-normalized and whitespace-collapsed first; casing
    is kept unless case_sensitive is off.
    """

    def norm(text: str) -> str:
        text = unicodedata.normalize("NFC", text)
        text = " ".join(text.split())
        return text if case_sensitive else text.casefold()

    haystack = norm(response)
    return any(norm(label) and norm(label) in haystack for label in gold_labels)


def compute_p_at_1(
    predictions: PredictionFile,
    gold: BenchmarkSet | Sequence[BenchmarkSet],
    unifier: LabelUnifier | None = None,
    qa_case_sensitive: bool = True,
) -> EvalReport:
    """Join predictions to their gold triples and score precision at rank 1.

    A ranked record is a hit when its unified top label matches any unified
    gold label; a free-text record is a hit under the substring rule.
    """
    gold_sets = [gold] if isinstance(gold, BenchmarkSet) else list(gold)
    index = _gold_index(gold_sets)

    orphans = [r.triple_ref for r in predictions.records if r.triple_ref not in index]
    if orphans:
        shown = ", ".join(f"{p}/{s}" for p, s in orphans[:10])
        more = f" (+{len(orphans) - 10} more)" if len(orphans) > 10 else ""
        raise EvalError(f"records without a gold triple: {shown}{more}")

    language = predictions.prompt_language
    hits_by_key: dict[tuple[str, str], list[bool]] = {}
    dist_by_key: dict[tuple[str, str], dict[str, list[int]]] = {}
    for record in predictions.records:
        region, triple = index[record.triple_ref]
        if language not in triple.object_labels:
            raise EvalError(
                f"gold triple {record.subject_id} has no {language!r} labels"
            )
        gold_labels = {unify(label, unifier) for label in triple.object_labels[language]}
        key = (region, record.predicate_id)
        if record.ranked_candidates:
            top = unify(record.ranked_candidates[0], unifier)
            hit = top in gold_labels
            slot = dist_by_key.setdefault(key, {}).setdefault(top, [0, 0])
            slot[0 if hit else 1] += 1
        else:
            hit = score_qa_response(record.free_text or "", gold_labels, qa_case_sensitive)
        hits_by_key.setdefault(key, []).append(hit)

    gold_triples_by_key: dict[tuple[str, str], list[FactTriple]] = {}
    for bset in gold_sets:
        for t in bset.triples:
            gold_triples_by_key.setdefault((bset.region, t.predicate_id), []).append(t)

    per_predicate: dict[tuple[str, str], PredicateReport] = {}
    total_hits = 0
    total_n = 0
    for key, hits in sorted(hits_by_key.items()):
        region, pid = key
        n = len(hits)
        n_hits = sum(hits)
        total_hits += n_hits
        total_n += n
        per_predicate[key] = PredicateReport(
            region=region,
            predicate_id=pid,
            p_at_1=100.0 * n_hits / n,
            n=n,
            entropy=compute_entropy(gold_triples_by_key[key]),
            distribution={
                label: (c, w) for label, (c, w) in sorted(dist_by_key.get(key, {}).items())
            },
        )
    if total_n == 0:
        raise EvalError("prediction file has no records")
    return EvalReport(
        model_id=predictions.model_id,
        prompt_language=language,
        p_at_1=100.0 * total_hits / total_n,
        n_triples=total_n,
        per_predicate=per_predicate,
    )


# ---------------------------------------------------------------- bias audit


@dataclass(frozen=True)
class BiasRow:
    western: int
    rest: int
    unknown: int

    @property
    def total(self) -> int:
        return self.western + self.rest + self.unknown

    def percentages(self) -> tuple[float, float, float]:
        if not self.total:
            return (0.0, 0.0, 0.0)
        return (
            100.0 * self.western / self.total,
            100.0 * self.rest / self.total,
            100.0 * self.unknown / self.total,
        )


@dataclass
class BiasReport:
    rows: dict[str, BiasRow]
    total: BiasRow


def bias_audit(
    triples: Iterable[tuple[str, str, tuple[str, ...]]],
    western: Region,
    resolver: Callable[[str], frozenset[str] | None],
) -> BiasReport:
    """Count, per predicate, the dump triples tied to a Western country.

    The resolver maps an entity to the countries it is a citizen of or
    located in (None when the entity cannot be resolved). A triple counts
    as Western when any side touches a Western country, as rest-of-world
    when at least one side resolves but none is Western, and as unknown
    otherwise.
    """
    western_ids = set(western.country_ids)
    counts: dict[str, list[int]] = {}
    cache: dict[str, frozenset[str] | None] = {}

    def resolve(entity: str) -> frozenset[str] | None:
        if entity not in cache:
            cache[entity] = resolver(entity)
        return cache[entity]

    for subject, predicate, objects in triples:
        slot = counts.setdefault(predicate, [0, 0, 0])
        resolved_any = False
        is_western = False
        for entity in (subject, *objects):
            # A country id needs no lookup: it is located in itself.
            countries = frozenset({entity}) if entity in western_ids else resolve(entity)
            if countries is None:
                continue
            resolved_any = True
            if countries & western_ids:
                is_western = True
                break
        if is_western:
            slot[0] += 1
        elif resolved_any:
            slot[1] += 1
        else:
            slot[2] += 1

    rows = {pid: BiasRow(*slot) for pid, slot in sorted(counts.items())}
    total = BiasRow(
        sum(r.western for r in rows.values()),
        sum(r.rest for r in rows.values()),
        sum(r.unknown for r in rows.values()),
    )
    return BiasReport(rows=rows, total=total)


# ------------------------------------------------------- raw vs augmented


@dataclass(frozen=True)
class DeltaRow:
    region: str
    predicate_id: str  # "*" for the overall row
    raw: float
    augmented: float

    @property
    def delta(self) -> float:
        return self.augmented - self.raw

    @property
    def regression(self) -> bool:
        # With identical predictions, augmentation can only widen gold sets.
        return self.augmented < self.raw


def compare_raw_vs_augmented(report_raw: EvalReport, report_aug: EvalReport) -> list[DeltaRow]:
    """Per-cell P@1 deltas; a negative delta is flagged as a regression."""
    rows = [DeltaRow("*", "*", report_raw.p_at_1, report_aug.p_at_1)]
    keys = sorted(set(report_raw.per_predicate) | set(report_aug.per_predicate))
    for key in keys:
        raw_row = report_raw.per_predicate.get(key)
        aug_row = report_aug.per_predicate.get(key)
        if raw_row is None or aug_row is None:
            raise EvalError(f"reports do not cover the same cells: missing {key}")
        rows.append(DeltaRow(key[0], key[1], raw_row.p_at_1, aug_row.p_at_1))
    return rows


# ------------------------------------------------------------------ output


def format_report_table(report: EvalReport) -> str:
    lines = [
        f"model={report.model_id} language={report.prompt_language} "
        f"P@1={report.p_at_1:.1f} N={report.n_triples}",
        f"{'region':<16} {'predicate':<8} {'N':>6} {'entropy':>8} {'P@1':>7}",
    ]
    for key in sorted(report.per_predicate):
        row = report.per_predicate[key]
        lines.append(
            f"{row.region:<16} {row.predicate_id:<8} {row.n:>6} "
            f"{row.entropy:>8.1f} {row.p_at_1:>7.1f}"
        )
    return "\n".join(lines)


def distribution_csv(report: EvalReport) -> str:
    """Plot data mirroring the stacked-bar view: one row per predicted label."""
    lines = ["region,predicate_id,label,correct_count,wrong_count"]
    for key in sorted(report.per_predicate):
        row = report.per_predicate[key]
        for label, (correct, wrong) in sorted(row.distribution.items()):
            escaped = '"' + label.replace('"', '""') + '"' if ("," in label or '"' in label) else label
            lines.append(f"{row.region},{row.predicate_id},{escaped},{correct},{wrong}")
    return "\n".join(lines) + "\n"
