"""Candidate ranking under a masked language model.

A candidate of k subtokens is scored by expanding the prompt's mask
marker into k mask slots, reading each subtoken's probability at its
slot from a single forward pass, and taking the geometric mean. All
candidates of the same length share one forward pass, so scoring costs
one pass per length class per prompt.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer

from .formats import MASK_MARKER, Prediction, PromptFile, PromptTask

log = logging.getLogger("dlama_scorer")


@dataclass
class ScorerConfig:
    model_name: str
    device: str = "cpu"
    batch_size: int = 32
    max_mask_count: int = 10
    top_n: int = 10

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_mask_count < 1:
            raise ValueError("max_mask_count must be >= 1")


@dataclass
class RankedCandidate:
    label: str
    score: float
    subtoken_count: int
    truncated: bool = False  # exceeded max_mask_count, scored as -inf


class MaskedScorer:
    def __init__(self, cfg: ScorerConfig):
        self.cfg = cfg
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(cfg.model_name)
            self.model = AutoModelForMaskedLM.from_pretrained(cfg.model_name)
        except Exception as exc:
            raise RuntimeError(f"cannot load model {cfg.model_name!r}: {exc}") from exc
        self.model.to(cfg.device)
        self.model.eval()

    def _candidate_ids(self, label: str) -> list[int]:
        return self.tokenizer(label, add_special_tokens=False)["input_ids"]

    def _logprobs_by_k(
        self, prefix_ids: list[int], suffix_ids: list[int], ks: list[int]
    ) -> dict[int, torch.Tensor]:
        """Log-probabilities over the vocabulary at each mask slot, per mask
        count. All length classes of a prompt share padded batches of up to
        batch_size inputs."""
        mask_id = self.tokenizer.mask_token_id
        cls_id = self.tokenizer.cls_token_id
        sep_id = self.tokenizer.sep_token_id
        pad_id = self.tokenizer.pad_token_id
        rows = []
        for k in ks:
            ids = [cls_id] + prefix_ids + [mask_id] * k + suffix_ids + [sep_id]
            positions = list(range(1 + len(prefix_ids), 1 + len(prefix_ids) + k))
            rows.append((k, ids, positions))

        out: dict[int, torch.Tensor] = {}
        for start in range(0, len(rows), self.cfg.batch_size):
            chunk = rows[start : start + self.cfg.batch_size]
            width = max(len(ids) for _, ids, _ in chunk)
            input_ids = torch.full((len(chunk), width), pad_id, dtype=torch.long)
            attention = torch.zeros((len(chunk), width), dtype=torch.long)
            for row, (_, ids, _) in enumerate(chunk):
                input_ids[row, : len(ids)] = torch.tensor(ids)
                attention[row, : len(ids)] = 1
            with torch.no_grad():
                logits = self.model(
                    input_ids=input_ids.to(self.cfg.device),
                    attention_mask=attention.to(self.cfg.device),
                ).logits
            for row, (k, _, positions) in enumerate(chunk):
                out[k] = torch.log_softmax(logits[row, positions].double(), dim=-1)
        return out

    def rank_candidates(self, prompt: str, candidates: list[str]) -> list[RankedCandidate]:
        """Score every candidate against the prompt's single mask marker and
        return them sorted by descending score, ties broken by label."""
        if prompt.count(MASK_MARKER) != 1:
            raise ValueError(f"prompt must contain exactly one {MASK_MARKER}")
        prefix, suffix = prompt.split(MASK_MARKER)
        prefix_ids = self.tokenizer(prefix.strip(), add_special_tokens=False)["input_ids"]
        suffix_ids = self.tokenizer(suffix.strip(), add_special_tokens=False)["input_ids"]

        by_length: dict[int, list[tuple[str, list[int]]]] = {}
        scored: list[RankedCandidate] = []
        for label in candidates:
            ids = self._candidate_ids(label)
            if not ids or len(ids) > self.cfg.max_mask_count:
                scored.append(
                    RankedCandidate(label=label, score=float("-inf"), subtoken_count=len(ids), truncated=True)
                )
                continue
            by_length.setdefault(len(ids), []).append((label, ids))

        logprobs_by_k = self._logprobs_by_k(prefix_ids, suffix_ids, sorted(by_length))
        for k in sorted(by_length):
            logprobs = logprobs_by_k[k]
            for label, ids in by_length[k]:
                total = sum(float(logprobs[slot, token]) for slot, token in enumerate(ids))
                scored.append(
                    RankedCandidate(label=label, score=math.exp(total / k), subtoken_count=k)
                )
        scored.sort(key=lambda c: (-c.score, c.label))
        return scored

    def run_benchmark(self, prompts: PromptFile) -> list[Prediction]:
        """One ranked prediction per prompt task, truncated to top_n."""
        if prompts.mode != "cloze":
            raise ValueError(f"expected cloze prompts, got mode {prompts.mode!r}")
        records: list[Prediction] = []
        for task in prompts.tasks:
            candidates = prompts.candidates.get(task.predicate_id, [])
            if not candidates:
                log.warning("no candidates for %s/%s; skipping", task.predicate_id, task.subject_id)
                continue
            try:
                ranked = self.rank_candidates(task.prompt, list(candidates))
            except ValueError as exc:
                log.warning("skipping %s/%s: %s", task.predicate_id, task.subject_id, exc)
                continue
            for c in ranked:
                if c.truncated:
                    log.warning(
                        "candidate %r (%d subtokens) exceeds max_mask_count=%d",
                        c.label, c.subtoken_count, self.cfg.max_mask_count,
                    )
            top = tuple(c.label for c in ranked[: self.cfg.top_n])
            records.append(
                Prediction(
                    predicate_id=task.predicate_id,
                    subject_id=task.subject_id,
                    ranked_candidates=top,
                )
            )
        return records
