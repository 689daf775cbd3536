"""Scorer acceptance criteria.

A9: masked-LM scoring correctness against the raw model outputs.
A10: benchmark files through prompts -> scorer -> evaluation, exercising
only the curation toolkit's public CLI and file formats.
"""

import json
import math
import subprocess
import sys
import time

import pytest
import torch

from dlama_scorer.cli import main as scorer_main
from dlama_scorer.formats import MASK_MARKER, read_predictions

PROMPT = f"Egypt is located in {MASK_MARKER} ."
CANDIDATES = ["Africa", "Asia", "Europe", "North America", "Insular Oceania"]


class Criterion:
    def __init__(self, name, budget_seconds):
        self.name = name
        self.budget = budget_seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            assert elapsed < self.budget, f"{self.name} took {elapsed:.2f}s"
            print(f"{self.name} PASS ({elapsed:.2f}s < {self.budget}s)")
        else:
            print(f"{self.name} FAIL ({elapsed:.2f}s): {exc}")
        return False


def dlama(*args):
    return subprocess.run(
        [sys.executable, "-m", "dlama.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )


def test_a9_scorer_correctness(scorer, tmp_path):
    with Criterion("A9 scorer correctness", 60.0):
        # Single-subtoken candidates score exactly the raw mask probability.
        ranked = {c.label: c for c in scorer.rank_candidates(PROMPT, CANDIDATES)}
        tok = scorer.tokenizer
        prefix, suffix = PROMPT.split(MASK_MARKER)
        prefix_ids = tok(prefix.strip(), add_special_tokens=False)["input_ids"]
        suffix_ids = tok(suffix.strip(), add_special_tokens=False)["input_ids"]

        def dumped_logprobs(k):
            ids = (
                [tok.cls_token_id]
                + prefix_ids
                + [tok.mask_token_id] * k
                + suffix_ids
                + [tok.sep_token_id]
            )
            with torch.no_grad():
                logits = scorer.model(torch.tensor([ids])).logits[0]
            rows = range(1 + len(prefix_ids), 1 + len(prefix_ids) + k)
            return torch.log_softmax(logits[list(rows)].double(), dim=-1)

        single_slot = dumped_logprobs(1)
        for label in ("Africa", "Asia", "Europe"):
            (token_id,) = tok(label, add_special_tokens=False)["input_ids"]
            raw_probability = math.exp(float(single_slot[0, token_id]))
            assert abs(ranked[label].score - raw_probability) < 1e-6

        # Full ranking equals the log-sum oracle over dumped logits.
        oracle = []
        for label in CANDIDATES:
            ids = tok(label, add_special_tokens=False)["input_ids"]
            logprobs = dumped_logprobs(len(ids))
            mean = sum(float(logprobs[i, t]) for i, t in enumerate(ids)) / len(ids)
            oracle.append((label, mean))
        oracle.sort(key=lambda pair: (-pair[1], pair[0]))
        assert [c.label for c in scorer.rank_candidates(PROMPT, CANDIDATES)] == [
            label for label, _ in oracle
        ]

        # Two runs produce byte-identical prediction files.
        prompts_path = tmp_path / "prompts.jsonl"
        prompts_path.write_text(
            json.dumps(
                {
                    "dlama_schema": 1,
                    "kind": "prompts",
                    "pair": "arab_west",
                    "language": "en",
                    "mode": "cloze",
                    "candidates": {"P30": CANDIDATES},
                }
            )
            + "\n"
            + json.dumps({"predicate_id": "P30", "subject_id": "Q79", "prompt": PROMPT})
            + "\n",
            encoding="utf-8",
        )
        outputs = []
        for name in ("one.jsonl", "two.jsonl"):
            out = tmp_path / name
            code = scorer_main(
                [
                    "rank",
                    "--prompts", str(prompts_path),
                    "--model", str(scorer.cfg.model_name),
                    "--out", str(out),
                ]
            )
            assert code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]


def test_a10_end_to_end_tiny_run(tiny_model_dir, primary_data_dir, tmp_path):
    with Criterion("A10 end-to-end tiny run (P30 Arab-West)", 120.0):
        gold = [
            primary_data_dir / "benchmarks" / "arab_west__arab__P30.jsonl",
            primary_data_dir / "benchmarks" / "arab_west__west__P30.jsonl",
        ]
        prompts_path = tmp_path / "prompts.jsonl"
        result = dlama(
            "prompts",
            "--benchmark", gold[0],
            "--benchmark", gold[1],
            "--language", "ar",
            "--out", prompts_path,
        )
        assert result.returncode == 0, result.stderr

        predictions_path = tmp_path / "predictions.jsonl"
        code = scorer_main(
            [
                "rank",
                "--prompts", str(prompts_path),
                "--model", str(tiny_model_dir),
                "--model-id", "tiny-mlm",
                "--out", str(predictions_path),
            ]
        )
        assert code == 0
        header, records = read_predictions(predictions_path)
        assert header["n_records"] == 41  # 22 Arab + 19 Western triples

        report_path = tmp_path / "report.jsonl"
        result = dlama(
            "eval",
            "--gold", gold[0],
            "--gold", gold[1],
            "--pred", predictions_path,
            "--report", report_path,
        )
        assert result.returncode == 0, result.stderr
        assert "P@1" in result.stdout

        # The curation toolkit itself accepts the report: schema-valid.
        result = dlama("compare", "--raw", report_path, "--aug", report_path)
        assert result.returncode == 0, result.stderr

        header_line = json.loads(report_path.read_text(encoding="utf-8").splitlines()[0])
        assert header_line["kind"] == "eval_report"
        assert header_line["n_triples"] == 41
        assert 0.0 <= header_line["p_at_1"] <= 100.0  # exact value is model-dependent


def test_a10_qa_route_replays_recorded_responses(tiny_model_dir, primary_data_dir, tmp_path):
    """QA counterpart: question prompts through a recorded chat service."""
    import httpx

    from dlama_scorer.formats import read_prompts
    from dlama_scorer.qa import ChatClient, ChatServiceConfig, run_qa_probe

    result = dlama(
        "prompts",
        "--benchmark", primary_data_dir / "benchmarks" / "arab_west__arab__P36.jsonl",
        "--language", "en",
        "--qa",
        "--out", tmp_path / "questions.jsonl",
    )
    assert result.returncode == 0, result.stderr
    prompts = read_prompts(tmp_path / "questions.jsonl")
    assert len(prompts.tasks) == 22

    def handler(request):
        question = json.loads(request.content)["messages"][1]["content"]
        return httpx.Response(
            200, json={"choices": [{"message": {"content": f"Echo: {question[:20]}"}}]}
        )

    cfg = ChatServiceConfig(
        base_url="https://chat.invalid/v1", model="echo", cache_dir=tmp_path / "cache"
    )
    recorded = run_qa_probe(prompts, ChatClient(cfg, transport=httpx.MockTransport(handler)))

    offline_cfg = ChatServiceConfig(
        base_url="https://chat.invalid/v1",
        model="echo",
        cache_dir=tmp_path / "cache",
        offline=True,
    )
    replayed = run_qa_probe(prompts, ChatClient(offline_cfg))
    assert replayed == recorded
    assert all(r.free_text for r in replayed)
