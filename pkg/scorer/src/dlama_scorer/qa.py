"""Question probing against an OpenAI-style chat-completions service.

Responses are cached on disk keyed by (model, system prompt, question),
so reruns replay without touching the service and a warm cache works
fully offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from .formats import Prediction, PromptFile

log = logging.getLogger("dlama_scorer")

ENTITY_ONLY_INSTRUCTION = (
    "You are a factual question answering assistant. "
    "Reply with only the name of the entity that answers the question, "
    "with no extra words."
)

RETRYABLE = frozenset({429, 500, 502, 503, 504})


@dataclass
class ChatServiceConfig:
    base_url: str
    model: str
    cache_dir: Path
    api_key_env: str = "DLAMA_CHAT_API_KEY"
    max_retries: int = 3
    timeout: float = 60.0
    offline: bool = False

    def __post_init__(self):
        self.cache_dir = Path(self.cache_dir)


class ChatClient:
    def __init__(self, cfg: ChatServiceConfig, transport: httpx.BaseTransport | None = None):
        self.cfg = cfg
        self._client = httpx.Client(transport=transport, timeout=cfg.timeout)

    def _cache_path(self, question: str) -> Path:
        key = hashlib.sha256(
            f"{self.cfg.model}\n{ENTITY_ONLY_INSTRUCTION}\n{question}".encode("utf-8")
        ).hexdigest()
        return self.cfg.cache_dir / key[:2] / f"{key}.json"

    def ask(self, question: str) -> str:
        """Return the model's response text, from cache when available."""
        path = self._cache_path(question)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))["response"]
        if self.cfg.offline:
            raise RuntimeError(f"offline mode: no cached response for question {question!r}")

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.cfg.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.cfg.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": ENTITY_ONLY_INSTRUCTION},
                {"role": "user", "content": question},
            ],
        }
        last_error = "request failed"
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                time.sleep(0.5 * 2 ** (attempt - 1))
            try:
                response = self._client.post(
                    f"{self.cfg.base_url.rstrip('/')}/chat/completions",
                    json=payload,
                    headers=headers,
                )
            except httpx.HTTPError as exc:
                last_error = str(exc)
                continue
            if response.status_code == 200:
                try:
                    text = response.json()["choices"][0]["message"]["content"]
                except (KeyError, IndexError, ValueError) as exc:
                    raise RuntimeError(f"malformed chat response: {exc}") from exc
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(
                    json.dumps(
                        {"model": self.cfg.model, "question": question, "response": text},
                        ensure_ascii=False,
                    ),
                    encoding="utf-8",
                )
                return text
            last_error = f"HTTP {response.status_code}"
            if response.status_code not in RETRYABLE:
                break
        raise RuntimeError(f"chat request failed: {last_error}")


def run_qa_probe(prompts: PromptFile, client: ChatClient) -> list[Prediction]:
    """One free-text prediction per question; per-task failures are recorded
    as empty responses and the run continues."""
    if prompts.mode != "qa":
        raise ValueError(f"expected qa prompts, got mode {prompts.mode!r}")
    records = []
    for task in prompts.tasks:
        try:
            text = client.ask(task.prompt)
        except RuntimeError as exc:
            log.warning("qa probe failed for %s/%s: %s", task.predicate_id, task.subject_id, exc)
            text = ""
        records.append(
            Prediction(predicate_id=task.predicate_id, subject_id=task.subject_id, free_text=text)
        )
    return records
