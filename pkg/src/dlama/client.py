"""HTTP access to the Wikidata SPARQL endpoint and per-site Wikipedia APIs.

Every response is cached on disk, content-addressed by a hash of the
request, so a warm cache makes whole pipeline runs byte-reproducible and
fully offline. A per-host gate enforces the minimum spacing between
outbound requests.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import quote, unquote, urlsplit

import requests

from .errors import ConfigError, OfflineCacheMiss, SparqlParseError, TransportError
from .queries import SparqlQuery

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})
BACKOFF_BASE_SECONDS = 0.5


@dataclass
class EndpointConfig:
    sparql_url: str = "https://query.wikidata.org/sparql"
    wikipedia_api_pattern: str = "https://{site}.wikipedia.org/w/api.php"
    wikipedia_rest_pattern: str = "https://{site}.wikipedia.org/w/rest.php/v1"
    user_agent: str = "dlama/0.1 (benchmark curation; contact: maintainer@example.org)"
    max_retries: int = 4
    min_request_interval: float = 0.5
    cache_dir: Path = Path(".dlama_cache")
    offline: bool = False
    timeout: float = 60.0
    meta_batch_size: int = 50
    max_parallel_meta: int = 4

    def __post_init__(self):
        if not self.user_agent:
            raise ConfigError("user_agent must be non-empty (endpoint policy)")
        if self.min_request_interval < 0:
            raise ConfigError("min_request_interval must be >= 0")
        self.cache_dir = Path(self.cache_dir)

    @classmethod
    def from_env(cls, **overrides) -> "EndpointConfig":
        """Build a config honouring the DLAMA_* environment variables."""
        kwargs = {}
        if os.environ.get("DLAMA_SPARQL_URL"):
            kwargs["sparql_url"] = os.environ["DLAMA_SPARQL_URL"]
        if os.environ.get("DLAMA_CACHE_DIR"):
            kwargs["cache_dir"] = Path(os.environ["DLAMA_CACHE_DIR"])
        if os.environ.get("DLAMA_USER_AGENT"):
            kwargs["user_agent"] = os.environ["DLAMA_USER_AGENT"]
        if os.environ.get("DLAMA_OFFLINE", "") not in ("", "0"):
            kwargs["offline"] = True
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True)
class ArticleMeta:
    site: str
    title: str
    size_bytes: int
    revision_count: int = 0

    def __post_init__(self):
        if self.size_bytes < 0:
            raise ValueError("size_bytes must be >= 0")
        if self.revision_count < 0:
            raise ValueError("revision_count must be >= 0")


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class ResponseCache:
    """One file per request: raw body bytes plus a small JSON sidecar."""

    def __init__(self, root: Path):
        self.root = Path(root)

    @staticmethod
    def key(kind: str, material: str) -> str:
        return hashlib.sha256(f"{kind}\n{material}".encode("utf-8")).hexdigest()

    def _paths(self, key: str) -> tuple[Path, Path]:
        sub = self.root / key[:2]
        return sub / f"{key}.bin", sub / f"{key}.json"

    def load(self, key: str) -> tuple[bytes, dict] | None:
        body_path, meta_path = self._paths(key)
        if not body_path.exists() or not meta_path.exists():
            return None
        body = body_path.read_bytes()
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        return body, meta

    def store(self, key: str, body: bytes, meta: dict) -> dict:
        body_path, meta_path = self._paths(key)
        body_path.parent.mkdir(parents=True, exist_ok=True)
        # Unique tmp names: concurrent jobs may store the same key.
        nonce = f"{os.getpid()}-{threading.get_ident()}"
        tmp = body_path.with_name(f"{body_path.name}.{nonce}.tmp")
        tmp.write_bytes(body)
        os.replace(tmp, body_path)
        tmp = meta_path.with_name(f"{meta_path.name}.{nonce}.tmp")
        tmp.write_text(json.dumps(meta, ensure_ascii=False, sort_keys=True), encoding="utf-8")
        os.replace(tmp, meta_path)
        return meta


class CacheTracker:
    """Collects the cache entries one pipeline job consumed.

    The digest and the newest fetch time feed the provenance block of the
    benchmark files, so warm-cache reruns serialize identically.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: dict[str, tuple[str, str]] = {}

    def add(self, key: str, fetched_at: str, body_sha: str) -> None:
        with self._lock:
            self._entries[key] = (fetched_at, body_sha)

    def digest(self) -> str:
        with self._lock:
            lines = sorted(f"{k}:{sha}" for k, (_, sha) in self._entries.items())
        return hashlib.sha256("\n".join(lines).encode("ascii")).hexdigest()

    def latest_fetch(self) -> str:
        with self._lock:
            if not self._entries:
                return "1970-01-01T00:00:00Z"
            return max(at for at, _ in self._entries.values())


class RequestsTransport:
    """Default transport; swap it out in tests or replay tooling."""

    def __init__(self):
        self._session = requests.Session()

    def get(self, url: str, params: dict | None, headers: dict, timeout: float):
        return self._session.get(url, params=params, headers=headers, timeout=timeout)


class _HostGate:
    """Serializes outbound requests per host with a minimum interval."""

    def __init__(self, interval: float, clock, sleep):
        self._interval = interval
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._last: dict[str, float] = {}

    def wait(self, host: str) -> None:
        if self._interval <= 0:
            return
        with self._lock:
            now = self._clock()
            ready_at = self._last.get(host, now - self._interval) + self._interval
            if ready_at > now:
                self._sleep(ready_at - now)
                now = ready_at
            self._last[host] = now


class HarvestClient:
    """Shared, thread-safe client for SPARQL and Wikipedia metadata."""

    def __init__(self, cfg: EndpointConfig, transport=None, clock=time.monotonic, sleep=time.sleep):
        self.cfg = cfg
        self.cache = ResponseCache(cfg.cache_dir)
        self._transport = transport or RequestsTransport()
        self._gate = _HostGate(cfg.min_request_interval, clock, sleep)
        self._sleep = sleep

    # ------------------------------------------------------------- fetching

    def _fetch(
        self,
        url: str,
        params: dict | None,
        kind: str,
        material: str,
        tracker: CacheTracker | None,
        accept: str,
    ) -> bytes:
        key = ResponseCache.key(kind, material)
        cached = self.cache.load(key)
        if cached is not None:
            body, meta = cached
            if tracker is not None:
                tracker.add(key, meta.get("fetched_at", ""), meta.get("body_sha", ""))
            return body
        if self.cfg.offline:
            raise OfflineCacheMiss(f"offline mode: no cached response for {kind} request")

        headers = {"User-Agent": self.cfg.user_agent, "Accept": accept}
        host = urlsplit(url).netloc
        last_status: int | None = None
        last_error = "request failed"
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                self._sleep(BACKOFF_BASE_SECONDS * (2 ** (attempt - 1)))
            self._gate.wait(host)
            try:
                resp = self._transport.get(url, params, headers, self.cfg.timeout)
            except requests.Timeout:
                last_status, last_error = None, "timeout"
                continue
            except requests.RequestException as exc:
                last_status, last_error = None, str(exc)
                continue
            if resp.status_code == 200:
                body = resp.content
                meta = {
                    "kind": kind,
                    "url": url,
                    "material": material,
                    "status": 200,
                    "fetched_at": _utcnow(),
                    "body_sha": hashlib.sha256(body).hexdigest(),
                }
                self.cache.store(key, body, meta)
                if tracker is not None:
                    tracker.add(key, meta["fetched_at"], meta["body_sha"])
                return body
            last_status = resp.status_code
            last_error = f"HTTP {resp.status_code}"
            if resp.status_code not in RETRYABLE_STATUSES:
                break
        raise TransportError(
            f"{kind} request failed after {self.cfg.max_retries + 1} attempts: {last_error}",
            status=last_status,
        )

    # ---------------------------------------------------------------- SPARQL

    def run_query(self, q: SparqlQuery, tracker: CacheTracker | None = None) -> list[dict[str, str]]:
        """Execute a query and return the bound rows as {var: value} dicts."""
        body = self._fetch(
            self.cfg.sparql_url,
            {"query": q.text, "format": "json"},
            kind=q.kind,
            material=f"{self.cfg.sparql_url}\n{q.text}",
            tracker=tracker,
            accept="application/sparql-results+json",
        )
        try:
            doc = json.loads(body)
            bindings = doc["results"]["bindings"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise SparqlParseError(f"malformed SPARQL result document: {exc}") from exc
        rows = []
        for binding in bindings:
            try:
                rows.append({var: cell["value"] for var, cell in binding.items()})
            except (TypeError, KeyError) as exc:
                raise SparqlParseError(f"malformed binding in result: {exc}") from exc
        return rows

    # ------------------------------------------------------- article metadata

    @staticmethod
    def parse_article_url(url: str) -> tuple[str, str]:
        """Split a Wikipedia article URL into (site code, title)."""
        parts = urlsplit(url)
        host = parts.netloc
        if not host.endswith(".wikipedia.org") or parts.path.count("/") < 2:
            raise ValueError(f"not a Wikipedia article URL: {url}")
        site = host.split(".")[0]
        prefix, _, raw_title = parts.path.partition("/wiki/")
        if prefix or not raw_title:
            raise ValueError(f"not a Wikipedia article URL: {url}")
        title = unquote(raw_title).replace("_", " ")
        if not title:
            raise ValueError(f"empty article title in URL: {url}")
        return site, title

    def _fetch_info_batch(
        self, site: str, titles: list[str], tracker: CacheTracker | None
    ) -> dict[str, int]:
        url = self.cfg.wikipedia_api_pattern.format(site=site)
        joined = "|".join(titles)
        params = {
            "action": "query",
            "prop": "info",
            "titles": joined,
            "format": "json",
            "formatversion": "2",
        }
        body = self._fetch(
            url,
            params,
            kind="article_links",
            material=f"info\n{url}\n{joined}",
            tracker=tracker,
            accept="application/json",
        )
        try:
            doc = json.loads(body)
            pages = doc["query"]["pages"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise SparqlParseError(f"malformed Wikipedia API response: {exc}") from exc
        normalized = {
            entry["to"]: entry["from"]
            for entry in doc.get("query", {}).get("normalized", [])
        }
        sizes: dict[str, int] = {}
        for page in pages:
            if page.get("missing"):
                continue
            title = page.get("title", "")
            requested = normalized.get(title, title)
            sizes[requested] = int(page.get("length", 0))
        return sizes

    def _fetch_revision_count(self, site: str, title: str, tracker: CacheTracker | None) -> int:
        base = self.cfg.wikipedia_rest_pattern.format(site=site)
        url = f"{base}/page/{quote(title.replace(' ', '_'), safe='')}/history/counts/edits"
        body = self._fetch(
            url,
            None,
            kind="article_links",
            material=f"revisions\n{url}",
            tracker=tracker,
            accept="application/json",
        )
        try:
            return int(json.loads(body)["count"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise SparqlParseError(f"malformed revision-count response: {exc}") from exc

    # -------------------------------------------------------- entity lookup

    def fetch_entity_countries(
        self, entity_id: str, tracker: CacheTracker | None = None
    ) -> frozenset[str] | None:
        """Countries an entity is a citizen of (P27) or located in (P17),
        from the entity-data endpoint; None when the entity cannot be
        resolved. Used by the bias audit."""
        url = f"https://www.wikidata.org/wiki/Special:EntityData/{entity_id}.json"
        try:
            body = self._fetch(
                url,
                None,
                kind="article_links",
                material=f"entity\n{url}",
                tracker=tracker,
                accept="application/json",
            )
        except TransportError:
            return None
        try:
            claims = json.loads(body)["entities"][entity_id].get("claims", {})
        except (json.JSONDecodeError, KeyError, TypeError):
            return None
        countries = set()
        for prop in ("P27", "P17"):
            for claim in claims.get(prop, []):
                value = claim.get("mainsnak", {}).get("datavalue", {}).get("value", {})
                if isinstance(value, dict) and "id" in value:
                    countries.add(value["id"])
        return frozenset(countries)

    def fetch_article_meta(
        self,
        links: list[str],
        include_revisions: bool = False,
        tracker: CacheTracker | None = None,
    ) -> tuple[dict[str, ArticleMeta], dict[str, str]]:
        """Resolve article URLs to (size, revision count) metadata.

        Returns (metadata by URL, error message by URL). Articles that do
        not exist are absent from both maps: no article is not size 0.
        """
        errors: dict[str, str] = {}
        by_site: dict[str, dict[str, None]] = {}
        parsed: dict[str, tuple[str, str]] = {}
        for url in links:
            if url in parsed or url in errors:
                continue
            try:
                site, title = self.parse_article_url(url)
            except ValueError as exc:
                errors[url] = str(exc)
                continue
            parsed[url] = (site, title)
            by_site.setdefault(site, {})[title] = None

        site_sizes: dict[str, dict[str, int]] = {}

        def fetch_site(site: str) -> tuple[str, dict[str, int]]:
            titles = sorted(by_site[site])
            sizes: dict[str, int] = {}
            for i in range(0, len(titles), self.cfg.meta_batch_size):
                sizes.update(self._fetch_info_batch(site, titles[i : i + self.cfg.meta_batch_size], tracker))
            return site, sizes

        sites = sorted(by_site)
        if len(sites) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.max_parallel_meta) as pool:
                for site, sizes in pool.map(fetch_site, sites):
                    site_sizes[site] = sizes
        else:
            for site in sites:
                site_sizes[site] = fetch_site(site)[1]

        metas: dict[str, ArticleMeta] = {}
        for url, (site, title) in parsed.items():
            size = site_sizes.get(site, {}).get(title)
            if size is None:
                continue
            revisions = (
                self._fetch_revision_count(site, title, tracker) if include_revisions else 0
            )
            metas[url] = ArticleMeta(site=site, title=title, size_bytes=size, revision_count=revisions)
        return metas, errors
