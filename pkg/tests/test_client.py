import json

import pytest

from dlama.client import ArticleMeta, EndpointConfig, HarvestClient, ResponseCache
from dlama.errors import OfflineCacheMiss, SparqlParseError, TransportError
from dlama.queries import build_labels_query
from synthetic_wikidata import FakeFacts

QUERY = build_labels_query(["Q79"], ["en"])


class ScriptedTransport:
    """Returns queued (status, payload) responses; raises when exhausted."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0

    def get(self, url, params, headers, timeout):
        self.calls += 1
        status, payload = self.responses.pop(0)

        class R:
            status_code = status
            content = payload if isinstance(payload, bytes) else json.dumps(payload).encode()

        return R()


def sparql_payload(rows=()):
    return {"results": {"bindings": list(rows)}}


def make_client(tmp_path, transport, **cfg):
    cfg.setdefault("cache_dir", tmp_path / "cache")
    cfg.setdefault("min_request_interval", 0.0)
    sleeps = []
    client = HarvestClient(
        EndpointConfig(**cfg), transport=transport, sleep=sleeps.append
    )
    return client, sleeps


def test_cache_hit_bypasses_network(tmp_path):
    transport = ScriptedTransport([(200, sparql_payload())])
    client, _ = make_client(tmp_path, transport)
    assert client.run_query(QUERY) == []
    assert client.run_query(QUERY) == []
    assert transport.calls == 1


def test_retry_after_429_then_success(tmp_path):
    transport = ScriptedTransport([(429, {}), (429, {}), (200, sparql_payload())])
    client, sleeps = make_client(tmp_path, transport)
    assert client.run_query(QUERY) == []
    assert transport.calls == 3
    # Exponential backoff between attempts: 0.5, then 1.0.
    assert sleeps == [0.5, 1.0]


def test_persistent_500_raises_transport_error(tmp_path):
    transport = ScriptedTransport([(500, {})] * 10)
    client, _ = make_client(tmp_path, transport, max_retries=3)
    with pytest.raises(TransportError) as err:
        client.run_query(QUERY)
    assert err.value.status == 500
    assert transport.calls == 4  # initial attempt + 3 retries


def test_non_retryable_status_fails_fast(tmp_path):
    transport = ScriptedTransport([(403, {})])
    client, _ = make_client(tmp_path, transport)
    with pytest.raises(TransportError):
        client.run_query(QUERY)
    assert transport.calls == 1


def test_malformed_result_document_raises_parse_error(tmp_path):
    transport = ScriptedTransport([(200, b"this is not json")])
    client, _ = make_client(tmp_path, transport)
    with pytest.raises(SparqlParseError):
        client.run_query(QUERY)


def test_offline_mode_fails_on_cold_cache_and_replays_warm(tmp_path):
    transport = ScriptedTransport([(200, sparql_payload())])
    warm, _ = make_client(tmp_path, transport)
    warm.run_query(QUERY)

    offline = HarvestClient(
        EndpointConfig(cache_dir=tmp_path / "cache", offline=True, min_request_interval=0.0)
    )
    assert offline.run_query(QUERY) == []
    with pytest.raises(OfflineCacheMiss):
        offline.run_query(build_labels_query(["Q85"], ["en"]))


def test_request_spacing_respects_min_interval(tmp_path):
    transport = ScriptedTransport(
        [(200, sparql_payload()), (200, sparql_payload({"entity": {"value": "x"}} for _ in ()))]
    )
    now = [100.0]
    sleeps = []

    def clock():
        return now[0]

    def sleep(duration):
        sleeps.append(duration)
        now[0] += duration

    client = HarvestClient(
        EndpointConfig(cache_dir=tmp_path / "cache", min_request_interval=2.0),
        transport=transport,
        clock=clock,
        sleep=sleep,
    )
    client.run_query(QUERY)
    client.run_query(build_labels_query(["Q85"], ["en"]))
    assert sleeps == [2.0]


def test_user_agent_required():
    from dlama.errors import ConfigError

    with pytest.raises(ConfigError):
        EndpointConfig(user_agent="")
    with pytest.raises(ConfigError):
        EndpointConfig(min_request_interval=-1.0)


def test_from_env_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("DLAMA_SPARQL_URL", "https://example.org/sparql")
    monkeypatch.setenv("DLAMA_CACHE_DIR", str(tmp_path / "envcache"))
    monkeypatch.setenv("DLAMA_OFFLINE", "1")
    cfg = EndpointConfig.from_env()
    assert cfg.sparql_url == "https://example.org/sparql"
    assert cfg.cache_dir == tmp_path / "envcache"
    assert cfg.offline


def test_parse_article_url_roundtrip():
    site, title = HarvestClient.parse_article_url(
        "https://ar.wikipedia.org/wiki/%D9%85%D8%B5%D8%B1"
    )
    assert (site, title) == ("ar", "مصر")
    site, title = HarvestClient.parse_article_url("https://en.wikipedia.org/wiki/State_of_Palestine")
    assert (site, title) == ("en", "State of Palestine")
    with pytest.raises(ValueError):
        HarvestClient.parse_article_url("https://example.org/wiki/Nope")
    with pytest.raises(ValueError):
        HarvestClient.parse_article_url("https://en.wikipedia.org/w/index.php?curid=5")


def article_facts():
    facts = FakeFacts()
    facts.add_article("QX1", "en", "Cairo", 54321, revisions=77)
    facts.add_article("QX2", "en", "Baghdad", 12345)
    return facts


def test_fetch_article_meta_returns_recorded_sizes(tmp_path, fake_client_factory):
    client, _ = fake_client_factory(article_facts())
    urls = [
        "https://en.wikipedia.org/wiki/Cairo",
        "https://en.wikipedia.org/wiki/Baghdad",
    ]
    metas, errors = client.fetch_article_meta(urls)
    assert errors == {}
    assert metas[urls[0]] == ArticleMeta(site="en", title="Cairo", size_bytes=54321)
    assert metas[urls[1]].size_bytes == 12345


def test_fetch_article_meta_missing_article_is_absent(fake_client_factory):
    client, _ = fake_client_factory(article_facts())
    url = "https://en.wikipedia.org/wiki/Deleted_Page"
    metas, errors = client.fetch_article_meta([url])
    assert url not in metas
    assert url not in errors


def test_fetch_article_meta_duplicates_fetch_once(fake_client_factory):
    client, transport = fake_client_factory(article_facts())
    url = "https://en.wikipedia.org/wiki/Cairo"
    metas, _ = client.fetch_article_meta([url, url, url])
    assert transport.calls == 1
    assert metas[url].size_bytes == 54321


def test_fetch_article_meta_unparsable_url_reports_error(fake_client_factory):
    client, _ = fake_client_factory(article_facts())
    metas, errors = client.fetch_article_meta(["https://example.org/other"])
    assert metas == {}
    assert "not a Wikipedia article URL" in errors["https://example.org/other"]


def test_fetch_article_meta_revision_counts(fake_client_factory):
    client, _ = fake_client_factory(article_facts())
    url = "https://en.wikipedia.org/wiki/Cairo"
    metas, _ = client.fetch_article_meta([url], include_revisions=True)
    assert metas[url].revision_count == 77


def test_cache_key_is_stable():
    key1 = ResponseCache.key("labels", "material")
    key2 = ResponseCache.key("labels", "material")
    key3 = ResponseCache.key("harvest", "material")
    assert key1 == key2 != key3


def test_warm_meta_fetch_is_reproducible(tmp_path, fake_client_factory):
    client, transport = fake_client_factory(article_facts())
    url = "https://en.wikipedia.org/wiki/Cairo"
    first, _ = client.fetch_article_meta([url])
    calls = transport.calls
    second, _ = client.fetch_article_meta([url])
    assert transport.calls == calls
    assert first == second
