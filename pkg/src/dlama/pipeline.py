"""The five-stage curation pipeline.

Stages per (region, predicate): harvest region-filtered triples, rank by
the subject's largest Wikipedia article, keep the top slice, expand each
subject to its full object set, join multilingual labels (dropping what
cannot be labelled everywhere), then optionally widen object sets with
subclass ancestors and, for birth/death places, administrative-territory
chains.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .client import CacheTracker, HarvestClient
from .errors import DlamaError, PipelineError
from .queries import (
    DEFAULT_PAGE_SIZE,
    build_all_objects_query,
    build_harvest_query,
    build_labels_query,
    build_subclass_edges_query,
    build_territory_chain_query,
)
from .regions import PairConfig, PredicateSpec, Region
from .store import BenchmarkSet, FactTriple, make_provenance, read_triple_dump

log = logging.getLogger("dlama")

LABEL_CHUNK = 300
OBJECT_CHUNK = 400

# Predicates whose objects additionally get located-in territory chains.
TERRITORY_PREDICATES = ("P19", "P20")


def qid_from_uri(uri: str) -> str:
    return uri.rsplit("/", 1)[-1]


def qid_sort_key(qid: str) -> tuple[int, str]:
    tail = qid[1:]
    return (int(tail), qid) if tail.isdigit() else (1 << 62, qid)


def _sorted_ids(ids) -> tuple[str, ...]:
    return tuple(sorted(set(ids), key=qid_sort_key))


@dataclass(frozen=True)
class RawTriple:
    """Stage-1 output: subject with the region-filtered objects seen so far
    and the subject's article links."""

    subject_id: str
    object_ids: tuple[str, ...]
    sitelinks: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.object_ids:
            raise ValueError(f"raw triple {self.subject_id} has no objects")


@dataclass(frozen=True)
class SelectedTriple:
    """Stage-2 output: a raw triple with its rank evidence."""

    subject_id: str
    object_ids: tuple[str, ...]
    sitelinks: tuple[str, ...]
    rank_value: int
    has_article: bool


@dataclass(frozen=True)
class SubclassGraph:
    """Child-to-parent subclass edges over a predicate's object universe."""

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    cycle_nodes: frozenset[str] = frozenset()
    _parents: dict = field(default_factory=dict, hash=False, compare=False, repr=False)

    @classmethod
    def from_edges(cls, seed_nodes, edge_pairs) -> "SubclassGraph":
        edges = frozenset((c, p) for c, p in edge_pairs if c != p)
        nodes = frozenset(seed_nodes) | {n for e in edges for n in e}
        parents: dict[str, list[str]] = {}
        for child, parent in sorted(edges):
            parents.setdefault(child, []).append(parent)
        return cls(
            nodes=nodes,
            edges=edges,
            cycle_nodes=_cycle_nodes(parents),
            _parents=parents,
        )

    def ancestors(self, node: str) -> frozenset[str]:
        """Every node reachable upward from `node` (cycle-safe, node excluded)."""
        seen: set[str] = set()
        stack = list(self._parents.get(node, ()))
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(self._parents.get(current, ()))
        seen.discard(node)
        return frozenset(seen)


def _cycle_nodes(parents: dict[str, list[str]]) -> frozenset[str]:
    """Nodes lying on an upward cycle, found with an iterative DFS."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    in_cycle: set[str] = set()
    for start in parents:
        if color.get(start, WHITE) != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        path: list[str] = []
        while stack:
            node, idx = stack.pop()
            if idx == 0:
                color[node] = GRAY
                path.append(node)
            kids = parents.get(node, [])
            if idx < len(kids):
                stack.append((node, idx + 1))
                child = kids[idx]
                state = color.get(child, WHITE)
                if state == WHITE:
                    stack.append((child, 0))
                elif state == GRAY:
                    # Back edge: everything from `child` to the path tip cycles.
                    at = path.index(child)
                    in_cycle.update(path[at:])
            else:
                color[node] = BLACK
                path.pop()
    return frozenset(in_cycle)


# ------------------------------------------------------------------ stage 1


def harvest(
    spec: PredicateSpec,
    region: Region,
    client: HarvestClient,
    page_size: int = DEFAULT_PAGE_SIZE,
    tracker: CacheTracker | None = None,
) -> list[RawTriple]:
    """Fetch every region-filtered (subject, object, sitelink) row, page by
    page, and merge rows per subject."""
    subjects: dict[str, tuple[set[str], set[str]]] = {}
    page = 0
    while True:
        q = build_harvest_query(spec, region, page_size=page_size, page=page)
        rows = client.run_query(q, tracker=tracker)
        for row in rows:
            subject = qid_from_uri(row["subject"])
            objects, links = subjects.setdefault(subject, (set(), set()))
            objects.add(qid_from_uri(row["object"]))
            if row.get("sitelink"):
                links.add(row["sitelink"])
        if len(rows) < page_size:
            break
        page += 1
    return [
        RawTriple(
            subject_id=subject,
            object_ids=_sorted_ids(objects),
            sitelinks=tuple(sorted(links)),
        )
        for subject, (objects, links) in subjects.items()
    ]


# ------------------------------------------------------------------ stage 2


def rank_and_select(
    triples: list[RawTriple],
    meta: dict,
    sort_key: str,
    max_triples: int,
) -> list[SelectedTriple]:
    """Order triples by the largest linked article (size or revisions) and
    keep the top `max_triples`. Subjects without any article rank last;
    ties break on ascending subject id."""
    ranked = []
    for t in triples:
        found = [meta[url] for url in t.sitelinks if url in meta]
        if found:
            if sort_key == "edit_count":
                value = max(m.revision_count for m in found)
            else:
                value = max(m.size_bytes for m in found)
            ranked.append(SelectedTriple(t.subject_id, t.object_ids, t.sitelinks, value, True))
        else:
            ranked.append(SelectedTriple(t.subject_id, t.object_ids, t.sitelinks, 0, False))
    ranked.sort(key=lambda s: (not s.has_article, -s.rank_value, qid_sort_key(s.subject_id)))
    return ranked[:max_triples]


# ------------------------------------------------------------------ stage 3


def expand_objects(
    selected: list[SelectedTriple],
    spec: PredicateSpec,
    client: HarvestClient,
    chunk: int = OBJECT_CHUNK,
    tracker: CacheTracker | None = None,
) -> list[SelectedTriple]:
    """Replace each subject's object set with the predicate's full object
    set, so objects outside the region filter become valid too."""
    if not selected:
        return []
    subject_ids = sorted({s.subject_id for s in selected}, key=qid_sort_key)
    fetched: dict[str, set[str]] = {}
    for i in range(0, len(subject_ids), chunk):
        q = build_all_objects_query(subject_ids[i : i + chunk], spec.predicate_id)
        for row in client.run_query(q, tracker=tracker):
            fetched.setdefault(qid_from_uri(row["subject"]), set()).add(qid_from_uri(row["object"]))
    return [
        replace(s, object_ids=_sorted_ids(set(s.object_ids) | fetched.get(s.subject_id, set())))
        for s in selected
    ]


# ------------------------------------------------------------------ stage 4


def fetch_labels(
    entity_ids,
    languages,
    client: HarvestClient,
    chunk: int = LABEL_CHUNK,
    tracker: CacheTracker | None = None,
) -> dict[str, dict[str, str]]:
    """Entity labels for the requested languages, keyed entity -> lang."""
    ids = sorted(set(entity_ids), key=qid_sort_key)
    labels: dict[str, dict[str, str]] = {}
    for i in range(0, len(ids), chunk):
        q = build_labels_query(ids[i : i + chunk], list(languages))
        for row in client.run_query(q, tracker=tracker):
            entity = qid_from_uri(row["entity"])
            labels.setdefault(entity, {})[row["language"]] = row["label"]
    return labels


def _fully_labelled(entity: str, languages, label_map) -> bool:
    entry = label_map.get(entity, {})
    return all(lang in entry and entry[lang] for lang in languages)


def join_labels(
    triples: list[SelectedTriple],
    languages,
    client: HarvestClient,
    *,
    predicate_id: str,
    region_name: str,
    rank_source: str,
    chunk: int = LABEL_CHUNK,
    tracker: CacheTracker | None = None,
    label_map: dict[str, dict[str, str]] | None = None,
) -> tuple[list[FactTriple], dict[str, dict[str, str]]]:
    """Attach labels in every requested language.

    Unlabelled objects are dropped from a triple's object set; the triple
    itself is dropped when its subject is unlabelled or no labelled object
    remains, so surviving triples are identical across languages.
    """
    languages = tuple(languages)
    if label_map is None:
        wanted = {t.subject_id for t in triples}
        for t in triples:
            wanted.update(t.object_ids)
        label_map = fetch_labels(wanted, languages, client, chunk=chunk, tracker=tracker) if wanted else {}

    facts = []
    for t in triples:
        if not _fully_labelled(t.subject_id, languages, label_map):
            continue
        kept = [o for o in t.object_ids if _fully_labelled(o, languages, label_map)]
        if not kept:
            continue
        facts.append(
            FactTriple(
                subject_id=t.subject_id,
                subject_labels={lang: label_map[t.subject_id][lang] for lang in languages},
                object_ids=tuple(kept),
                object_labels={
                    lang: tuple(label_map[o][lang] for o in kept) for lang in languages
                },
                region_name=region_name,
                predicate_id=predicate_id,
                rank_value=t.rank_value,
                rank_source=rank_source,
            )
        )
    return facts, label_map


# ------------------------------------------------------------------ stage 5


def build_subclass_graph(
    object_ids,
    client: HarvestClient,
    chunk: int = OBJECT_CHUNK,
    tracker: CacheTracker | None = None,
) -> SubclassGraph:
    """Graph of subclass edges over the objects and their ancestors."""
    ids = sorted(set(object_ids), key=qid_sort_key)
    edges = []
    for i in range(0, len(ids), chunk):
        q = build_subclass_edges_query(ids[i : i + chunk])
        for row in client.run_query(q, tracker=tracker):
            edges.append((qid_from_uri(row["child"]), qid_from_uri(row["parent"])))
    graph = SubclassGraph.from_edges(ids, edges)
    if graph.cycle_nodes:
        log.warning("subclass graph contains cycles through %s", sorted(graph.cycle_nodes))
    return graph


def augment_objects(
    triple: FactTriple,
    graph: SubclassGraph,
    label_map: dict[str, dict[str, str]],
) -> FactTriple:
    """Widen the object set to its ancestor closure in `graph`.

    Ancestors missing a label in any of the triple's languages are
    skipped rather than dropping the triple. Idempotent.
    """
    languages = tuple(sorted(triple.subject_labels))
    closure = set(triple.object_ids)
    for obj in triple.object_ids:
        closure.update(graph.ancestors(obj))
    added = [
        o
        for o in sorted(closure - set(triple.object_ids), key=qid_sort_key)
        if _fully_labelled(o, languages, label_map)
    ]
    if not added:
        return triple
    object_ids = _sorted_ids(set(triple.object_ids) | set(added))
    return replace(
        triple,
        object_ids=object_ids,
        object_labels={
            lang: tuple(
                label_map[o][lang]
                if o in label_map and lang in label_map[o]
                else triple.object_labels[lang][triple.object_ids.index(o)]
                for o in object_ids
            )
            for lang in triple.object_labels
        },
    )


def expand_territories(
    triples: list[FactTriple],
    client: HarvestClient,
    chunk: int = OBJECT_CHUNK,
    tracker: CacheTracker | None = None,
    label_map: dict[str, dict[str, str]] | None = None,
) -> list[FactTriple]:
    """Widen place objects with their located-in territory chains.

    Applies to birth/death-place predicates only; a country-level object
    simply has no chain and stays unchanged.
    """
    if not triples:
        return []
    languages = tuple(sorted(triples[0].subject_labels))
    place_ids = sorted({o for t in triples for o in t.object_ids}, key=qid_sort_key)
    chains: dict[str, set[str]] = {}
    for i in range(0, len(place_ids), chunk):
        q = build_territory_chain_query(place_ids[i : i + chunk])
        for row in client.run_query(q, tracker=tracker):
            chains.setdefault(qid_from_uri(row["place"]), set()).add(qid_from_uri(row["ancestor"]))

    label_map = dict(label_map or {})
    ancestor_ids = {a for ancestors in chains.values() for a in ancestors}
    missing = [a for a in ancestor_ids if a not in label_map]
    if missing:
        label_map.update(fetch_labels(missing, languages, client, tracker=tracker))

    out = []
    for t in triples:
        widened = set(t.object_ids)
        for obj in t.object_ids:
            widened.update(chains.get(obj, ()))
        added = [
            a
            for a in sorted(widened - set(t.object_ids), key=qid_sort_key)
            if _fully_labelled(a, languages, label_map)
        ]
        if not added:
            out.append(t)
            continue
        object_ids = _sorted_ids(set(t.object_ids) | set(added))
        lookup = {o: i for i, o in enumerate(t.object_ids)}
        out.append(
            replace(
                t,
                object_ids=object_ids,
                object_labels={
                    lang: tuple(
                        t.object_labels[lang][lookup[o]] if o in lookup else label_map[o][lang]
                        for o in object_ids
                    )
                    for lang in t.object_labels
                },
            )
        )
    return out


# ------------------------------------------------------------------ full run


def run_predicate(
    pair_name: str,
    spec: PredicateSpec,
    region: Region,
    client: HarvestClient,
    augment: bool = True,
    page_size: int = DEFAULT_PAGE_SIZE,
) -> BenchmarkSet:
    """Run all stages for one (region, predicate) and build its benchmark."""
    tracker = CacheTracker()
    raws = harvest(spec, region, client, page_size=page_size, tracker=tracker)
    log.info("%s/%s/%s: harvested %d subjects", pair_name, region.name, spec.predicate_id, len(raws))
    links = sorted({url for t in raws for url in t.sitelinks})
    meta, link_errors = client.fetch_article_meta(
        links, include_revisions=spec.sort_key == "edit_count", tracker=tracker
    )
    for url, message in sorted(link_errors.items()):
        log.warning("%s: skipping article link %s (%s)", spec.predicate_id, url, message)
    selected = rank_and_select(raws, meta, spec.sort_key, spec.max_triples)
    selected = expand_objects(selected, spec, client, tracker=tracker)
    facts, label_map = join_labels(
        selected,
        spec.languages,
        client,
        predicate_id=spec.predicate_id,
        region_name=region.name,
        rank_source=spec.sort_key,
        tracker=tracker,
    )
    if augment and facts:
        graph = build_subclass_graph(
            {o for t in facts for o in t.object_ids}, client, tracker=tracker
        )
        missing = [n for n in sorted(graph.nodes, key=qid_sort_key) if n not in label_map]
        if missing:
            label_map.update(fetch_labels(missing, spec.languages, client, tracker=tracker))
        facts = [augment_objects(t, graph, label_map) for t in facts]
        if spec.predicate_id in TERRITORY_PREDICATES:
            facts = expand_territories(facts, client, tracker=tracker, label_map=label_map)
    log.info("%s/%s/%s: %d triples", pair_name, region.name, spec.predicate_id, len(facts))
    return BenchmarkSet(
        pair=pair_name,
        region=region.name,
        predicate_id=spec.predicate_id,
        augmented=augment,
        triples=facts,
        provenance=make_provenance(tracker.latest_fetch(), tracker.digest()),
    )


def run_pair(
    config: PairConfig,
    client: HarvestClient,
    augment: bool = True,
    predicate_ids=None,
    page_size: int = DEFAULT_PAGE_SIZE,
    allow_partial: bool = False,
    max_workers: int = 2,
) -> tuple[dict[tuple[str, str], BenchmarkSet], dict[tuple[str, str], str]]:
    """Run the pipeline for every (region, predicate) of the pair.

    Returns (benchmarks keyed by (region, predicate), failure messages).
    Raises PipelineError on failures unless allow_partial is set.
    """
    wanted = set(predicate_ids) if predicate_ids else None
    jobs = [
        (region, spec)
        for region in config.regions
        for spec in config.predicates
        if wanted is None or spec.predicate_id in wanted
    ]
    if wanted:
        known = {spec.predicate_id for spec in config.predicates}
        unknown = wanted - known
        if unknown:
            raise PipelineError(
                {("-", pid): "predicate not in pair configuration" for pid in sorted(unknown)}
            )

    results: dict[tuple[str, str], BenchmarkSet] = {}
    failures: dict[tuple[str, str], str] = {}

    def run_one(job):
        region, spec = job
        return (region.name, spec.predicate_id), run_predicate(
            config.name, spec, region, client, augment=augment, page_size=page_size
        )

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {pool.submit(run_one, job): job for job in jobs}
        for future, job in futures.items():
            region, spec = job
            try:
                key, bset = future.result()
                results[key] = bset
            except DlamaError as exc:
                failures[(region.name, spec.predicate_id)] = str(exc)

    if failures and not allow_partial:
        raise PipelineError(failures)
    return results, failures


# ------------------------------------------------------------------ overlap


def overlap_with_dump(benchmarks: list[BenchmarkSet], dump_path: str | Path) -> list[dict]:
    """Share of each benchmark's triples that appear in an external dump,
    matching on (subject, predicate, any object)."""
    index: dict[tuple[str, str], set[str]] = {}
    for subject, predicate, objects in read_triple_dump(dump_path):
        index.setdefault((subject, predicate), set()).update(objects)
    rows = []
    for bset in benchmarks:
        found = 0
        for t in bset.triples:
            dumped = index.get((t.subject_id, t.predicate_id))
            if dumped and any(o in dumped for o in t.object_ids):
                found += 1
        n = len(bset.triples)
        rows.append(
            {
                "pair": bset.pair,
                "region": bset.region,
                "predicate_id": bset.predicate_id,
                "n": n,
                "n_found": found,
                "pct": (100.0 * found / n) if n else 0.0,
            }
        )
    return rows
