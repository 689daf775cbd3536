"""SPARQL text generation for the six query kinds the harvester needs.

All builders are pure: identical inputs yield byte-identical text, which
lets golden files pin the emitted queries and lets the response cache key
on the text alone.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import QueryBuildError
from .regions import PredicateSpec, Region, is_pid, is_qid

QUERY_KINDS = (
    "harvest",
    "all_objects",
    "labels",
    "subclass_edges",
    "territory_chain",
    "article_links",
)

MAX_PAGE_SIZE = 10_000
DEFAULT_PAGE_SIZE = 2000

# Wikidata class behind each entity label, whether membership is checked
# through the subclass closure, and which property ties an instance of the
# class to a country (None: the instances *are* countries).
ENTITY_CLASSES: dict[str, tuple[str, bool, str | None]] = {
    "City": ("Q515", True, "P17"),
    "Continent": ("Q5107", True, "P17"),
    "Country": ("Q6256", True, None),
    "Genre": ("Q188451", True, "P17"),
    "Instrument": ("Q34379", True, "P17"),
    "Language": ("Q34770", True, "P17"),
    "Occupation": ("Q12737077", True, "P17"),
    "Original Network": ("Q1254874", True, "P17"),
    "Person": ("Q5", False, "P17"),
    "Piece of Work": ("Q386724", True, "P495"),
    "Place": ("Q2221906", True, "P17"),
    "Record Label": ("Q18127", True, "P17"),
}

_PREFIXES = (
    "PREFIX wd: <http://www.wikidata.org/entity/>\n"
    "PREFIX wdt: <http://www.wikidata.org/prop/direct/>\n"
    "PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>\n"
    "PREFIX schema: <http://schema.org/>\n"
)


@dataclass(frozen=True)
class SparqlQuery:
    text: str
    kind: str
    page_size: int = MAX_PAGE_SIZE
    offset: int = 0

    def __post_init__(self):
        if self.kind not in QUERY_KINDS:
            raise QueryBuildError(f"unknown query kind {self.kind!r}")
        if not (0 < self.page_size <= MAX_PAGE_SIZE):
            raise QueryBuildError(f"page_size {self.page_size} out of range")
        if self.offset < 0:
            raise QueryBuildError("offset must be non-negative")
        problems = check_grammar(self.text)
        if problems:
            raise QueryBuildError(f"generated query fails grammar check: {'; '.join(problems)}")


def check_grammar(text: str) -> list[str]:
    """Minimal sanity check: SELECT/WHERE present, braces balanced.

    Braces inside quoted literals are ignored.
    """
    problems = []
    if "SELECT" not in text:
        problems.append("missing SELECT")
    if "WHERE" not in text:
        problems.append("missing WHERE")
    depth = 0
    quote: str | None = None
    for ch in text:
        if quote:
            if ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                problems.append("unbalanced braces")
                return problems
    if depth != 0:
        problems.append("unbalanced braces")
    if quote:
        problems.append("unterminated string literal")
    return problems


def _dedupe(ids: list[str] | tuple[str, ...]) -> list[str]:
    seen: dict[str, None] = {}
    for i in ids:
        seen.setdefault(i, None)
    return list(seen)


def _values(var: str, ids: list[str]) -> str:
    for i in ids:
        if not is_qid(i):
            raise QueryBuildError(f"{i!r} is not a Q-id")
    return f"  VALUES ?{var} {{ {' '.join('wd:' + i for i in ids)} }}"


def _class_pattern(var: str, class_label: str) -> str:
    qid, transitive, _ = ENTITY_CLASSES[class_label]
    path = "wdt:P31/wdt:P279*" if transitive else "wdt:P31"
    return f"  ?{var} {path} wd:{qid} ."


def build_harvest_query(
    spec: PredicateSpec,
    region: Region,
    page_size: int = DEFAULT_PAGE_SIZE,
    page: int = 0,
) -> SparqlQuery:
    """Stage-1 query: region-filtered (subject, object, sitelink) rows.

    Sitelinks are restricted to the region's Wikipedia sites plus English
    and fetched in the same round trip.
    """
    if not region.countries:
        raise QueryBuildError("region has no countries")
    if page < 0:
        raise QueryBuildError("page must be non-negative")
    country_ids = list(region.country_ids)
    _, _, location_prop = ENTITY_CLASSES[spec.subject_class]

    lines = ["SELECT DISTINCT ?subject ?object ?sitelink WHERE {"]
    direct_subjects = (
        spec.region_filter_mode == "subject_location" and location_prop is None
    )
    if direct_subjects:
        # Subjects of this class are countries themselves: enumerate them.
        lines.append(_values("subject", country_ids))
    else:
        lines.append(_values("regionCountry", country_ids))
    lines.append(f"  ?subject wdt:{spec.predicate_id} ?object .")
    if not direct_subjects:
        lines.append(_class_pattern("subject", spec.subject_class))
        if spec.region_filter_mode == "subject_citizenship":
            lines.append("  ?subject wdt:P27 ?regionCountry .")
        else:
            lines.append(f"  ?subject wdt:{location_prop} ?regionCountry .")
    lines.append(_class_pattern("object", spec.object_class))
    sites = " ".join(f"<https://{code}.wikipedia.org/>" for code in region.site_codes())
    lines.append("  OPTIONAL {")
    lines.append(f"    VALUES ?sitelinkTarget {{ {sites} }}")
    lines.append("    ?sitelink schema:about ?subject .")
    lines.append("    ?sitelink schema:isPartOf ?sitelinkTarget .")
    lines.append("  }")
    lines.append("}")
    lines.append("ORDER BY ?subject ?object ?sitelink")
    lines.append(f"LIMIT {page_size} OFFSET {page * page_size}")
    text = _PREFIXES + "\n".join(lines) + "\n"
    return SparqlQuery(text=text, kind="harvest", page_size=page_size, offset=page * page_size)


def build_all_objects_query(subject_ids: list[str], predicate_id: str) -> SparqlQuery:
    """Stage-3 query: every object of the predicate for the given subjects,
    with no class or region restriction on the objects."""
    if not subject_ids:
        raise QueryBuildError("all-objects query needs at least one subject")
    if not is_pid(predicate_id):
        raise QueryBuildError(f"{predicate_id!r} is not a P-id")
    ids = _dedupe(subject_ids)
    if len(ids) > MAX_PAGE_SIZE:
        raise QueryBuildError(
            f"{len(ids)} subjects exceed the {MAX_PAGE_SIZE}-id limit; chunk the request"
        )
    text = (
        _PREFIXES
        + "SELECT ?subject ?object WHERE {\n"
        + _values("subject", ids)
        + "\n"
        + f"  ?subject wdt:{predicate_id} ?object .\n"
        + "}\n"
        + "ORDER BY ?subject ?object\n"
    )
    return SparqlQuery(text=text, kind="all_objects")


def build_labels_query(entity_ids: list[str], languages: list[str] | tuple[str, ...]) -> SparqlQuery:
    """Stage-4 query: (entity, language, label) rows for the requested languages."""
    if not entity_ids:
        raise QueryBuildError("labels query needs at least one entity")
    if not languages:
        raise QueryBuildError("labels query needs at least one language")
    ids = _dedupe(entity_ids)
    if len(ids) > MAX_PAGE_SIZE:
        raise QueryBuildError(
            f"{len(ids)} entities exceed the {MAX_PAGE_SIZE}-id limit; chunk the request"
        )
    langs = ", ".join(f'"{code}"' for code in languages)
    text = (
        _PREFIXES
        + "SELECT ?entity ?language ?label WHERE {\n"
        + _values("entity", ids)
        + "\n"
        + "  ?entity rdfs:label ?label .\n"
        + "  BIND(LANG(?label) AS ?language)\n"
        + f"  FILTER(?language IN ({langs}))\n"
        + "}\n"
        + "ORDER BY ?entity ?language\n"
    )
    return SparqlQuery(text=text, kind="labels")


def build_subclass_edges_query(object_ids: list[str]) -> SparqlQuery:
    """All (child, parent) subclass edges on the upward paths from the ids."""
    if not object_ids:
        raise QueryBuildError("subclass-edges query needs at least one object")
    ids = _dedupe(object_ids)
    if len(ids) > MAX_PAGE_SIZE:
        raise QueryBuildError(
            f"{len(ids)} objects exceed the {MAX_PAGE_SIZE}-id limit; chunk the request"
        )
    text = (
        _PREFIXES
        + "SELECT DISTINCT ?child ?parent WHERE {\n"
        + _values("object", ids)
        + "\n"
        + "  ?object wdt:P279* ?child .\n"
        + "  ?child wdt:P279 ?parent .\n"
        + "}\n"
        + "ORDER BY ?child ?parent\n"
    )
    return SparqlQuery(text=text, kind="subclass_edges")


def build_territory_chain_query(place_ids: list[str]) -> SparqlQuery:
    """Transitive administrative-territory ancestors for each place."""
    if not place_ids:
        raise QueryBuildError("territory-chain query needs at least one place")
    ids = _dedupe(place_ids)
    if len(ids) > MAX_PAGE_SIZE:
        raise QueryBuildError(
            f"{len(ids)} places exceed the {MAX_PAGE_SIZE}-id limit; chunk the request"
        )
    text = (
        _PREFIXES
        + "SELECT DISTINCT ?place ?ancestor WHERE {\n"
        + _values("place", ids)
        + "\n"
        + "  ?place wdt:P131+ ?ancestor .\n"
        + "}\n"
        + "ORDER BY ?place ?ancestor\n"
    )
    return SparqlQuery(text=text, kind="territory_chain")
