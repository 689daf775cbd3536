"""Declarative vocabulary: regions, predicate specs, prompt templates.

Everything here is immutable after load. The three bundled pair
configurations live as JSON files under ``dlama/data`` so that region
membership is pinned and does not drift with Wikidata edits.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .errors import ConfigError

BUILTIN_PAIRS = ("arab_west", "asia_west", "south_america_west")

# Closed set of entity labels a predicate spec may use for its subject/object.
ENTITY_CLASS_LABELS = frozenset(
    {
        "City",
        "Continent",
        "Country",
        "Genre",
        "Instrument",
        "Language",
        "Occupation",
        "Original Network",
        "Person",
        "Piece of Work",
        "Place",
        "Record Label",
    }
)

REGION_FILTER_MODES = ("subject_citizenship", "subject_location")
SORT_KEYS = ("article_size", "edit_count")

_QID_RE = re.compile(r"^Q[0-9]+$")
_PID_RE = re.compile(r"^P[0-9]+$")


def is_qid(value: str) -> bool:
    return isinstance(value, str) and bool(_QID_RE.match(value))


def is_pid(value: str) -> bool:
    return isinstance(value, str) and bool(_PID_RE.match(value))


@dataclass(frozen=True)
class CountryRef:
    wikidata_id: str
    display_name: str

    def __post_init__(self):
        if not is_qid(self.wikidata_id):
            raise ConfigError(f"country id {self.wikidata_id!r} is not a Q-id")
        if not self.display_name:
            raise ConfigError("country display_name must be non-empty")


@dataclass(frozen=True)
class Region:
    """A named culture proxy: an ordered set of countries plus the
    Wikipedia sites expected to hold facts about each of them."""

    name: str
    countries: tuple[CountryRef, ...]
    wikipedia_sites: dict[str, tuple[str, ...]] = field(hash=False)

    def __post_init__(self):
        if not self.countries:
            raise ConfigError(f"region {self.name!r} has no countries")
        ids = [c.wikidata_id for c in self.countries]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"region {self.name!r} has duplicate country ids")
        for cid in ids:
            sites = self.wikipedia_sites.get(cid, ())
            if not sites:
                raise ConfigError(f"country {cid} in region {self.name!r} has no Wikipedia site")
            if "en" not in sites:
                raise ConfigError(f"country {cid} in region {self.name!r} is missing the 'en' site")

    @property
    def country_ids(self) -> tuple[str, ...]:
        return tuple(c.wikidata_id for c in self.countries)

    def site_codes(self) -> tuple[str, ...]:
        """All site codes used by this region, English included, sorted."""
        codes = {"en"}
        for sites in self.wikipedia_sites.values():
            codes.update(sites)
        return tuple(sorted(codes))


@dataclass(frozen=True)
class PredicateSpec:
    """One Wikidata relation to harvest for a region."""

    predicate_id: str
    subject_class: str
    object_class: str
    region_filter_mode: str
    languages: tuple[str, ...]
    max_triples: int = 1000
    sort_key: str = "article_size"

    def __post_init__(self):
        if not is_pid(self.predicate_id):
            raise ConfigError(f"predicate id {self.predicate_id!r} is not a P-id")
        for cls in (self.subject_class, self.object_class):
            if cls not in ENTITY_CLASS_LABELS:
                raise ConfigError(f"unknown entity class label {cls!r}")
        if self.region_filter_mode not in REGION_FILTER_MODES:
            raise ConfigError(f"unknown region filter mode {self.region_filter_mode!r}")
        if not self.languages:
            raise ConfigError(f"predicate {self.predicate_id} has no languages")
        if self.max_triples <= 0:
            raise ConfigError("max_triples must be positive")
        if self.sort_key not in SORT_KEYS:
            raise ConfigError(f"unknown sort key {self.sort_key!r}")


@dataclass(frozen=True)
class PromptTemplate:
    """Cloze pattern with [X]/[Y] slots, plus an optional question form."""

    predicate_id: str
    language: str
    pattern: str
    question_pattern: str | None = None


def validate_template(t: PromptTemplate) -> list[str]:
    """Return the list of broken template rules (empty when valid)."""
    violations = []
    n_x = t.pattern.count("[X]")
    n_y = t.pattern.count("[Y]")
    if n_x == 0:
        violations.append("pattern is missing the [X] placeholder")
    elif n_x > 1:
        violations.append("pattern has a duplicate [X] placeholder")
    if n_y == 0:
        violations.append("pattern is missing the [Y] placeholder")
    elif n_y > 1:
        violations.append("pattern has a duplicate [Y] placeholder")
    if t.question_pattern is not None:
        q_x = t.question_pattern.count("[X]")
        if q_x == 0:
            violations.append("question_pattern is missing the [X] placeholder")
        elif q_x > 1:
            violations.append("question_pattern has a duplicate [X] placeholder")
        if "[Y]" in t.question_pattern:
            violations.append("question_pattern must not contain [Y]")
    if not is_pid(t.predicate_id):
        violations.append(f"predicate id {t.predicate_id!r} is not a P-id")
    if not t.language:
        violations.append("language must be non-empty")
    return violations


# The 20 relation predicates every pair configuration must carry.
SUPPORTED_PREDICATES = (
    "P17", "P19", "P20", "P27", "P30", "P36", "P37", "P47", "P103", "P106",
    "P136", "P190", "P264", "P364", "P449", "P495", "P530", "P1303", "P1376",
    "P1412",
)


@dataclass(frozen=True)
class PairConfig:
    """Two contrasting regions plus the predicates and templates to probe."""

    name: str
    region_a: Region
    region_b: Region
    predicates: tuple[PredicateSpec, ...]
    templates: tuple[PromptTemplate, ...]

    def __post_init__(self):
        shared = set(self.region_a.country_ids) & set(self.region_b.country_ids)
        if shared:
            raise ConfigError(f"pair {self.name!r}: regions share countries {sorted(shared)}")
        pids = tuple(p.predicate_id for p in self.predicates)
        if sorted(pids) != sorted(SUPPORTED_PREDICATES):
            raise ConfigError(
                f"pair {self.name!r} must define exactly the {len(SUPPORTED_PREDICATES)} "
                f"supported predicates, got {len(pids)}"
            )
        for t in self.templates:
            problems = validate_template(t)
            if problems:
                raise ConfigError(f"template {t.predicate_id}/{t.language}: {'; '.join(problems)}")
        # Every predicate must be promptable in every language it requests.
        have = {(t.predicate_id, t.language) for t in self.templates}
        for spec in self.predicates:
            for lang in spec.languages:
                if (spec.predicate_id, lang) not in have:
                    raise ConfigError(
                        f"pair {self.name!r}: no template for {spec.predicate_id} in {lang!r}"
                    )

    @property
    def regions(self) -> tuple[Region, Region]:
        return (self.region_a, self.region_b)

    @property
    def languages(self) -> tuple[str, ...]:
        langs: list[str] = []
        for spec in self.predicates:
            for lang in spec.languages:
                if lang not in langs:
                    langs.append(lang)
        return tuple(langs)

    def spec_for(self, predicate_id: str) -> PredicateSpec:
        for spec in self.predicates:
            if spec.predicate_id == predicate_id:
                return spec
        raise ConfigError(f"pair {self.name!r} has no predicate {predicate_id}")

    def template_for(self, predicate_id: str, language: str) -> PromptTemplate:
        for t in self.templates:
            if t.predicate_id == predicate_id and t.language == language:
                return t
        raise ConfigError(f"no template for {predicate_id} in {language!r}")


# ------------------------------------------------------------------ JSON I/O


def _region_to_dict(region: Region) -> dict:
    return {
        "name": region.name,
        "countries": [
            {"wikidata_id": c.wikidata_id, "display_name": c.display_name}
            for c in region.countries
        ],
        "wikipedia_sites": {cid: list(sites) for cid, sites in region.wikipedia_sites.items()},
    }


def _region_from_dict(data: dict) -> Region:
    try:
        countries = tuple(
            CountryRef(c["wikidata_id"], c["display_name"]) for c in data["countries"]
        )
        sites = {cid: tuple(codes) for cid, codes in data["wikipedia_sites"].items()}
        return Region(name=data["name"], countries=countries, wikipedia_sites=sites)
    except KeyError as exc:
        raise ConfigError(f"region definition is missing field {exc}") from exc


def pair_config_to_dict(config: PairConfig) -> dict:
    return {
        "name": config.name,
        "region_a": _region_to_dict(config.region_a),
        "region_b": _region_to_dict(config.region_b),
        "predicates": [
            {
                "predicate_id": p.predicate_id,
                "subject_class": p.subject_class,
                "object_class": p.object_class,
                "region_filter_mode": p.region_filter_mode,
                "languages": list(p.languages),
                "max_triples": p.max_triples,
                "sort_key": p.sort_key,
            }
            for p in config.predicates
        ],
        "templates": [
            {
                "predicate_id": t.predicate_id,
                "language": t.language,
                "pattern": t.pattern,
                **({"question_pattern": t.question_pattern} if t.question_pattern else {}),
            }
            for t in config.templates
        ],
    }


def pair_config_from_dict(data: dict) -> PairConfig:
    try:
        predicates = tuple(
            PredicateSpec(
                predicate_id=p["predicate_id"],
                subject_class=p["subject_class"],
                object_class=p["object_class"],
                region_filter_mode=p["region_filter_mode"],
                languages=tuple(p["languages"]),
                max_triples=p.get("max_triples", 1000),
                sort_key=p.get("sort_key", "article_size"),
            )
            for p in data["predicates"]
        )
        templates = tuple(
            PromptTemplate(
                predicate_id=t["predicate_id"],
                language=t["language"],
                pattern=t["pattern"],
                question_pattern=t.get("question_pattern"),
            )
            for t in data["templates"]
        )
        return PairConfig(
            name=data["name"],
            region_a=_region_from_dict(data["region_a"]),
            region_b=_region_from_dict(data["region_b"]),
            predicates=predicates,
            templates=templates,
        )
    except KeyError as exc:
        raise ConfigError(f"pair configuration is missing field {exc}") from exc


def load_pair_config(path: str | Path) -> PairConfig:
    """Load a pair configuration from a JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read pair configuration {path}: {exc}") from exc
    return pair_config_from_dict(data)


def save_pair_config(config: PairConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(pair_config_to_dict(config), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def load_builtin_config(pair_name: str) -> PairConfig:
    """Load one of the bundled pair configurations.

    Valid names: arab_west, asia_west, south_america_west.
    """
    if pair_name not in BUILTIN_PAIRS:
        raise ConfigError(
            f"unknown pair {pair_name!r}; valid pairs: {', '.join(BUILTIN_PAIRS)}"
        )
    ref = resources.files("dlama").joinpath(f"data/{pair_name}.json")
    data = json.loads(ref.read_text(encoding="utf-8"))
    return pair_config_from_dict(data)


def with_overrides(
    config: PairConfig,
    max_triples: int | None = None,
    sort_key: str | None = None,
    languages: tuple[str, ...] | None = None,
) -> PairConfig:
    """Apply CLI-level overrides uniformly to every predicate spec."""
    if max_triples is None and sort_key is None and languages is None:
        return config
    specs = []
    for spec in config.predicates:
        kwargs = {}
        if max_triples is not None:
            kwargs["max_triples"] = max_triples
        if sort_key is not None:
            kwargs["sort_key"] = sort_key
        if languages is not None:
            kwargs["languages"] = tuple(languages)
        specs.append(replace(spec, **kwargs))
    return replace(config, predicates=tuple(specs))
