"""Freeze the reviewed golden SPARQL texts under tests/data/golden.

The goldens pin query generation byte-for-byte: any change to the
builders must be deliberate and re-reviewed here.

Usage: python scripts/make_golden_queries.py
"""

from __future__ import annotations

from pathlib import Path

from dlama.queries import (
    build_all_objects_query,
    build_harvest_query,
    build_labels_query,
    build_subclass_edges_query,
    build_territory_chain_query,
)
from dlama.regions import load_builtin_config

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "tests" / "data" / "golden"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    config = load_builtin_config("arab_west")
    arab = config.region_a

    goldens = {
        "harvest_P36_arab.rq": build_harvest_query(config.spec_for("P36"), arab),
        "harvest_P27_arab.rq": build_harvest_query(config.spec_for("P27"), arab),
        "territory_chain_P19.rq": build_territory_chain_query(["Q60", "Q23497"]),
        "all_objects_P27.rq": build_all_objects_query(["Q42", "Q1058"], "P27"),
        "labels_ar_en.rq": build_labels_query(["Q79", "Q85"], ["ar", "en"]),
        "subclass_edges_languages.rq": build_subclass_edges_query(["Q7976", "Q1860", "Q13955"]),
    }
    for name, query in goldens.items():
        (OUT / name).write_text(query.text, encoding="utf-8")
        print(name)


if __name__ == "__main__":
    main()
