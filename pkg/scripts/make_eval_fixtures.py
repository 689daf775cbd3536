"""Write the bundled evaluation fixtures:

- tests/data/subclass_fixture.json: a 23-node language taxonomy with one
  deliberate classification cycle, used by the augmentation property tests.
- tests/data/bias_dump.jsonl + bias_entities.json: a 40-triple dump with
  hand-countable Western/rest/unknown splits for the bias audit.

Usage: python scripts/make_eval_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "tests" / "data"

NODES = {
    "Q7000001": ("American English", "الإنجليزية الأمريكية"),
    "Q7000002": ("British English", "الإنجليزية البريطانية"),
    "Q7000003": ("English", "الإنجليزية"),
    "Q7000004": ("West Germanic", "الجرمانية الغربية"),
    "Q7000005": ("Germanic", "الجرمانية"),
    "Q7000006": ("Indo-European", "الهندية الأوروبية"),
    "Q7000007": ("Egyptian Arabic", "العربية المصرية"),
    "Q7000008": ("Levantine Arabic", "العربية الشامية"),
    "Q7000009": ("Arabic", "العربية"),
    "Q7000010": ("Semitic", "السامية"),
    "Q7000011": ("Afro-Asiatic", "الأفروآسيوية"),
    "Q7000012": ("Spanish", "الإسبانية"),
    "Q7000013": ("Romance", "الرومانسية"),
    "Q7000014": ("French", "الفرنسية"),
    "Q7000015": ("Quebec French", "الفرنسية الكيبيكية"),
    "Q7000016": ("Italic", "الإيطاليقية"),
    "Q7000017": ("Swiss German", "الألمانية السويسرية"),
    "Q7000018": ("German", "الألمانية"),
    "Q7000019": ("Austrian German", "الألمانية النمساوية"),
    "Q7000020": ("Maltese", "المالطية"),
    "Q7000021": ("Serbian", "الصربية"),
    "Q7000022": ("Serbo-Croatian", "الصربوكرواتية"),
    "Q7000023": ("South Slavic", "السلافية الجنوبية"),
}

EDGES = [
    ["Q7000001", "Q7000003"],
    ["Q7000002", "Q7000003"],
    ["Q7000003", "Q7000004"],
    ["Q7000004", "Q7000005"],
    ["Q7000005", "Q7000006"],
    ["Q7000007", "Q7000009"],
    ["Q7000008", "Q7000009"],
    ["Q7000009", "Q7000010"],
    ["Q7000010", "Q7000011"],
    ["Q7000012", "Q7000013"],
    ["Q7000014", "Q7000013"],
    ["Q7000015", "Q7000014"],
    ["Q7000013", "Q7000016"],
    ["Q7000016", "Q7000006"],
    ["Q7000017", "Q7000018"],
    ["Q7000019", "Q7000018"],
    ["Q7000018", "Q7000004"],
    ["Q7000020", "Q7000010"],
    # Two classification conventions pointing at each other: a cycle.
    ["Q7000021", "Q7000022"],
    ["Q7000022", "Q7000021"],
    ["Q7000022", "Q7000023"],
    ["Q7000023", "Q7000006"],
]

WESTERN = ["Q142", "Q183", "Q30", "Q145", "Q38"]
REST = ["Q79", "Q17", "Q155", "Q148", "Q796"]

# (subject, predicate, object, subject countries or None, object known?)
P27_ROWS = [
    ("QP001", "Q142", ["Q142"]), ("QP002", "Q79", ["Q79"]),
    ("QP003", "Q79", ["Q79", "Q142"]), ("QP004", "Q17", ["Q17"]),
    ("QP005", "Q30", ["Q30"]), ("QP006", "Q148", ["Q148"]),
    ("QP007", "Q145", ["Q145"]), ("QP008", "Q155", ["Q155"]),
    ("QP009", "Q38", ["Q38"]), ("QP010", "Q796", ["Q796"]),
    ("QP011", "Q183", ["Q183"]), ("QP012", "Q79", ["Q79"]),
    ("QP013", "Q142", ["Q142"]), ("QP014", "Q17", ["Q17"]),
    ("QP015", "Q30", ["Q30"]), ("QP016", "QX999", None),
    ("QP017", "Q145", ["Q145"]), ("QP018", "Q38", ["Q38"]),
    ("QP019", "Q183", ["Q183"]), ("QP020", "Q142", ["Q142"]),
]

P17_ROWS = [
    ("QL001", "Q142", ["Q142"]), ("QL002", "Q79", ["Q79"]),
    ("QL003", "Q17", ["Q17"]), ("QL004", "Q30", ["Q30"]),
    ("QL005", "Q148", ["Q148"]), ("QL006", "Q155", ["Q155"]),
    ("QL007", "Q145", ["Q145"]), ("QL008", "Q796", ["Q796"]),
    ("QL009", "Q38", ["Q38"]), ("QL010", "Q79", ["Q79"]),
    ("QL011", "Q183", ["Q183"]), ("QL012", "Q17", ["Q17"]),
    ("QL013", "Q148", ["Q148"]), ("QL014", "Q30", ["Q30"]),
    ("QL015", "Q155", ["Q155"]), ("QL016", "QX998", None),
    ("QL017", "QX997", None), ("QL018", "Q142", ["Q142"]),
    ("QL019", "Q79", ["Q79"]), ("QL020", "Q145", ["Q145"]),
]


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)

    fixture = {
        "nodes": {qid: {"en": en, "ar": ar} for qid, (en, ar) in NODES.items()},
        "edges": EDGES,
    }
    (DATA / "subclass_fixture.json").write_text(
        json.dumps(fixture, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )

    entity_map: dict[str, list[str]] = {qid: [qid] for qid in WESTERN + REST}
    lines = []
    for predicate, rows in (("P27", P27_ROWS), ("P17", P17_ROWS)):
        for subject, obj, countries in rows:
            lines.append(json.dumps(
                {"subject_id": subject, "predicate_id": predicate, "object_id": obj},
                ensure_ascii=False,
            ))
            if countries is not None:
                entity_map[subject] = countries
    (DATA / "bias_dump.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (DATA / "bias_entities.json").write_text(
        json.dumps(entity_map, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"subclass fixture: {len(NODES)} nodes, {len(EDGES)} edges")
    print(f"bias dump: {len(lines)} triples, {len(entity_map)} mapped entities")


if __name__ == "__main__":
    main()
