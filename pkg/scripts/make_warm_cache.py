"""Record the bundled warm response cache and benchmark fixtures.

Runs the real pipeline for (arab_west, P30/P36/P37) against the synthetic
endpoint from tests/synthetic_wikidata.py, capturing every response into
tests/data/warm_cache and the resulting benchmark files into
tests/data/benchmarks. Re-run it whenever query generation or the fact
tables change; the offline tests will fail loudly on any drift.

Usage: python scripts/make_warm_cache.py
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from dlama.client import EndpointConfig, HarvestClient
from dlama.pipeline import run_pair
from dlama.regions import load_builtin_config
from dlama.store import write_benchmark

from synthetic_wikidata import FakeFacts, FakeWikidataTransport

AFRICA, ASIA, EUROPE, NORTH_AMERICA, INSULAR_OCEANIA = "Q15", "Q48", "Q46", "Q49", "Q538"

CONTINENTS = {
    AFRICA: ("Africa", "أفريقيا"),
    ASIA: ("Asia", "آسيا"),
    EUROPE: ("Europe", "أوروبا"),
    NORTH_AMERICA: ("North America", "أمريكا الشمالية"),
    INSULAR_OCEANIA: ("Insular Oceania", "أوقيانوسيا الجزرية"),
}

LANGUAGES = {
    "Q13955": ("Arabic", "العربية"),
    "Q1860": ("English", "الإنجليزية"),
    "Q150": ("French", "الفرنسية"),
    "Q188": ("German", "الألمانية"),
    "Q652": ("Italian", "الإيطالية"),
    "Q1321": ("Spanish", "الإسبانية"),
    "Q7411": ("Dutch", "الهولندية"),
    "Q5146": ("Portuguese", "البرتغالية"),
    "Q7026": ("Catalan", "الكتالانية"),
    "Q9142": ("Irish", "الأيرلندية"),
    "Q9051": ("Luxembourgish", "اللوكسمبورغية"),
    "Q9166": ("Maltese", "المالطية"),
    "Q13199": ("Romansh", "الرومانشية"),
    "Q36451": ("Māori", "الماورية"),
    "Q7976": ("American English", "الإنجليزية الأمريكية"),
}

# country id -> (en, ar, capital id, capital en, capital ar, continents, official languages)
ARAB_COUNTRIES = {
    "Q262": ("Algeria", "الجزائر", "Q3561", "Algiers", "الجزائر العاصمة", [AFRICA]),
    "Q398": ("Bahrain", "البحرين", "Q3882", "Manama", "المنامة", [ASIA]),
    "Q970": ("Comoros", "جزر القمر", "Q3856", "Moroni", "موروني", [AFRICA]),
    "Q977": ("Djibouti", "جيبوتي", "Q3604", "Djibouti City", "مدينة جيبوتي", [AFRICA]),
    "Q79": ("Egypt", "مصر", "Q85", "Cairo", "القاهرة", [AFRICA, ASIA]),
    "Q796": ("Iraq", "العراق", "Q1530", "Baghdad", "بغداد", [ASIA]),
    "Q810": ("Jordan", "الأردن", "Q3854", "Amman", "عمان", [ASIA]),
    "Q817": ("Kuwait", "الكويت", "Q35178", "Kuwait City", "مدينة الكويت", [ASIA]),
    "Q822": ("Lebanon", "لبنان", "Q3820", "Beirut", "بيروت", [ASIA]),
    "Q1016": ("Libya", "ليبيا", "Q3579", "Tripoli", "طرابلس", [AFRICA]),
    "Q1025": ("Mauritania", "موريتانيا", "Q3926", "Nouakchott", "نواكشوط", [AFRICA]),
    "Q1028": ("Morocco", "المغرب", "Q3551", "Rabat", "الرباط", [AFRICA]),
    "Q842": ("Oman", "سلطنة عمان", "Q3826", "Muscat", "مسقط", [ASIA]),
    "Q219060": ("State of Palestine", "فلسطين", "Q192508", "Ramallah", "رام الله", [ASIA]),
    "Q846": ("Qatar", "قطر", "Q3861", "Doha", "الدوحة", [ASIA]),
    "Q851": ("Saudi Arabia", "السعودية", "Q3692", "Riyadh", "الرياض", [ASIA]),
    "Q1045": ("Somalia", "الصومال", "Q2449", "Mogadishu", "مقديشو", [AFRICA]),
    "Q1049": ("Sudan", "السودان", "Q1963", "Khartoum", "الخرطوم", [AFRICA]),
    "Q858": ("Syria", "سوريا", "Q3766", "Damascus", "دمشق", [ASIA]),
    "Q948": ("Tunisia", "تونس", "Q3572", "Tunis", "تونس العاصمة", [AFRICA]),
    "Q878": ("United Arab Emirates", "الإمارات العربية المتحدة", "Q1218", "Abu Dhabi", "أبوظبي", [ASIA]),
    "Q805": ("Yemen", "اليمن", "Q2471", "Sana'a", "صنعاء", [ASIA]),
}

# ar=None marks countries without an Arabic label: their triples fall out
# of the Arab-West benchmark at the label-join stage (21 -> 19).
WEST_COUNTRIES = {
    "Q228": ("Andorra", "أندورا", "Q1863", "Andorra la Vella", "أندورا لا فيلا", [EUROPE], ["Q7026"]),
    "Q40": ("Austria", "النمسا", "Q1741", "Vienna", "فيينا", [EUROPE], ["Q188"]),
    "Q31": ("Belgium", "بلجيكا", "Q239", "Brussels", "بروكسل", [EUROPE], ["Q7411", "Q150", "Q188"]),
    "Q16": ("Canada", "كندا", "Q1930", "Ottawa", "أوتاوا", [NORTH_AMERICA], ["Q1860", "Q150"]),
    "Q142": ("France", "فرنسا", "Q90", "Paris", "باريس", [EUROPE], ["Q150"]),
    "Q183": ("Germany", "ألمانيا", "Q64", "Berlin", "برلين", [EUROPE], ["Q188"]),
    "Q27": ("Ireland", "أيرلندا", "Q1761", "Dublin", "دبلن", [EUROPE], ["Q9142", "Q1860"]),
    "Q38": ("Italy", "إيطاليا", "Q220", "Rome", "روما", [EUROPE], ["Q652"]),
    "Q347": ("Liechtenstein", None, "Q1844", "Vaduz", "فادوتس", [EUROPE], ["Q188"]),
    "Q32": ("Luxembourg", "لوكسمبورغ", "Q1842", "Luxembourg City", "مدينة لوكسمبورغ", [EUROPE], ["Q9051", "Q150", "Q188"]),
    "Q233": ("Malta", "مالطا", "Q23800", "Valletta", "فاليتا", [EUROPE], ["Q9166", "Q1860"]),
    "Q235": ("Monaco", "موناكو", "Q45240", "Monaco-Ville", "موناكو فيل", [EUROPE], ["Q150"]),
    "Q55": ("Netherlands", "هولندا", "Q727", "Amsterdam", "أمستردام", [EUROPE], ["Q7411"]),
    "Q664": ("New Zealand", "نيوزيلندا", "Q23661", "Wellington", "ولينغتون", [INSULAR_OCEANIA], ["Q1860", "Q36451"]),
    "Q45": ("Portugal", "البرتغال", "Q597", "Lisbon", "لشبونة", [EUROPE], ["Q5146"]),
    "Q238": ("San Marino", None, "Q1848", "City of San Marino", "مدينة سان مارينو", [EUROPE], ["Q652"]),
    "Q29": ("Spain", "إسبانيا", "Q2807", "Madrid", "مدريد", [EUROPE], ["Q1321"]),
    "Q39": ("Switzerland", "سويسرا", "Q70", "Bern", "برن", [EUROPE], ["Q188", "Q150", "Q652", "Q13199"]),
    "Q145": ("United Kingdom", "المملكة المتحدة", "Q84", "London", "لندن", [EUROPE], ["Q1860"]),
    "Q30": ("United States of America", "الولايات المتحدة", "Q61", "Washington, D.C.", "واشنطن العاصمة", [NORTH_AMERICA], ["Q7976"]),
    "Q408": ("Australia", "أستراليا", "Q3114", "Canberra", "كانبرا", [INSULAR_OCEANIA], ["Q1860"]),
}

ARABIC = "Q13955"


def build_facts() -> FakeFacts:
    facts = FakeFacts()
    for qid, (en, ar) in CONTINENTS.items():
        facts.add_labels(qid, en=en, ar=ar)
    for qid, (en, ar) in LANGUAGES.items():
        facts.add_labels(qid, en=en, ar=ar)
    facts.subclass_parents["Q7976"] = {"Q1860"}  # American English -> English

    for i, (qid, row) in enumerate(sorted(ARAB_COUNTRIES.items())):
        en, ar, capital, cap_en, cap_ar, continents = row
        facts.add_labels(qid, en=en, ar=ar)
        facts.add_labels(capital, en=cap_en, ar=cap_ar)
        facts.add_statement(qid, "P36", capital)
        facts.add_statement(qid, "P30", *continents)
        facts.add_statement(qid, "P37", ARABIC)
        facts.add_article(qid, "en", en, 120_000 + 1000 * i)
        facts.add_article(qid, "ar", ar, 80_000 + 900 * i)

    for i, (qid, row) in enumerate(sorted(WEST_COUNTRIES.items())):
        en, ar, capital, cap_en, cap_ar, continents, languages = row
        labels = {"en": en}
        if ar:
            labels["ar"] = ar
        facts.add_labels(qid, **labels)
        facts.add_labels(capital, en=cap_en, ar=cap_ar)
        facts.add_statement(qid, "P36", capital)
        facts.add_statement(qid, "P30", *continents)
        facts.add_statement(qid, "P37", *languages)
        facts.add_article(qid, "en", en, 150_000 + 1000 * i)
    return facts


def main() -> None:
    cache_dir = ROOT / "tests" / "data" / "warm_cache"
    bench_dir = ROOT / "tests" / "data" / "benchmarks"
    shutil.rmtree(cache_dir, ignore_errors=True)
    shutil.rmtree(bench_dir, ignore_errors=True)
    bench_dir.mkdir(parents=True)

    config = load_builtin_config("arab_west")
    client = HarvestClient(
        EndpointConfig(cache_dir=cache_dir, min_request_interval=0.0),
        transport=FakeWikidataTransport(build_facts()),
    )
    results, _ = run_pair(config, client, augment=True, predicate_ids=["P30", "P36", "P37"])
    for (region, pid), bset in sorted(results.items()):
        path = bench_dir / f"{bset.pair}__{region}__{pid}.jsonl"
        write_benchmark(bset, path)
        print(f"{path.name}: {len(bset.triples)} triples")

    # The raw (unaugmented) variant replays from the same cache.
    raw_results, _ = run_pair(config, client, augment=False, predicate_ids=["P30", "P36", "P37"])
    for (region, pid), bset in sorted(raw_results.items()):
        path = bench_dir / f"{bset.pair}__{region}__{pid}__raw.jsonl"
        write_benchmark(bset, path)
        print(f"{path.name}: {len(bset.triples)} triples")

    n_entries = sum(1 for _ in cache_dir.rglob("*.bin"))
    print(f"cache entries: {n_entries}")


if __name__ == "__main__":
    main()
