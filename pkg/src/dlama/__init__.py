"""DLAMA: culturally balanced factual-triple benchmarks from Wikidata.

The package covers the full workflow: declarative region/predicate
configuration, SPARQL query generation, cached harvesting, the five-stage
curation pipeline, line-delimited benchmark/prediction files, and the
evaluation metrics (P@1, object entropy, Western-share audit, substring
QA scoring).
"""

__version__ = "0.1.0"
