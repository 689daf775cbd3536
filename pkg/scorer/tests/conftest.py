from pathlib import Path

import pytest

SCORER_ROOT = Path(__file__).resolve().parent.parent
REPO_ROOT = SCORER_ROOT.parent
TINY_MODEL = SCORER_ROOT / "tests" / "data" / "tiny-mlm"
PRIMARY_DATA = REPO_ROOT / "tests" / "data"


@pytest.fixture(scope="session")
def tiny_model_dir() -> Path:
    return TINY_MODEL


@pytest.fixture(scope="session")
def primary_data_dir() -> Path:
    return PRIMARY_DATA


@pytest.fixture(scope="session")
def scorer(tiny_model_dir):
    from dlama_scorer.masked import MaskedScorer, ScorerConfig

    return MaskedScorer(ScorerConfig(model_name=str(tiny_model_dir)))
