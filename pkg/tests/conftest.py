import json
from pathlib import Path

import pytest

from parsekit.pipeline import ModelRegistry, default_manifest_path

DATA_DIR = Path(__file__).parent / "data"

FULL_ID = "LEM_POS_NER_SRL_DEP_SDP_CON_AMR_DCR_EN"
SEVEN_TASK_ID = "LEM_POS_NER_DEP_SDP_CON_AMR_EN"
COREF_ID = "DOC_COREF_EN"

GOLD_TOKENS = ["Emory", "NLP", "is", "in", "Atlanta"]
GOLD_TOKENS_2 = ["It", "is", "founded", "in", "2014"]


@pytest.fixture(scope="session")
def registry() -> ModelRegistry:
    return ModelRegistry(default_manifest_path())


@pytest.fixture(scope="session")
def full_pipeline(registry):
    return registry.load(FULL_ID)


@pytest.fixture(scope="session")
def lexicon() -> dict:
    path = default_manifest_path().parent / "lexicon_en.json"
    return json.loads(path.read_text("utf-8"))


def read_lemma_pairs() -> list[tuple[str, str]]:
    lines = (DATA_DIR / "lemma_pairs.tsv").read_text("utf-8").splitlines()
    return [tuple(line.split("\t")) for line in lines if line]
